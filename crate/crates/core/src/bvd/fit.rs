//! Least-squares BVD fit on log Z.
//!
//! Residuals are ln(Z_model/Z_data): the real part is the log-magnitude
//! misfit, the imaginary part the phase misfit, weighted 1:1. Parameters are
//! solved for in log space (all four stay positive) with Levenberg–Marquardt
//! and an analytic Jacobian.

use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;

use super::{BvdError, BvdParams};
use crate::spectrum::ImpedanceSpectrum;
use crate::thickness_mode::{global_resonance_pair, resonance_pair};

pub const MAX_ITERATIONS: usize = 200;
const PARAM_TOL: f64 = 1e-10;
const DEFAULT_Q: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq)]
pub struct BvdFit {
    pub params: BvdParams,
    /// RMS of ln|Z_model| − ln|Z_data|
    pub residual: f64,
    pub iterations: usize,
}

impl BvdFit {
    /// Key-value report: c0, cm, lm, rm, fs, fp, k2, q, residual.
    pub fn report(&self) -> String {
        let p = &self.params;
        format!(
            "c0 = {:.9e}\ncm = {:.9e}\nlm = {:.9e}\nrm = {:.9e}\nfs = {:.9e}\nfp = {:.9e}\nk2 = {:.9e}\nq = {:.9e}\nresidual = {:.9e}\n",
            p.c0,
            p.cm,
            p.lm,
            p.rm,
            p.fs(),
            p.fp(),
            p.k2(),
            p.q(),
            self.residual
        )
    }
}

fn to_params(x: &Vector4<f64>) -> BvdParams {
    BvdParams {
        c0: x[0].exp(),
        cm: x[1].exp(),
        lm: x[2].exp(),
        rm: x[3].exp(),
    }
}

/// Residual vector [Re, Im] of ln(Z_model/Z_data) per sample.
fn residuals(p: &BvdParams, freqs: &[f64], z: &[Complex64], out: &mut [f64]) {
    for (i, (&f, &zd)) in freqs.iter().zip(z).enumerate() {
        let r = (p.impedance(f) / zd).ln();
        out[2 * i] = r.re;
        out[2 * i + 1] = r.im;
    }
}

fn cost(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// JᵀJ and Jᵀr in log-parameter space.
fn normal_equations(p: &BvdParams, freqs: &[f64], r: &[f64]) -> (Matrix4<f64>, Vector4<f64>) {
    let mut jtj = Matrix4::zeros();
    let mut jtr = Vector4::zeros();
    let j = Complex64::new(0.0, 1.0);
    for (i, &f) in freqs.iter().enumerate() {
        let w = 2.0 * PI * f;
        let zm = Complex64::new(p.rm, w * p.lm - 1.0 / (w * p.cm));
        let ym = 1.0 / zm;
        let y = j * w * p.c0 + ym;
        // d ln Z / d ln p = −p·(dY/dp)/Y, dYm = −Ym²·dZm
        let dy = [
            j * w * p.c0,
            -ym * ym * (1.0 / (j * w * p.cm)) * -1.0,
            -ym * ym * (j * w * p.lm),
            -ym * ym * p.rm,
        ];
        let g: [Complex64; 4] = dy.map(|d| -d / y);
        let rows = [
            Vector4::new(g[0].re, g[1].re, g[2].re, g[3].re),
            Vector4::new(g[0].im, g[1].im, g[2].im, g[3].im),
        ];
        for (k, row) in rows.iter().enumerate() {
            jtj += row * row.transpose();
            jtr += row * r[2 * i + k];
        }
    }
    (jtj, jtr)
}

fn initial_guess(spectrum: &ImpedanceSpectrum) -> Result<BvdParams, BvdError> {
    let (fs, fp) = match resonance_pair(spectrum) {
        Ok(pair) => pair,
        Err(_) => global_resonance_pair(spectrum)?,
    };
    if !(fp > fs) {
        return Err(BvdError::Argument(format!("resonance pair out of order: fs = {fs}, fp = {fp}")));
    }
    let freqs = spectrum.freqs();
    let z = spectrum.z();
    let ratio = (fp / fs).powi(2) - 1.0;

    // Effective capacitance of the lowest samples: C0·(1 + r/(1 − (f/fs)²))
    let n_low = (freqs.len() / 100).clamp(1, 10);
    let mut c0_sum = 0.0;
    let mut used = 0;
    for i in 0..n_low {
        let w = 2.0 * PI * freqs[i];
        let c_eff = -1.0 / (w * z[i].im);
        let x = (freqs[i] / fs).powi(2);
        if c_eff.is_finite() && c_eff > 0.0 && x < 0.99 {
            c0_sum += c_eff / (1.0 + ratio / (1.0 - x));
            used += 1;
        }
    }
    if used == 0 {
        return Err(BvdError::Argument("no capacitive samples below fs to estimate C0".into()));
    }
    let c0 = c0_sum / used as f64;
    let cm = c0 * ratio;
    let wsq = (2.0 * PI * fs).powi(2);
    let lm = 1.0 / (wsq * cm);

    // Q from the 3-dB width of the |Y| peak at fs
    let ymag: Vec<f64> = z.iter().map(|v| 1.0 / v.norm()).collect();
    let ipk = (0..freqs.len())
        .filter(|&i| freqs[i] < fp)
        .max_by(|&a, &b| ymag[a].total_cmp(&ymag[b]))
        .unwrap_or(0);
    let half = ymag[ipk] / 2f64.sqrt();
    let lo = (0..ipk).rev().find(|&i| ymag[i] < half);
    let hi = (ipk + 1..freqs.len()).find(|&i| ymag[i] < half);
    let q = match (lo, hi) {
        (Some(a), Some(b)) => {
            let cross = |i: usize, k: usize| {
                let t = (half - ymag[i]) / (ymag[k] - ymag[i]);
                freqs[i] + t * (freqs[k] - freqs[i])
            };
            let width = cross(b, b - 1) - cross(a, a + 1);
            if width > 0.0 {
                fs / width
            } else {
                DEFAULT_Q
            }
        }
        _ => DEFAULT_Q,
    };
    let rm = (2.0 * PI * fs) * lm / q;
    BvdParams::new(c0, cm, lm, rm)
}

/// Fits a single-branch circuit to `spectrum`, which should cover at least
/// [0.9·fs, 1.1·fp] of the dominant mode.
pub fn bvd_fit(spectrum: &ImpedanceSpectrum) -> Result<BvdFit, BvdError> {
    let p0 = initial_guess(spectrum)?;
    let freqs = spectrum.freqs();
    let z = spectrum.z();
    let n = freqs.len();

    let mut x = Vector4::new(p0.c0.ln(), p0.cm.ln(), p0.lm.ln(), p0.rm.ln());
    let mut r = vec![0.0; 2 * n];
    residuals(&to_params(&x), freqs, z, &mut r);
    let mut c = cost(&r);
    let mut trial = vec![0.0; 2 * n];
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let p = to_params(&x);
        let (jtj, jtr) = normal_equations(&p, freqs, &r);
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj;
            for k in 0..4 {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let Some(step) = a.lu().solve(&(-jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let xn = x + step;
            residuals(&to_params(&xn), freqs, z, &mut trial);
            let cn = cost(&trial);
            if cn.is_finite() && cn <= c {
                x = xn;
                std::mem::swap(&mut r, &mut trial);
                let small = step.amax() < PARAM_TOL;
                c = cn;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                if small {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        // no downhill step at any damping: a numerical minimum
        if !accepted {
            converged = true;
        }
        if converged {
            break;
        }
    }

    let params = to_params(&x);
    let residual = (r.iter().step_by(2).map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    let fit = BvdFit { params, residual, iterations };
    if converged {
        Ok(fit)
    } else {
        Err(BvdError::NotConverged { iterations, best: Box::new(fit) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bvd::{bvd_impedance, bvd_params_from_targets};
    use crate::spectrum::FrequencyGrid;

    fn grid(p: &BvdParams, n: usize) -> Vec<f64> {
        FrequencyGrid::linear(0.9 * p.fs(), 1.1 * p.fp(), n).to_vec().unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a / b - 1.0).abs() < tol
    }

    #[test]
    fn exact_round_trip() {
        let p = bvd_params_from_targets(10.14e6, 0.296, 2643.0, 1.6e-10).unwrap();
        let fit = bvd_fit(&bvd_impedance(&p, &grid(&p, 4001)).unwrap()).unwrap();
        let q = fit.params;
        for (a, b) in [(q.c0, p.c0), (q.cm, p.cm), (q.lm, p.lm), (q.rm, p.rm)] {
            assert!(close(a, b, 1e-6), "{a} vs {b}");
        }
        assert!(fit.residual < 1e-8, "{}", fit.residual);
    }

    // Finite-difference check of the analytic Jacobian.
    #[test]
    fn jacobian_matches_finite_difference() {
        let p = bvd_params_from_targets(5e6, 0.2, 800.0, 1e-9).unwrap();
        let freqs = [4.7e6, 5.0e6, 5.3e6];
        let zd: Vec<Complex64> = freqs.iter().map(|&f| p.impedance(f) * 1.01).collect();
        let mut r = vec![0.0; 6];
        residuals(&p, &freqs, &zd, &mut r);
        let (jtj, jtr) = normal_equations(&p, &freqs, &r);
        let x = Vector4::new(p.c0.ln(), p.cm.ln(), p.lm.ln(), p.rm.ln());
        let h = 1e-6;
        let mut jac = vec![[0.0; 4]; 6];
        for k in 0..4 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let (mut rp, mut rmv) = (vec![0.0; 6], vec![0.0; 6]);
            residuals(&to_params(&xp), &freqs, &zd, &mut rp);
            residuals(&to_params(&xm), &freqs, &zd, &mut rmv);
            for i in 0..6 {
                jac[i][k] = (rp[i] - rmv[i]) / (2.0 * h);
            }
        }
        for a in 0..4 {
            let g: f64 = (0..6).map(|i| jac[i][a] * r[i]).sum();
            assert!((g - jtr[a]).abs() < 1e-6 * (1.0 + g.abs()), "{a}: {g} vs {}", jtr[a]);
            for b in 0..4 {
                let v: f64 = (0..6).map(|i| jac[i][a] * jac[i][b]).sum();
                let scale = (jtj[(a, a)] * jtj[(b, b)]).sqrt();
                assert!((v - jtj[(a, b)]).abs() < 1e-6 * scale, "{a}{b}: {v} vs {}", jtj[(a, b)]);
            }
        }
    }

    #[test]
    fn second_branch_raises_residual() {
        let p = bvd_params_from_targets(10e6, 0.3, 2000.0, 1e-9).unwrap();
        let g = grid(&p, 4001);
        let clean = bvd_fit(&bvd_impedance(&p, &g).unwrap()).unwrap();
        let spur = bvd_params_from_targets(1.05 * p.fs(), 0.01, 2000.0, p.c0).unwrap();
        let z = ImpedanceSpectrum::from_fn(&g, |f| 1.0 / (p.admittance(f) + spur.motional_admittance(f))).unwrap();
        let dirty = match bvd_fit(&z) {
            Ok(fit) => fit,
            Err(BvdError::NotConverged { best, .. }) => *best,
            Err(e) => panic!("{e}"),
        };
        assert!(dirty.residual > clean.residual, "{} vs {}", dirty.residual, clean.residual);
    }

    #[test]
    fn scale_equivariance() {
        let p = bvd_params_from_targets(20e6, 0.15, 1500.0, 2e-10).unwrap();
        let s = 4.0;
        let ps = p.scaled(s).unwrap();
        let g = grid(&p, 3001);
        let a = bvd_fit(&bvd_impedance(&p, &g).unwrap()).unwrap().params;
        let b = bvd_fit(&bvd_impedance(&ps, &g).unwrap()).unwrap().params;
        assert!(close(b.c0, a.c0 * s, 1e-6));
        assert!(close(b.cm, a.cm * s, 1e-6));
        assert!(close(b.lm, a.lm / s, 1e-6));
        assert!(close(b.rm, a.rm / s, 1e-6));
        assert!(close(a.fs(), b.fs(), 1e-9));
    }

    #[test]
    fn capacitor_is_not_fitted() {
        let freqs: Vec<f64> = (1..200).map(|i| i as f64 * 1e5).collect();
        let z = ImpedanceSpectrum::from_fn(&freqs, |f| Complex64::new(0.0, -1.0 / (2.0 * PI * f * 1e-9))).unwrap();
        assert!(matches!(bvd_fit(&z), Err(BvdError::NoResonance(_))));
    }

    #[test]
    fn report_keys() {
        let p = bvd_params_from_targets(10e6, 0.3, 2000.0, 1e-9).unwrap();
        let fit = BvdFit { params: p, residual: 0.0, iterations: 1 };
        let report = fit.report();
        let keys: Vec<&str> = report.lines().map(|l| l.split(" = ").next().unwrap()).collect();
        assert_eq!(keys, ["c0", "cm", "lm", "rm", "fs", "fp", "k2", "q", "residual"]);
    }
}

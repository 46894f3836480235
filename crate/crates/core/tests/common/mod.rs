//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{Matrix3, Matrix6};
use ringbaw::material::{MaterialSet, PiezoMatrix};

/// Voigt index of a tensor index pair (0-based).
fn voigt(i: usize, j: usize) -> usize {
    if i == j {
        i
    } else {
        6 - i - j
    }
}

/// Active rotation matrix Rz(γ)·Rx(β)·Rz(α), angles in degrees, built
/// element by element.
pub fn euler_matrix(alpha: f64, beta: f64, gamma: f64) -> [[f64; 3]; 3] {
    let rz = |a: f64| {
        let (s, c) = a.to_radians().sin_cos();
        [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
    };
    let rx = |a: f64| {
        let (s, c) = a.to_radians().sin_cos();
        [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]]
    };
    let mul = |a: [[f64; 3]; 3], b: [[f64; 3]; 3]| {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        m
    };
    mul(mul(rz(gamma), rx(beta)), rz(alpha))
}

/// Rotation by explicit index contraction:
/// c'_ijkl = R_ip R_jq R_kr R_ls c_pqrs, e'_ijk = R_ip R_jq R_kr e_pqr,
/// ε'_ij = R_ip R_jq ε_pq.
pub fn rotate_by_index(m: &MaterialSet, r: [[f64; 3]; 3]) -> (Matrix6<f64>, PiezoMatrix, Matrix3<f64>) {
    let mut c4 = [[[[0.0; 3]; 3]; 3]; 3];
    let mut e3 = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                e3[i][j][k] = m.piezo_e[(i, voigt(j, k))];
                for l in 0..3 {
                    c4[i][j][k][l] = m.stiffness_ce[(voigt(i, j), voigt(k, l))];
                }
            }
        }
    }
    let mut c = Matrix6::zeros();
    let mut e = PiezoMatrix::zeros();
    let mut eps = Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = 0.0;
            for p in 0..3 {
                for q in 0..3 {
                    acc += r[i][p] * r[j][q] * m.permittivity_eps_s[(p, q)];
                }
            }
            eps[(i, j)] = acc;
            for k in 0..3 {
                let mut acc = 0.0;
                for p in 0..3 {
                    for q in 0..3 {
                        for s in 0..3 {
                            acc += r[i][p] * r[j][q] * r[k][s] * e3[p][q][s];
                        }
                    }
                }
                e[(i, voigt(j, k))] = acc;
                for l in 0..3 {
                    let mut acc = 0.0;
                    for p in 0..3 {
                        for q in 0..3 {
                            for s in 0..3 {
                                for u in 0..3 {
                                    acc += r[i][p] * r[j][q] * r[k][s] * r[l][u] * c4[p][q][s][u];
                                }
                            }
                        }
                    }
                    c[(voigt(i, j), voigt(k, l))] = acc;
                }
            }
        }
    }
    (c, e, eps)
}

/// Rayleigh–Lamb root-finder for a free isotropic plate.
pub struct RayleighLamb {
    /// Longitudinal velocity [m/s]
    pub cl: f64,
    /// Shear velocity [m/s]
    pub cs: f64,
    /// Plate thickness [m]
    pub thickness: f64,
}

/// cos(x·h) for x² of either sign.
fn even_cos(x2: f64, h: f64) -> f64 {
    if x2 >= 0.0 {
        (x2.sqrt() * h).cos()
    } else {
        ((-x2).sqrt() * h).cosh()
    }
}

/// sin(x·h)/x for x² of either sign, continuous through 0.
fn even_sinc(x2: f64, h: f64) -> f64 {
    let x = x2.abs().sqrt();
    if x * h < 1e-8 {
        h
    } else if x2 >= 0.0 {
        (x * h).sin() / x
    } else {
        (x * h).sinh() / x
    }
}

impl RayleighLamb {
    pub fn from_material(m: &MaterialSet, thickness: f64) -> Self {
        RayleighLamb {
            cl: (m.stiffness_ce[(0, 0)] / m.density).sqrt(),
            cs: (m.stiffness_ce[(3, 3)] / m.density).sqrt(),
            thickness,
        }
    }

    /// Pole-free dispersion function of the symmetric (`true`) or
    /// antisymmetric family; real for every (ω, k).
    pub fn dispersion_fn(&self, symmetric: bool, omega: f64, k: f64) -> f64 {
        let h = 0.5 * self.thickness;
        let p2 = (omega / self.cl).powi(2) - k * k;
        let q2 = (omega / self.cs).powi(2) - k * k;
        let b = (q2 - k * k).powi(2);
        if symmetric {
            b * even_cos(p2, h) * even_sinc(q2, h) + 4.0 * k * k * p2 * even_sinc(p2, h) * even_cos(q2, h)
        } else {
            4.0 * k * k * q2 * even_sinc(q2, h) * even_cos(p2, h) + b * even_sinc(p2, h) * even_cos(q2, h)
        }
    }

    /// Lowest `n` Lamb frequencies [Hz] of one family at wavenumber `k`
    /// [1/m]: sign-change scan in ω·t/cs followed by bisection.
    pub fn frequencies(&self, symmetric: bool, k: f64, n: usize) -> Vec<f64> {
        let scale = self.cs / self.thickness;
        let f = |w: f64| self.dispersion_fn(symmetric, w * scale, k);
        let (step, w_max) = (2e-3, 60.0);
        let mut out = Vec::new();
        let mut a = 1e-6;
        let mut fa = f(a);
        while a < w_max && out.len() < n {
            let b = a + step;
            let fb = f(b);
            if fa == 0.0 || fa.signum() != fb.signum() {
                let (mut lo, mut hi, mut flo) = (a, b, fa);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let fm = f(mid);
                    if fm.signum() == flo.signum() && fm != 0.0 {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                    if hi - lo < 1e-14 * hi {
                        break;
                    }
                }
                out.push(0.5 * (lo + hi) * scale / (2.0 * PI));
            }
            a = b;
            fa = fb;
        }
        out
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

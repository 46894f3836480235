//! The three lateral lengths that set the grounded-ring geometry.

use std::f64::consts::PI;

use super::modes::DispersionSolver;
use super::{Bc, DispersionError, Family, SafeOptions, Symmetry};
use crate::material::MaterialSet;

/// Crossings farther than this (relative) from the evaluation frequency are
/// not attributed to it.
pub const CROSSING_WINDOW: f64 = 0.05;

/// kx·t range scanned for the short-circuit S1/A1 crossing.
const CROSSING_SCAN: (f64, f64, usize) = (0.05, 8.0, 160);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicLengths {
    /// Wavelength of the propagating open-circuit S1 solution [m]
    pub lambda_s1_open: f64,
    /// Wavelength at which short-circuit S1 and A1 coincide [m]
    pub lambda_crossing_short: f64,
    /// Decay length of the least attenuated open-circuit A-class
    /// evanescent solution [m]
    pub decay_a1_open: f64,
    /// [Hz]
    pub eval_freq: f64,
}

/// Whatever could be computed when some length is missing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialLengths {
    pub lambda_s1_open: Option<f64>,
    pub lambda_crossing_short: Option<f64>,
    pub decay_a1_open: Option<f64>,
    pub eval_freq: f64,
}

impl CharacteristicLengths {
    /// Key-value report, one `name = value` line per field.
    pub fn report(&self) -> String {
        format!(
            "eval_freq = {:.9e}\nlambda_s1_open = {:.9e}\nlambda_crossing_short = {:.9e}\ndecay_a1_open = {:.9e}\n",
            self.eval_freq, self.lambda_s1_open, self.lambda_crossing_short, self.decay_a1_open
        )
    }
}

impl DispersionSolver {
    /// 2π/kx of the smallest positive real open-circuit root at `freq` [Hz]
    /// that lies on the S1 branch.
    pub fn open_s1_wavelength(&self, freq: f64) -> Result<Option<f64>, DispersionError> {
        let t = self.thickness();
        let mut cands: Vec<f64> = self
            .class_roots(freq, Bc::Open, Symmetry::Symmetric)?
            .into_iter()
            .filter(|r| r.is_real() && r.kx.re * t > 1e-3)
            .map(|r| r.kx.re)
            .collect();
        cands.sort_by(f64::total_cmp);
        for kx in cands {
            let on_s1 = self
                .class_modes(kx, Bc::Open, Symmetry::Symmetric)?
                .iter()
                .any(|m| m.family == Family::S1 && (m.freq / freq - 1.0).abs() < 1e-4);
            if on_s1 {
                return Ok(Some(2.0 * PI / kx));
            }
        }
        Ok(None)
    }

    /// Short-circuit S1/A1 crossing nearest `freq` [Hz] within
    /// [`CROSSING_WINDOW`]: (wavelength [m], crossing frequency [Hz]).
    pub fn short_s1_a1_crossing(&self, freq: f64) -> Result<Option<(f64, f64)>, DispersionError> {
        let t = self.thickness();
        let gap = |xi: f64| -> Result<Option<(f64, f64)>, DispersionError> {
            let s1 = self.family_frequency(xi / t, Bc::Short, Family::S1)?;
            let a1 = self.family_frequency(xi / t, Bc::Short, Family::A1)?;
            Ok(s1.zip(a1).map(|(s, a)| (s - a, 0.5 * (s + a))))
        };
        let (lo, hi, n) = CROSSING_SCAN;
        let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        let mut best: Option<(f64, f64)> = None;
        let mut prev: Option<(f64, f64)> = None;
        for &x in &xs {
            let cur = gap(x)?.map(|(g, _)| (x, g));
            if let (Some((xa, ga)), Some((xb, gb))) = (prev, cur) {
                if ga * gb < 0.0 {
                    let (mut a, mut b, mut g_a) = (xa, xb, ga);
                    while b - a > 1e-10 * b {
                        let m = 0.5 * (a + b);
                        let Some((gm, _)) = gap(m)? else { break };
                        if gm * g_a > 0.0 {
                            a = m;
                            g_a = gm;
                        } else {
                            b = m;
                        }
                    }
                    let xi = 0.5 * (a + b);
                    if let Some((g, f)) = gap(xi)? {
                        // a true crossing closes the gap; a label swap at an
                        // avoided crossing leaves it open
                        let genuine = g.abs() < 1e-6 * f;
                        let near = (f / freq - 1.0).abs() < CROSSING_WINDOW;
                        let closer = best.is_none_or(|(_, fb)| (f - freq).abs() < (fb - freq).abs());
                        if genuine && near && closer {
                            best = Some((2.0 * PI * t / xi, f));
                        }
                    }
                }
            }
            prev = cur;
        }
        Ok(best)
    }

    /// 1/|Im kx| of the least attenuated open-circuit A-class evanescent
    /// root at `freq` [Hz]: the slowest-decaying antisymmetric field outside
    /// a driven region. Polarisation is not filtered because
    /// shear-horizontal and Lamb motion hybridise in coupled cuts.
    pub fn open_a1_decay(&self, freq: f64) -> Result<Option<f64>, DispersionError> {
        Ok(self
            .class_roots(freq, Bc::Open, Symmetry::Antisymmetric)?
            .into_iter()
            .filter(|r| !r.is_real())
            .map(|r| r.decay_length())
            .max_by(f64::total_cmp))
    }

    /// All three lengths at `f_eval` [Hz].
    pub fn characteristic_lengths(&self, f_eval: f64) -> Result<CharacteristicLengths, DispersionError> {
        if !(f_eval > 0.0 && f_eval.is_finite()) {
            return Err(DispersionError::Argument(format!("f_eval must be > 0, got {f_eval}")));
        }
        let partial = PartialLengths {
            lambda_s1_open: self.open_s1_wavelength(f_eval)?,
            lambda_crossing_short: self.short_s1_a1_crossing(f_eval)?.map(|(l, _)| l),
            decay_a1_open: self.open_a1_decay(f_eval)?,
            eval_freq: f_eval,
        };
        match (partial.lambda_s1_open, partial.lambda_crossing_short, partial.decay_a1_open) {
            (Some(a), Some(b), Some(c)) => Ok(CharacteristicLengths {
                lambda_s1_open: a,
                lambda_crossing_short: b,
                decay_a1_open: c,
                eval_freq: f_eval,
            }),
            _ => {
                let mut missing = Vec::new();
                if partial.lambda_s1_open.is_none() {
                    missing.push("lambda_s1_open");
                }
                if partial.lambda_crossing_short.is_none() {
                    missing.push("lambda_crossing_short");
                }
                if partial.decay_a1_open.is_none() {
                    missing.push("decay_a1_open");
                }
                Err(DispersionError::MissingLengths { missing, partial })
            }
        }
    }
}

/// Characteristic lengths of a plate at `f_eval` [Hz].
pub fn characteristic_lengths(
    material: &MaterialSet,
    thickness: f64,
    f_eval: f64,
    options: SafeOptions,
) -> Result<CharacteristicLengths, DispersionError> {
    DispersionSolver::new(material, thickness, options)?.characteristic_lengths(f_eval)
}

//! Butterworth–Van Dyke single-branch resonator circuit: a motional
//! Lm–Rm–Cm branch in parallel with the static capacitance C0.

mod fit;

pub use fit::{bvd_fit, BvdFit, MAX_ITERATIONS};

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::spectrum::{ImpedanceSpectrum, SpectrumError};
use crate::thickness_mode::ThicknessError;

/// Resistance-peak ratio above the ideal curve that counts as a spur.
pub const SPUR_PEAK_RATIO: f64 = 3.0;

#[derive(Debug, Error)]
pub enum BvdError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error("fit failed: no resonance found ({0})")]
    NoResonance(#[from] ThicknessError),
    #[error("fit did not converge in {iterations} iterations (best residual {:.3e})", best.residual)]
    NotConverged { iterations: usize, best: Box<BvdFit> },
}

/// C0 [F], Cm [F], Lm [H], Rm [Ω]; all positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvdParams {
    pub c0: f64,
    pub cm: f64,
    pub lm: f64,
    pub rm: f64,
}

impl BvdParams {
    pub fn new(c0: f64, cm: f64, lm: f64, rm: f64) -> Result<Self, BvdError> {
        for (name, v) in [("c0", c0), ("cm", cm), ("lm", lm), ("rm", rm)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(BvdError::Argument(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(BvdParams { c0, cm, lm, rm })
    }

    /// Series resonance 1/(2π√(Lm·Cm)) [Hz].
    pub fn fs(&self) -> f64 {
        1.0 / (2.0 * PI * (self.lm * self.cm).sqrt())
    }

    /// Parallel resonance fs·√(1 + Cm/C0) [Hz].
    pub fn fp(&self) -> f64 {
        self.fs() * (1.0 + self.cm / self.c0).sqrt()
    }

    /// Q = √(Lm/Cm)/Rm.
    pub fn q(&self) -> f64 {
        (self.lm / self.cm).sqrt() / self.rm
    }

    /// k² from fs and fp.
    pub fn k2(&self) -> f64 {
        k2_ratio(self.fp() / self.fs())
    }

    /// Motional branch admittance.
    pub fn motional_admittance(&self, f: f64) -> Complex64 {
        let w = 2.0 * PI * f;
        Complex64::new(1.0, 0.0) / Complex64::new(self.rm, w * self.lm - 1.0 / (w * self.cm))
    }

    /// Total admittance.
    pub fn admittance(&self, f: f64) -> Complex64 {
        Complex64::new(0.0, 2.0 * PI * f * self.c0) + self.motional_admittance(f)
    }

    pub fn impedance(&self, f: f64) -> Complex64 {
        1.0 / self.admittance(f)
    }

    /// The same resonator with every impedance level divided by `s`:
    /// capacitances ×s, Lm and Rm ÷s. fs, fp and Q are unchanged.
    pub fn scaled(&self, s: f64) -> Result<Self, BvdError> {
        Self::new(self.c0 * s, self.cm * s, self.lm / s, self.rm / s)
    }
}

fn k2_ratio(r: f64) -> f64 {
    PI * PI / 8.0 * (r * r - 1.0)
}

/// Z(f) of the circuit on `freqs`.
pub fn bvd_impedance(p: &BvdParams, freqs: &[f64]) -> Result<ImpedanceSpectrum, BvdError> {
    Ok(ImpedanceSpectrum::from_fn(freqs, |f| p.impedance(f))?)
}

/// k² = (π²/8)·((fp/fs)² − 1).
pub fn k2_from_fs_fp(fs: f64, fp: f64) -> Result<f64, BvdError> {
    if !(fs > 0.0 && fp.is_finite() && fs.is_finite()) || fs > fp {
        return Err(BvdError::Argument(format!("need 0 < fs <= fp, got fs = {fs}, fp = {fp}")));
    }
    Ok(k2_ratio(fp / fs))
}

/// Closed-form circuit with the requested fs, k², Q and C0.
pub fn bvd_params_from_targets(fs: f64, k2: f64, q: f64, c0: f64) -> Result<BvdParams, BvdError> {
    for (name, v) in [("fs", fs), ("q", q), ("c0", c0)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(BvdError::Argument(format!("{name} must be positive, got {v}")));
        }
    }
    let k2_max = 8.0 / (PI * PI);
    if !(k2 > 0.0 && k2 < k2_max) {
        return Err(BvdError::Argument(format!("k2 must lie in (0, 8/pi^2 = {k2_max:.6}), got {k2}")));
    }
    // (fp/fs)² − 1 = 8k²/π² = Cm/C0
    let cm = c0 * k2 / (PI * PI / 8.0);
    let w = 2.0 * PI * fs;
    let lm = 1.0 / (w * w * cm);
    let rm = w * lm / q;
    BvdParams::new(c0, cm, lm, rm)
}

/// Resistance misfit between a measured spectrum and an ideal circuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpuriousDeviation {
    /// RMS of |R_meas − R_ideal| over the band [Ω]
    pub rms: f64,
    /// max |R_meas − R_ideal| [Ω]
    pub max: f64,
    /// Local R_meas maxima exceeding the ratio × R_ideal
    pub peaks: usize,
}

/// [`spurious_deviation_with`] at [`SPUR_PEAK_RATIO`].
pub fn spurious_deviation(
    measured: &ImpedanceSpectrum,
    ideal: &BvdParams,
    band: (f64, f64),
) -> Result<SpuriousDeviation, BvdError> {
    spurious_deviation_with(measured, ideal, band, SPUR_PEAK_RATIO)
}

/// Compares resistance curves over the measured samples inside `band`.
pub fn spurious_deviation_with(
    measured: &ImpedanceSpectrum,
    ideal: &BvdParams,
    band: (f64, f64),
    peak_ratio: f64,
) -> Result<SpuriousDeviation, BvdError> {
    let f = measured.freqs();
    let (lo, hi) = band;
    if !(lo < hi) || lo < f[0] || hi > f[f.len() - 1] {
        return Err(BvdError::Argument(format!(
            "band [{lo}, {hi}] must lie within the measured grid [{}, {}]",
            f[0],
            f[f.len() - 1]
        )));
    }
    let idx: Vec<usize> = (0..f.len()).filter(|&i| f[i] >= lo && f[i] <= hi).collect();
    if idx.is_empty() {
        return Err(BvdError::Argument("band contains no samples".into()));
    }
    let r = measured.resistance();
    let r_ideal: Vec<f64> = f.iter().map(|&x| ideal.impedance(x).re).collect();
    let mut sum = 0.0;
    let mut max: f64 = 0.0;
    for &i in &idx {
        let d = (r[i] - r_ideal[i]).abs();
        sum += d * d;
        max = max.max(d);
    }
    let peaks = idx
        .iter()
        .filter(|&&i| i > 0 && i + 1 < f.len())
        .filter(|&&i| r[i] > r[i - 1] && r[i] >= r[i + 1] && r[i] > peak_ratio * r_ideal[i])
        .count();
    Ok(SpuriousDeviation {
        rms: (sum / idx.len() as f64).sqrt(),
        max,
        peaks,
    })
}

//! One-port reflection data: ingestion, Z↔S11 conversion, Bode Q.

mod bode;
mod touchstone;

pub use bode::{band_summary, bode_q, bode_q_with, fom, BandSummary, Kernel, QSpectrum, INVALID_THRESHOLD};
pub use touchstone::{parse_impedance_csv, parse_touchstone_s1p, read_impedance_csv, read_touchstone_s1p};

use num_complex::Complex64;
use thiserror::Error;

use crate::spectrum::{check_freqs, ImpedanceSpectrum, SpectrumError};

/// Reference impedance used when none is given [Ω].
pub const DEFAULT_Z0: f64 = 50.0;

/// |S11| allowed above 1 before a spectrum is flagged non-passive.
pub const PASSIVITY_SLACK: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SparamsError {
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error("reference impedance must be positive, got {0}")]
    BadZ0(f64),
    #[error("pole in Z/S11 conversion at index {index} (f = {freq} Hz)")]
    Pole { index: usize, freq: f64 },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("no valid Bode Q samples in [{lo}, {hi}] Hz")]
    EmptyBand { lo: f64, hi: f64 },
}

/// S11 on a strictly increasing frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionSpectrum {
    freqs: Vec<f64>,
    s11: Vec<Complex64>,
    z0: f64,
    passivity_excess: bool,
}

impl ReflectionSpectrum {
    /// Builds a spectrum. Samples with |S11| > 1 + [`PASSIVITY_SLACK`] are
    /// kept but raise [`Self::passivity_excess`].
    pub fn new(freqs: Vec<f64>, s11: Vec<Complex64>, z0: f64) -> Result<Self, SparamsError> {
        if !(z0 > 0.0 && z0.is_finite()) {
            return Err(SparamsError::BadZ0(z0));
        }
        if freqs.len() != s11.len() {
            return Err(SpectrumError::LengthMismatch { freqs: freqs.len(), samples: s11.len() }.into());
        }
        check_freqs(&freqs)?;
        if let Some(index) = s11.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(SpectrumError::NonFinite { index }.into());
        }
        let passivity_excess = s11.iter().any(|s| s.norm() > 1.0 + PASSIVITY_SLACK);
        Ok(ReflectionSpectrum { freqs, s11, z0, passivity_excess })
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn s11(&self) -> &[Complex64] {
        &self.s11
    }

    pub fn z0(&self) -> f64 {
        self.z0
    }

    /// True if any |S11| exceeds 1 by more than the numerical slack.
    pub fn passivity_excess(&self) -> bool {
        self.passivity_excess
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }
}

/// S11 = (Z − Z0)/(Z + Z0).
pub fn z_to_s11(z: &ImpedanceSpectrum, z0: f64) -> Result<ReflectionSpectrum, SparamsError> {
    if !(z0 > 0.0 && z0.is_finite()) {
        return Err(SparamsError::BadZ0(z0));
    }
    let mut s = Vec::with_capacity(z.len());
    for (index, (&zi, &f)) in z.z().iter().zip(z.freqs()).enumerate() {
        let den = zi + z0;
        if den == Complex64::new(0.0, 0.0) {
            return Err(SparamsError::Pole { index, freq: f });
        }
        s.push((zi - z0) / den);
    }
    ReflectionSpectrum::new(z.freqs().to_vec(), s, z0)
}

/// Z = Z0·(1 + S11)/(1 − S11).
pub fn s11_to_z(r: &ReflectionSpectrum) -> Result<ImpedanceSpectrum, SparamsError> {
    let mut z = Vec::with_capacity(r.len());
    for (index, (&s, &f)) in r.s11().iter().zip(r.freqs()).enumerate() {
        let den = 1.0 - s;
        if den == Complex64::new(0.0, 0.0) {
            return Err(SparamsError::Pole { index, freq: f });
        }
        z.push(r.z0() * (1.0 + s) / den);
    }
    Ok(ImpedanceSpectrum::new(r.freqs().to_vec(), z)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(z: Complex64) -> ImpedanceSpectrum {
        ImpedanceSpectrum::new(vec![1e6], vec![z]).unwrap()
    }

    #[test]
    fn matched_short_open() {
        let c = |re, im| Complex64::new(re, im);
        assert_eq!(z_to_s11(&one(c(50.0, 0.0)), 50.0).unwrap().s11()[0], c(0.0, 0.0));
        assert_eq!(z_to_s11(&one(c(0.0, 0.0)), 50.0).unwrap().s11()[0], c(-1.0, 0.0));
        let open = z_to_s11(&one(c(1e15, 0.0)), 50.0).unwrap().s11()[0];
        assert!((open - 1.0).norm() < 1e-12);
        let s = z_to_s11(&one(c(0.0, 50.0)), 50.0).unwrap().s11()[0];
        assert!((s - c(0.0, 1.0)).norm() < 1e-15);
        assert!((s.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn poles() {
        let c = Complex64::new(-50.0, 0.0);
        assert!(matches!(z_to_s11(&one(c), 50.0), Err(SparamsError::Pole { index: 0, .. })));
        let r = ReflectionSpectrum::new(vec![1.0], vec![Complex64::new(1.0, 0.0)], 50.0).unwrap();
        assert!(matches!(s11_to_z(&r), Err(SparamsError::Pole { .. })));
        assert!(matches!(z_to_s11(&one(Complex64::new(1.0, 0.0)), 0.0), Err(SparamsError::BadZ0(_))));
    }

    #[test]
    fn passivity_flag() {
        let ok = ReflectionSpectrum::new(vec![1.0], vec![Complex64::new(1.0 + 1e-7, 0.0)], 50.0).unwrap();
        assert!(!ok.passivity_excess());
        let bad = ReflectionSpectrum::new(vec![1.0], vec![Complex64::new(1.01, 0.0)], 50.0).unwrap();
        assert!(bad.passivity_excess());
    }
}

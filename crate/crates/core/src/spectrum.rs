//! Impedance spectra and frequency grids.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SpectrumError {
    #[error("spectrum is empty")]
    Empty,
    #[error("frequency and sample counts differ ({freqs} vs {samples})")]
    LengthMismatch { freqs: usize, samples: usize },
    #[error("frequencies must be positive and finite (index {index}: {value})")]
    BadFrequency { index: usize, value: f64 },
    #[error("frequencies must be strictly increasing (index {index})")]
    NotIncreasing { index: usize },
    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },
    #[error("invalid grid: {0}")]
    Grid(String),
}

pub(crate) fn check_freqs(freqs: &[f64]) -> Result<(), SpectrumError> {
    if freqs.is_empty() {
        return Err(SpectrumError::Empty);
    }
    for (index, &value) in freqs.iter().enumerate() {
        if !(value > 0.0 && value.is_finite()) {
            return Err(SpectrumError::BadFrequency { index, value });
        }
        if index > 0 && value <= freqs[index - 1] {
            return Err(SpectrumError::NotIncreasing { index });
        }
    }
    Ok(())
}

/// Complex impedance on a strictly increasing frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpedanceSpectrum {
    freqs: Vec<f64>,
    z: Vec<Complex64>,
}

impl ImpedanceSpectrum {
    pub fn new(freqs: Vec<f64>, z: Vec<Complex64>) -> Result<Self, SpectrumError> {
        if freqs.len() != z.len() {
            return Err(SpectrumError::LengthMismatch {
                freqs: freqs.len(),
                samples: z.len(),
            });
        }
        check_freqs(&freqs)?;
        if let Some(index) = z.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(SpectrumError::NonFinite { index });
        }
        Ok(ImpedanceSpectrum { freqs, z })
    }

    /// Samples `f` on `freqs`.
    pub fn from_fn(freqs: &[f64], f: impl Fn(f64) -> Complex64) -> Result<Self, SpectrumError> {
        let z = freqs.iter().map(|&x| f(x)).collect();
        Self::new(freqs.to_vec(), z)
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn z(&self) -> &[Complex64] {
        &self.z
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn magnitude(&self) -> Vec<f64> {
        self.z.iter().map(|z| z.norm()).collect()
    }

    /// Real part R(ω).
    pub fn resistance(&self) -> Vec<f64> {
        self.z.iter().map(|z| z.re).collect()
    }

    /// CSV with header `freq_hz,re_z,im_z`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("freq_hz,re_z,im_z\n");
        for (f, z) in self.freqs.iter().zip(&self.z) {
            s.push_str(&format!("{f:.12e},{:.12e},{:.12e}\n", z.re, z.im));
        }
        s
    }
}

/// Point spacing of a [`FrequencyGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridScale {
    #[default]
    Linear,
    Log,
}

/// `points` frequencies from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub scale: GridScale,
}

impl FrequencyGrid {
    pub fn linear(start: f64, stop: f64, points: usize) -> Self {
        FrequencyGrid { start, stop, points, scale: GridScale::Linear }
    }

    pub fn log(start: f64, stop: f64, points: usize) -> Self {
        FrequencyGrid { start, stop, points, scale: GridScale::Log }
    }

    pub fn validate(&self) -> Result<(), SpectrumError> {
        if self.points < 2 {
            return Err(SpectrumError::Grid(format!("need at least 2 points, got {}", self.points)));
        }
        if !(self.start > 0.0 && self.stop.is_finite() && self.stop > self.start) {
            return Err(SpectrumError::Grid(format!(
                "need 0 < start < stop, got start = {}, stop = {}",
                self.start, self.stop
            )));
        }
        Ok(())
    }

    pub fn to_vec(&self) -> Result<Vec<f64>, SpectrumError> {
        self.validate()?;
        let n = self.points;
        let last = (n - 1) as f64;
        let v = match self.scale {
            GridScale::Linear => (0..n)
                .map(|i| self.start + (self.stop - self.start) * i as f64 / last)
                .collect(),
            GridScale::Log => {
                let (a, b) = (self.start.ln(), self.stop.ln());
                (0..n).map(|i| (a + (b - a) * i as f64 / last).exp()).collect()
            }
        };
        let mut v: Vec<f64> = v;
        v[0] = self.start;
        v[n - 1] = self.stop;
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unsorted() {
        let z = vec![Complex64::new(1.0, 0.0); 3];
        let err = ImpedanceSpectrum::new(vec![1.0, 3.0, 2.0], z).unwrap_err();
        assert_eq!(err, SpectrumError::NotIncreasing { index: 2 });
    }

    #[test]
    fn rejects_length_mismatch_and_nan() {
        assert!(ImpedanceSpectrum::new(vec![1.0], vec![]).is_err());
        let err = ImpedanceSpectrum::new(vec![1.0], vec![Complex64::new(f64::NAN, 0.0)]).unwrap_err();
        assert_eq!(err, SpectrumError::NonFinite { index: 0 });
        assert!(ImpedanceSpectrum::new(vec![0.0], vec![Complex64::new(1.0, 0.0)]).is_err());
    }

    #[test]
    fn grids() {
        let g = FrequencyGrid::linear(1.0, 2.0, 5).to_vec().unwrap();
        assert_eq!(g, vec![1.0, 1.25, 1.5, 1.75, 2.0]);
        let g = FrequencyGrid::log(1.0, 100.0, 3).to_vec().unwrap();
        assert!((g[1] - 10.0).abs() < 1e-12);
        assert!(FrequencyGrid::linear(1.0, 2.0, 1).to_vec().is_err());
        assert!(FrequencyGrid::linear(2.0, 1.0, 10).to_vec().is_err());
    }

    #[test]
    fn csv_header() {
        let s = ImpedanceSpectrum::new(vec![1.0], vec![Complex64::new(2.0, -3.0)]).unwrap();
        assert!(s.to_csv().starts_with("freq_hz,re_z,im_z\n"));
    }
}

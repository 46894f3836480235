//! Bode quality factor Q(ω) = ω·|dS11/dω| / (1 − |S11|²).

use num_complex::Complex64;

use super::{ReflectionSpectrum, SparamsError};

/// Samples with 1 − |S11|² below this are reported invalid.
pub const INVALID_THRESHOLD: f64 = 1e-9;

/// Smoothing kernel applied over the sliding window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    #[default]
    Mean,
    Median,
}

impl std::fmt::Display for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Kernel::Mean => "mean",
            Kernel::Median => "median",
        })
    }
}

impl std::str::FromStr for Kernel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mean" => Ok(Kernel::Mean),
            "median" => Ok(Kernel::Median),
            _ => Err(format!("unknown kernel '{s}' (expected mean or median)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QSpectrum {
    pub freqs: Vec<f64>,
    /// `None` where 1 − |S11|² < [`INVALID_THRESHOLD`]
    pub q: Vec<Option<f64>>,
    pub window: usize,
    pub kernel: Kernel,
}

impl QSpectrum {
    /// CSV `freq_hz,q_bode`; invalid samples are written as `nan`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("freq_hz,q_bode\n");
        for (f, q) in self.freqs.iter().zip(&self.q) {
            match q {
                Some(v) => s.push_str(&format!("{f:.12e},{v:.9e}\n")),
                None => s.push_str(&format!("{f:.12e},nan\n")),
            }
        }
        s
    }
}

/// dS/df by 3-point differences on a non-uniform grid, 2-point at the ends.
fn derivative(f: &[f64], s: &[Complex64]) -> Vec<Complex64> {
    let n = f.len();
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    d[0] = (s[1] - s[0]) / (f[1] - f[0]);
    d[n - 1] = (s[n - 1] - s[n - 2]) / (f[n - 1] - f[n - 2]);
    for i in 1..n - 1 {
        let h1 = f[i] - f[i - 1];
        let h2 = f[i + 1] - f[i];
        d[i] = s[i - 1] * (-h2 / (h1 * (h1 + h2)))
            + s[i] * ((h2 - h1) / (h1 * h2))
            + s[i + 1] * (h1 / (h2 * (h1 + h2)));
    }
    d
}

/// Pointwise Bode Q smoothed with the mean over a centred `window`.
pub fn bode_q(r: &ReflectionSpectrum, window: usize) -> Result<QSpectrum, SparamsError> {
    bode_q_with(r, window, Kernel::Mean)
}

/// Pointwise Bode Q smoothed over a centred `window` of samples (shrinking
/// at the edges). Invalid samples stay invalid and are skipped by the
/// kernel. `window = 1` returns the raw estimate.
pub fn bode_q_with(r: &ReflectionSpectrum, window: usize, kernel: Kernel) -> Result<QSpectrum, SparamsError> {
    let n = r.len();
    if n < 3 {
        return Err(SparamsError::Argument(format!("Bode Q needs at least 3 samples, got {n}")));
    }
    if window == 0 {
        return Err(SparamsError::Argument("smoothing window must be at least 1".into()));
    }
    let f = r.freqs();
    let s = r.s11();
    let d = derivative(f, s);
    // ω·|dS/dω| = f·|dS/df|
    let raw: Vec<Option<f64>> = (0..n)
        .map(|i| {
            let denom = 1.0 - s[i].norm_sqr();
            (denom >= INVALID_THRESHOLD).then(|| f[i] * d[i].norm() / denom)
        })
        .collect();
    let q = if window == 1 { raw } else { smooth(&raw, window, kernel) };
    Ok(QSpectrum { freqs: f.to_vec(), q, window, kernel })
}

fn smooth(raw: &[Option<f64>], window: usize, kernel: Kernel) -> Vec<Option<f64>> {
    let n = raw.len();
    let before = (window - 1) / 2;
    let after = window / 2;
    let mut buf = Vec::with_capacity(window);
    (0..n)
        .map(|i| {
            raw[i]?;
            let lo = i.saturating_sub(before);
            let hi = (i + after).min(n - 1);
            buf.clear();
            buf.extend(raw[lo..=hi].iter().flatten().copied());
            Some(match kernel {
                Kernel::Mean => buf.iter().sum::<f64>() / buf.len() as f64,
                Kernel::Median => {
                    buf.sort_by(f64::total_cmp);
                    let m = buf.len();
                    if m % 2 == 1 {
                        buf[m / 2]
                    } else {
                        0.5 * (buf[m / 2 - 1] + buf[m / 2])
                    }
                }
            })
        })
        .collect()
}

/// In-band summary of a Bode Q spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSummary {
    /// Q interpolated at fs (`None` if a neighbour is invalid)
    pub q_s: Option<f64>,
    /// Largest valid Q strictly inside (fs, fp)
    pub q_max: f64,
    /// Q_max · k²
    pub fom_max: f64,
    pub f_qmax: f64,
}

impl BandSummary {
    pub fn report(&self) -> String {
        let qs = self.q_s.map_or("nan".to_string(), |v| format!("{v:.9e}"));
        format!(
            "q_s = {qs}\nq_max = {:.9e}\nfom_max = {:.9e}\nf_qmax = {:.9e}\n",
            self.q_max, self.fom_max, self.f_qmax
        )
    }
}

/// Figure of merit Q·k².
pub fn fom(q: f64, k2: f64) -> f64 {
    q * k2
}

pub fn band_summary(q: &QSpectrum, k2: f64, fs: f64, fp: f64) -> Result<BandSummary, SparamsError> {
    let f = &q.freqs;
    if f.is_empty() {
        return Err(SparamsError::Argument("empty Q spectrum".into()));
    }
    if !(fs < fp) || fs < f[0] || fp > f[f.len() - 1] {
        return Err(SparamsError::Argument(format!(
            "band [{fs}, {fp}] must be ordered and lie within [{}, {}]",
            f[0],
            f[f.len() - 1]
        )));
    }
    let j = f.partition_point(|&x| x < fs);
    let q_s = if f[j] == fs {
        q.q[j]
    } else {
        match (q.q[j - 1], q.q[j]) {
            (Some(a), Some(b)) => Some(a + (b - a) * (fs - f[j - 1]) / (f[j] - f[j - 1])),
            _ => None,
        }
    };
    let best = (0..f.len())
        .filter(|&i| f[i] > fs && f[i] < fp)
        .filter_map(|i| q.q[i].map(|v| (i, v)))
        .max_by(|a, b| a.1.total_cmp(&b.1));
    let (i, q_max) = best.ok_or(SparamsError::EmptyBand { lo: fs, hi: fp })?;
    Ok(BandSummary {
        q_s,
        q_max,
        fom_max: fom(q_max, k2),
        f_qmax: f[i],
    })
}

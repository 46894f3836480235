//! Branch tracing over a kx sweep and zero-group-velocity search.

use num_complex::Complex64;
use rayon::prelude::*;

use super::modes::{DispersionSolver, GuidedMode};
use super::{Bc, DispersionError, Family, Symmetry};

/// Header of the branch CSV export.
pub const BRANCH_CSV_HEADER: &str = "bc,family,branch,freq_hz,re_kx,im_kx,vg,coupling";

#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    /// [Hz]
    pub freq: f64,
    /// [1/m]; traced branches are real
    pub kx: Complex64,
    /// [m/s], present where kx is real
    pub group_velocity: Option<f64>,
    /// Electric over mechanical stored energy
    pub coupling_weight: f64,
    /// Another branch of the same electrical condition crosses this one
    /// between the previous sample and this one
    pub crossing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionBranch {
    pub bc: Bc,
    pub symmetry: Symmetry,
    pub family: Family,
    /// Rank among the `higher` branches of the same class (0 for named
    /// families)
    pub index: usize,
    /// Ordered by kx (frequency is not monotone on backward-wave segments)
    pub points: Vec<BranchPoint>,
}

impl DispersionBranch {
    /// Label used in CSV output, e.g. `S1` or `higher`.
    pub fn label(&self) -> String {
        self.family.to_string()
    }

    /// Minimum and maximum frequency on the branch [Hz].
    pub fn freq_span(&self) -> (f64, f64) {
        self.points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.freq), hi.max(p.freq)))
    }

    /// Appends this branch as CSV rows (no header).
    pub fn write_csv_rows(&self, out: &mut String) {
        for p in &self.points {
            let vg = p.group_velocity.map_or("nan".to_string(), |v| format!("{v:.9e}"));
            out.push_str(&format!(
                "{},{},{},{:.12e},{:.12e},{:.12e},{},{:.6e}\n",
                self.bc, self.family, self.index, p.freq, p.kx.re, p.kx.im, vg, p.coupling_weight
            ));
        }
    }
}

/// Key identifying a branch within one electrical condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Key {
    symmetry: Symmetry,
    family: Family,
    index: usize,
}

fn keyed(modes: Vec<GuidedMode>) -> Vec<(Key, GuidedMode)> {
    let mut higher = [0usize; 2];
    modes
        .into_iter()
        .map(|m| {
            let slot = usize::from(m.symmetry == Symmetry::Antisymmetric);
            let index = if m.family == Family::Higher {
                higher[slot] += 1;
                higher[slot] - 1
            } else {
                0
            };
            (Key { symmetry: m.symmetry, family: m.family, index }, m)
        })
        .collect()
}

/// Traces all branches in `freq_range` [Hz] over `n_kx` evenly spaced
/// wavenumbers in `kx_range` [1/m].
///
/// Within each symmetry class a Lamb-type mode keeps its family label
/// (S0/S1 or A0/A1 by rank among Lamb-type modes); the remaining modes are
/// numbered as `higher` branches. Points where two branches swap order are
/// flagged as crossings on both branches rather than merged.
pub fn trace_branches(
    solver: &DispersionSolver,
    bc: Bc,
    freq_range: (f64, f64),
    kx_range: (f64, f64),
    n_kx: usize,
) -> Result<Vec<DispersionBranch>, DispersionError> {
    let (f_lo, f_hi) = freq_range;
    let (k_lo, k_hi) = kx_range;
    if !(f_lo >= 0.0 && f_hi > f_lo && f_hi.is_finite()) {
        return Err(DispersionError::Argument(format!("bad frequency range [{f_lo}, {f_hi}]")));
    }
    if !(k_lo >= 0.0 && k_hi > k_lo && k_hi.is_finite()) {
        return Err(DispersionError::Argument(format!("bad kx range [{k_lo}, {k_hi}]")));
    }
    if n_kx < 2 {
        return Err(DispersionError::Argument(format!("need at least 2 kx samples, got {n_kx}")));
    }
    let kxs: Vec<f64> = (0..n_kx).map(|i| k_lo + (k_hi - k_lo) * i as f64 / (n_kx - 1) as f64).collect();
    let per_kx: Vec<Vec<(Key, GuidedMode)>> = kxs
        .par_iter()
        .map(|&kx| -> Result<_, DispersionError> {
            let mut modes = Vec::new();
            for sym in Symmetry::BOTH {
                let m = solver.class_modes(kx, bc, sym)?;
                if m.last().is_some_and(|top| top.freq < f_hi) {
                    return Err(DispersionError::Argument(format!(
                        "n_modes = {} does not reach {f_hi} Hz at kx = {kx}; raise n_modes",
                        solver.options().n_modes
                    )));
                }
                modes.extend(m);
            }
            Ok(keyed(modes))
        })
        .collect::<Result<_, _>>()?;

    // frequency of every key at every sample, for crossing detection
    let mut keys: Vec<Key> = per_kx.iter().flatten().map(|(k, _)| *k).collect();
    keys.sort();
    keys.dedup();
    let freq_of = |i: usize, key: &Key| per_kx[i].iter().find(|(k, _)| k == key).map(|(_, m)| m.freq);

    let mut branches = Vec::new();
    for key in &keys {
        let mut points = Vec::new();
        for i in 0..kxs.len() {
            let Some((_, m)) = per_kx[i].iter().find(|(k, _)| k == key) else {
                continue;
            };
            if m.freq < f_lo || m.freq > f_hi {
                continue;
            }
            let crossing = i > 0
                && freq_of(i - 1, key).is_some_and(|prev| {
                    keys.iter().filter(|o| *o != key).any(|o| match (freq_of(i - 1, o), freq_of(i, o)) {
                        (Some(a), Some(b)) => (prev - a) * (m.freq - b) < 0.0,
                        _ => false,
                    })
                });
            points.push(BranchPoint {
                freq: m.freq,
                kx: Complex64::new(m.kx, 0.0),
                group_velocity: Some(m.group_velocity),
                coupling_weight: m.coupling_weight,
                crossing,
            });
        }
        if !points.is_empty() {
            branches.push(DispersionBranch {
                bc,
                symmetry: key.symmetry,
                family: key.family,
                index: key.index,
                points,
            });
        }
    }
    Ok(branches)
}

/// Mode of `branch`'s family (or numbered higher branch) at real kx.
fn branch_mode(solver: &DispersionSolver, branch: &DispersionBranch, kx: f64) -> Result<GuidedMode, DispersionError> {
    let modes = keyed(solver.class_modes(kx, branch.bc, branch.symmetry)?);
    modes
        .into_iter()
        .find(|(k, _)| k.family == branch.family && k.index == branch.index)
        .map(|(_, m)| m)
        .ok_or_else(|| DispersionError::NotFound(format!("branch {} lost at kx = {kx}", branch.label())))
}

/// Zero-group-velocity point (freq [Hz], kx [1/m]) at nonzero kx: the first
/// sign change of v_g along the traced branch, refined by bisection in kx
/// until the frequency settles to Δf/f < 1e-4 and the kx bracket to 1e-6.
pub fn zgv_point(solver: &DispersionSolver, branch: &DispersionBranch) -> Result<(f64, f64), DispersionError> {
    let t = solver.thickness();
    let pts: Vec<&BranchPoint> = branch
        .points
        .iter()
        .filter(|p| p.kx.re * t > 1e-6 && p.group_velocity.is_some())
        .collect();
    let bracket = pts.windows(2).find(|w| {
        let (a, b) = (w[0].group_velocity.unwrap_or(0.0), w[1].group_velocity.unwrap_or(0.0));
        a * b < 0.0
    });
    let w = bracket.ok_or_else(|| {
        DispersionError::NotFound(format!("{} {} branch has no group-velocity sign change", branch.bc, branch.label()))
    })?;
    let (mut lo, mut hi) = (w[0].kx.re, w[1].kx.re);
    let s_lo = w[0].group_velocity.unwrap_or(0.0).signum();
    let mut f_prev = f64::NAN;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let m = branch_mode(solver, branch, mid)?;
        if m.group_velocity.signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
        let settled = (m.freq / f_prev - 1.0).abs() < 1e-4 && (hi - lo) < 1e-6 * hi;
        f_prev = m.freq;
        if settled {
            break;
        }
    }
    let kx = 0.5 * (lo + hi);
    Ok((branch_mode(solver, branch, kx)?.freq, kx))
}

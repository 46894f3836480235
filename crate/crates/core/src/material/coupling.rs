//! Orientation-dependent material coupling k²_M_ij = e_ij² / (ε^S_ii · c^E_jj).

use std::fmt::Write as _;

use super::{rotate, EulerZXZ, MaterialError, MaterialSet};

/// (field axis i ∈ 1..=3, Voigt stress index j ∈ 1..=6), 1-based as in the
/// usual k_ij notation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CouplingPair {
    field: usize,
    stress: usize,
}

impl CouplingPair {
    pub fn new(field: usize, stress: usize) -> Result<Self, MaterialError> {
        if (1..=3).contains(&field) && (1..=6).contains(&stress) {
            Ok(CouplingPair { field, stress })
        } else {
            Err(MaterialError::BadIndex { field, stress })
        }
    }

    pub fn field(&self) -> usize {
        self.field
    }

    pub fn stress(&self) -> usize {
        self.stress
    }

    /// Column label, e.g. `k2_33`.
    pub fn label(&self) -> String {
        format!("k2_{}{}", self.field, self.stress)
    }
}

/// Material coupling k²_M_ij of `material` in its current frame.
pub fn coupling_coefficient(material: &MaterialSet, pair: CouplingPair) -> f64 {
    let (i, j) = (pair.field - 1, pair.stress - 1);
    let e = material.piezo_e[(i, j)];
    e * e / (material.permittivity_eps_s[(i, i)] * material.stiffness_ce[(j, j)])
}

/// k²_M_ij against rotated-Y-cut angle.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTable {
    pub pairs: Vec<CouplingPair>,
    pub theta_deg: Vec<f64>,
    /// `k2[p][n]`: pair p at theta n
    pub k2: Vec<Vec<f64>>,
    /// Signed e_ij behind each k² value; its sign changes locate zeros.
    pub e_signed: Vec<Vec<f64>>,
}

/// Rotates `material` by (0, 90 − θ, 0) for each θ and evaluates every pair.
/// The grid must be non-empty and strictly monotone.
pub fn coupling_sweep(
    material: &MaterialSet,
    pairs: &[CouplingPair],
    theta_grid: &[f64],
) -> Result<CouplingTable, MaterialError> {
    if theta_grid.is_empty() {
        return Err(MaterialError::Argument("theta grid is empty".into()));
    }
    if pairs.is_empty() {
        return Err(MaterialError::Argument("no coupling pairs requested".into()));
    }
    if theta_grid.iter().any(|t| !t.is_finite()) {
        return Err(MaterialError::Argument("theta grid has non-finite values".into()));
    }
    let inc = theta_grid.windows(2).all(|w| w[1] > w[0]);
    let dec = theta_grid.windows(2).all(|w| w[1] < w[0]);
    if !(inc || dec) {
        return Err(MaterialError::Argument("theta grid must be strictly monotone".into()));
    }
    let mut k2 = vec![Vec::with_capacity(theta_grid.len()); pairs.len()];
    let mut e_signed = vec![Vec::with_capacity(theta_grid.len()); pairs.len()];
    for &theta in theta_grid {
        let m = rotate(material, EulerZXZ::rotated_y_cut(theta));
        for (p, pair) in pairs.iter().enumerate() {
            k2[p].push(coupling_coefficient(&m, *pair));
            e_signed[p].push(m.piezo_e[(pair.field - 1, pair.stress - 1)]);
        }
    }
    Ok(CouplingTable {
        pairs: pairs.to_vec(),
        theta_deg: theta_grid.to_vec(),
        k2,
        e_signed,
    })
}

impl CouplingTable {
    /// Angles where e_ij changes sign, linearly interpolated. Values that are
    /// zero to rounding everywhere (e.g. forbidden by symmetry) yield none.
    pub fn zero_crossings(&self, pair: CouplingPair) -> Vec<f64> {
        let Some(p) = self.pairs.iter().position(|q| *q == pair) else {
            return Vec::new();
        };
        let e = &self.e_signed[p];
        let scale = e.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let tiny = 1e-12 * scale.max(1e-30);
        let mut out = Vec::new();
        for n in 1..e.len() {
            let (a, b) = (e[n - 1], e[n]);
            if a.abs() <= tiny && b.abs() <= tiny {
                continue;
            }
            if a.abs() <= tiny && n == 1 {
                out.push(self.theta_deg[0]);
            } else if b.abs() <= tiny {
                out.push(self.theta_deg[n]);
            } else if a.signum() != b.signum() && a.abs() > tiny {
                let (ta, tb) = (self.theta_deg[n - 1], self.theta_deg[n]);
                out.push(ta + (tb - ta) * a / (a - b));
            }
        }
        out
    }

    /// θ of the largest k² for `pair` (grid resolution).
    pub fn argmax(&self, pair: CouplingPair) -> Option<f64> {
        let p = self.pairs.iter().position(|q| *q == pair)?;
        let (n, _) = self.k2[p]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))?;
        Some(self.theta_deg[n])
    }

    /// CSV with header `theta_deg,k2_33,...`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("theta_deg");
        for p in &self.pairs {
            s.push(',');
            s.push_str(&p.label());
        }
        s.push('\n');
        for (n, t) in self.theta_deg.iter().enumerate() {
            let _ = write!(s, "{t}");
            for col in &self.k2 {
                let _ = write!(s, ",{:.12e}", col[n]);
            }
            s.push('\n');
        }
        s
    }
}

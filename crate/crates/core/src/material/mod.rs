//! Anisotropic piezoelectric constant sets.
//!
//! Voigt order is (11, 22, 33, 23, 13, 12). Stiffness is at constant electric
//! field, permittivity at constant strain, piezoelectric constants are the
//! stress form `e`.

mod coupling;
mod database;
mod rotation;

pub use coupling::{coupling_coefficient, coupling_sweep, CouplingPair, CouplingTable};
pub use database::{available_materials, load_material, load_material_file, parse_material, MATERIALS_ENV};
pub use rotation::{bond_matrix, rotate, EulerZXZ};

use nalgebra::{Matrix3, Matrix6, SMatrix};
use thiserror::Error;

/// 3×6 piezoelectric matrix
pub type PiezoMatrix = SMatrix<f64, 3, 6>;

#[derive(Debug, Error)]
pub enum MaterialError {
    #[error("unknown material '{name}' (available: {})", available.join(", "))]
    UnknownMaterial { name: String, available: Vec<String> },
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("{source_name}: missing constant '{key}'")]
    MissingKey { source_name: String, key: String },
    #[error("material '{name}': {message}")]
    Invalid { name: String, message: String },
    #[error("invalid coupling index ({field}, {stress}); field axis must be 1..3 and stress index 1..6")]
    BadIndex { field: usize, stress: usize },
    #[error("{0}")]
    Argument(String),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Full constant set of a piezoelectric (or purely elastic) solid in one
/// coordinate frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialSet {
    pub name: String,
    /// c^E [Pa]
    pub stiffness_ce: Matrix6<f64>,
    /// e [C/m²]
    pub piezo_e: PiezoMatrix,
    /// ε^S [F/m]
    pub permittivity_eps_s: Matrix3<f64>,
    /// [kg/m³]
    pub density: f64,
}

impl MaterialSet {
    /// Builds a set and checks symmetry, positive definiteness and density.
    pub fn new(
        name: impl Into<String>,
        stiffness_ce: Matrix6<f64>,
        piezo_e: PiezoMatrix,
        permittivity_eps_s: Matrix3<f64>,
        density: f64,
    ) -> Result<Self, MaterialError> {
        let m = MaterialSet {
            name: name.into(),
            stiffness_ce,
            piezo_e,
            permittivity_eps_s,
            density,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), MaterialError> {
        let bad = |message: String| MaterialError::Invalid {
            name: self.name.clone(),
            message,
        };
        if !(self.density > 0.0 && self.density.is_finite()) {
            return Err(bad(format!("density must be positive, got {}", self.density)));
        }
        if self.piezo_e.iter().any(|v| !v.is_finite()) {
            return Err(bad("non-finite piezoelectric constant".into()));
        }
        check_spd(&self.stiffness_ce, "stiffness").map_err(bad)?;
        check_spd(&self.permittivity_eps_s, "permittivity").map_err(bad)?;
        Ok(())
    }

    /// True if every piezoelectric constant is exactly zero.
    pub fn is_piezoelectric(&self) -> bool {
        self.piezo_e.iter().any(|&v| v != 0.0)
    }
}

fn check_spd<const N: usize>(
    m: &SMatrix<f64, N, N>,
    what: &str,
) -> Result<(), String> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(format!("non-finite {what} entry"));
    }
    let scale = m.amax();
    if scale == 0.0 {
        return Err(format!("{what} matrix is zero"));
    }
    let asym = (m - m.transpose()).amax();
    if asym > 1e-9 * scale {
        return Err(format!("{what} matrix is not symmetric (max |a_ij - a_ji| = {asym:e})"));
    }
    if m.cholesky().is_none() {
        return Err(format!("{what} matrix is not positive definite"));
    }
    Ok(())
}

/// Voigt index for tensor indices (0-based).
pub(crate) const fn voigt(i: usize, j: usize) -> usize {
    match (i, j) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (1, 2) | (2, 1) => 3,
        (0, 2) | (2, 0) => 4,
        _ => 5,
    }
}

/// Tensor index pair for each Voigt index (0-based).
pub(crate) const VOIGT_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)];

impl MaterialSet {
    /// c_ijkl (0-based tensor indices)
    pub fn c(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.stiffness_ce[(voigt(i, j), voigt(k, l))]
    }

    /// e_ijk (0-based tensor indices)
    pub fn e(&self, i: usize, j: usize, k: usize) -> f64 {
        self.piezo_e[(i, voigt(j, k))]
    }
}

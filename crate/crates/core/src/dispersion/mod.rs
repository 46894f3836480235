//! Lamb-wave dispersion of a piezoelectric plate.
//!
//! The plate normal is axis 3 of the (already rotated) material and waves
//! travel along axis 1. The thickness profile is discretised with
//! semi-analytical finite elements ([`safe`]); the discrete problem is
//! solved either at fixed real kx (a Hermitian eigenproblem giving guided
//! frequencies) or at fixed frequency (a quadratic eigenproblem giving real
//! and complex kx).
//!
//! For a material with a mirror plane normal to axis 1 (trigonal 3m rotated
//! about X, isotropic), a two-fold rotation about axis 1 combined with
//! φ → −φ maps the plate onto itself. Every mode is then exactly even
//! (S: u1 even, u3 odd) or odd (A: u1 odd, u3 even) about the midplane, and
//! the two classes are solved separately.

mod branches;
mod eigen;
mod lengths;
mod modes;
mod safe;

pub use branches::{trace_branches, zgv_point, BranchPoint, DispersionBranch, BRANCH_CSV_HEADER};
pub use lengths::{characteristic_lengths, CharacteristicLengths, PartialLengths};
pub use modes::{complex_kx_at_frequency, guided_frequencies, DispersionSolver, GuidedMode, WavenumberRoot};

use thiserror::Error;

/// Smallest accepted element count.
pub const MIN_ELEMENTS: usize = 8;

/// Default number of quadratic elements through the thickness.
pub const DEFAULT_ELEMENTS: usize = 32;

/// Roots with |Im kx|·t at or above this are discarded.
pub const IM_XI_LIMIT: f64 = 50.0;

#[derive(Debug, Error)]
pub enum DispersionError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("numeric failure: {message} ({diagnostic})")]
    Numeric { message: String, diagnostic: String },
    #[error("not found: {0}")]
    NotFound(String),
    #[error("characteristic lengths incomplete, missing: {}", missing.join(", "))]
    MissingLengths {
        missing: Vec<&'static str>,
        partial: PartialLengths,
    },
}

/// Electrical condition on both plate surfaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bc {
    /// Charge-free surfaces
    Open,
    /// Grounded surfaces
    Short,
}

impl std::fmt::Display for Bc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Bc::Open => "open",
            Bc::Short => "short",
        })
    }
}

impl std::str::FromStr for Bc {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "open" => Ok(Bc::Open),
            "short" => Ok(Bc::Short),
            _ => Err(format!("unknown boundary condition '{s}' (expected open or short)")),
        }
    }
}

/// Midplane symmetry class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symmetry {
    /// u1 even, u2/u3/φ odd
    Symmetric,
    /// u1 odd, u2/u3/φ even
    Antisymmetric,
}

impl Symmetry {
    pub const BOTH: [Symmetry; 2] = [Symmetry::Symmetric, Symmetry::Antisymmetric];

    /// Eigenvalue of the midplane operator.
    pub(crate) fn sign(self) -> f64 {
        match self {
            Symmetry::Symmetric => 1.0,
            Symmetry::Antisymmetric => -1.0,
        }
    }
}

/// Branch family. Modes of a symmetry class are ranked by frequency and
/// each rank is named once, near kx = 0: the Lamb-type ranks (u2 carrying
/// at most half the kinetic energy) become S0/S1 or A0/A1 in order, all
/// others (shear-horizontal-like, higher overtones) `Higher`. A mode keeps
/// the name of its rank at every kx, so shear-horizontal/Lamb hybridisation
/// at larger kx does not rename branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    S0,
    A0,
    S1,
    A1,
    Higher,
}

impl Family {
    pub(crate) fn from_rank(sym: Symmetry, rank: Option<usize>) -> Family {
        match (sym, rank) {
            (Symmetry::Symmetric, Some(0)) => Family::S0,
            (Symmetry::Symmetric, Some(1)) => Family::S1,
            (Symmetry::Antisymmetric, Some(0)) => Family::A0,
            (Symmetry::Antisymmetric, Some(1)) => Family::A1,
            _ => Family::Higher,
        }
    }

    pub fn symmetry(self) -> Option<Symmetry> {
        match self {
            Family::S0 | Family::S1 => Some(Symmetry::Symmetric),
            Family::A0 | Family::A1 => Some(Symmetry::Antisymmetric),
            Family::Higher => None,
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::S0 => "S0",
            Family::A0 => "A0",
            Family::S1 => "S1",
            Family::A1 => "A1",
            Family::Higher => "higher",
        })
    }
}

/// Discretisation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafeOptions {
    /// Quadratic elements through the thickness (≥ [`MIN_ELEMENTS`])
    pub n_elements: usize,
    /// Modes returned per symmetry class at fixed kx
    pub n_modes: usize,
}

impl Default for SafeOptions {
    fn default() -> Self {
        SafeOptions { n_elements: DEFAULT_ELEMENTS, n_modes: 12 }
    }
}

impl SafeOptions {
    pub fn validate(&self) -> Result<(), DispersionError> {
        if self.n_elements < MIN_ELEMENTS {
            return Err(DispersionError::Argument(format!(
                "n_elements must be at least {MIN_ELEMENTS}, got {}",
                self.n_elements
            )));
        }
        if self.n_modes == 0 {
            return Err(DispersionError::Argument("n_modes must be at least 1".into()));
        }
        Ok(())
    }
}

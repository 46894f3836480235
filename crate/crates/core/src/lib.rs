//! Design and analysis toolkit for thickness-extensional piezoelectric bulk
//! acoustic resonators with a grounded ring around the active electrode.
//!
//! Modules, roughly in dependency order:
//! - [`material`]: constant sets, ZXZ rotation, material coupling
//! - [`thickness_mode`]: 1D thickness-extensional impedance model
//! - [`bvd`]: Butterworth–Van Dyke circuit, k², fitting, spur metrics
//! - [`sparams`]: Touchstone/CSV ingestion, Z↔S11, Bode Q
//! - [`dispersion`]: Lamb-wave dispersion of a piezoelectric plate
//! - [`design`]: grounded-ring geometric rules and synthesis
//! - [`cli`]: batch front end
//!
//! Units are SI everywhere; angles are degrees at interfaces. Time
//! dependence is `exp(+jωt)`, so a capacitor has impedance `1/(jωC)`.

pub mod bvd;
pub mod cli;
pub mod design;
pub mod dispersion;
pub mod material;
pub mod sparams;
pub mod spectrum;
pub mod thickness_mode;

pub use num_complex::Complex64;

/// Vacuum permittivity [F/m]
pub const EPS0: f64 = 8.854_187_817e-12;

//! Run configuration: TOML with sections, unknown keys rejected.
//!
//! Every section and key is optional; omitted values fall back to the
//! 36° rotated Y-cut lithium niobate plate 0.3 mm thick.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::CliError;
use crate::dispersion::{Bc, SafeOptions, DEFAULT_ELEMENTS};
use crate::material::{load_material, load_material_file, rotate, EulerZXZ, MaterialSet};
use crate::sparams::{Kernel, DEFAULT_Z0};
use crate::spectrum::{FrequencyGrid, GridScale};

pub const DEFAULT_MATERIAL: &str = "LiNbO3_congruent";
pub const DEFAULT_CUT_DEG: f64 = 36.0;
pub const DEFAULT_THICKNESS: f64 = 300e-6;
/// 7 mm radius electrode [m²]
pub const DEFAULT_AREA: f64 = std::f64::consts::PI * 7e-3 * 7e-3;
pub const DEFAULT_WINDOW: usize = 80;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub output_dir: Option<PathBuf>,
    pub material: MaterialConfig,
    pub plate: PlateConfig,
    /// Frequency grid for impedance; defaults to [0.9·fs, 1.1·fp]
    pub grid: Option<GridConfig>,
    pub coupling: CouplingConfig,
    pub impedance: ImpedanceConfig,
    pub bode: BodeConfig,
    pub dispersion: DispersionConfig,
    pub design: DesignConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialConfig {
    /// Database name (default lithium niobate)
    pub name: Option<String>,
    /// Material data file, instead of `name`
    pub file: Option<PathBuf>,
    /// Rotated Y-cut angle [deg], i.e. Euler (0, 90 − θ, 0)
    pub cut_deg: Option<f64>,
    /// ZXZ Euler angles [deg], instead of `cut_deg`
    pub euler_deg: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlateConfig {
    /// [m]
    pub thickness: f64,
    /// Electrode area [m²]
    pub area: f64,
    pub q_mech: f64,
}

impl Default for PlateConfig {
    fn default() -> Self {
        PlateConfig {
            thickness: DEFAULT_THICKNESS,
            area: DEFAULT_AREA,
            q_mech: crate::thickness_mode::DEFAULT_Q_MECH,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// [Hz]
    pub start: f64,
    /// [Hz]
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub scale: GridScale,
}

impl GridConfig {
    pub fn grid(&self) -> FrequencyGrid {
        FrequencyGrid { start: self.start, stop: self.stop, points: self.points, scale: self.scale }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CouplingConfig {
    /// [deg]
    pub theta_start: f64,
    /// [deg]
    pub theta_stop: f64,
    pub theta_points: usize,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        CouplingConfig { theta_start: 0.0, theta_stop: 180.0, theta_points: 181 }
    }
}

impl CouplingConfig {
    pub fn thetas(&self) -> Result<Vec<f64>, CliError> {
        let n = self.theta_points;
        if n < 2 {
            return Err(CliError::Config(format!("coupling.theta_points must be at least 2, got {n}")));
        }
        if !(self.theta_start.is_finite() && self.theta_stop.is_finite() && self.theta_stop > self.theta_start) {
            return Err(CliError::Config(format!(
                "coupling needs theta_start < theta_stop, got {} and {}",
                self.theta_start, self.theta_stop
            )));
        }
        let step = (self.theta_stop - self.theta_start) / (n - 1) as f64;
        Ok((0..n).map(|i| self.theta_start + step * i as f64).collect())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImpedanceModel {
    /// One-dimensional thickness-extensional plate
    #[default]
    Thickness,
    /// Equivalent circuit with the plate's fs, k², Q and C0
    Bvd,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImpedanceConfig {
    pub model: ImpedanceModel,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BodeConfig {
    pub window: usize,
    pub kernel: Kernel,
    /// Reference impedance for impedance-CSV inputs [Ω]
    pub z0: f64,
}

impl Default for BodeConfig {
    fn default() -> Self {
        BodeConfig { window: DEFAULT_WINDOW, kernel: Kernel::Mean, z0: DEFAULT_Z0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DispersionConfig {
    pub bc: Vec<Bc>,
    /// Largest kx·t traced
    pub xi_max: f64,
    pub n_kx: usize,
    /// Upper frequency of the traced window [Hz]; default 1.4·fs
    pub f_max: Option<f64>,
    /// Length evaluation frequency [Hz]; default just above the open S1
    /// minimum
    pub f_eval: Option<f64>,
    pub n_elements: usize,
    pub n_modes: usize,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        DispersionConfig {
            bc: vec![Bc::Open, Bc::Short],
            xi_max: 4.0,
            n_kx: 81,
            f_max: None,
            f_eval: None,
            n_elements: DEFAULT_ELEMENTS,
            n_modes: 12,
        }
    }
}

impl DispersionConfig {
    pub fn options(&self) -> SafeOptions {
        SafeOptions { n_elements: self.n_elements, n_modes: self.n_modes }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignMode {
    /// Geometry from a target series resonance
    #[default]
    Synthesize,
    /// Rule check of a given geometry
    Check,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub thickness: f64,
    pub active_radius: f64,
    pub gap_width: f64,
    pub ring_width: f64,
    pub die_side: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignConfig {
    pub mode: DesignMode,
    /// [Hz]
    pub target_fs: f64,
    pub gap_margin: f64,
    pub ring_margin: f64,
    /// Geometry to check (mode = "check"); `--input` takes precedence
    pub geometry: Option<GeometryConfig>,
    pub n_elements: usize,
}

impl Default for DesignConfig {
    fn default() -> Self {
        let m = crate::design::SafetyMargins::default();
        DesignConfig {
            mode: DesignMode::Synthesize,
            target_fs: 10.14e6,
            gap_margin: m.gap,
            ring_margin: m.ring,
            geometry: None,
            n_elements: DEFAULT_ELEMENTS,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, source_name: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("{source_name}: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Material in its crystal frame.
    pub fn base_material(&self) -> Result<MaterialSet, CliError> {
        let m = &self.material;
        Ok(match (&m.name, &m.file) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config("material: give either name or file, not both".into()));
            }
            (_, Some(path)) => load_material_file(path)?,
            (name, None) => load_material(name.as_deref().unwrap_or(DEFAULT_MATERIAL))?,
        })
    }

    pub fn euler(&self) -> Result<EulerZXZ, CliError> {
        let m = &self.material;
        match (m.cut_deg, m.euler_deg) {
            (Some(_), Some(_)) => Err(CliError::Config("material: give either cut_deg or euler_deg, not both".into())),
            (_, Some([a, b, c])) => Ok(EulerZXZ::new(a, b, c)),
            (cut, None) => Ok(EulerZXZ::rotated_y_cut(cut.unwrap_or(DEFAULT_CUT_DEG))),
        }
    }

    /// Material rotated to the configured cut.
    pub fn material(&self) -> Result<MaterialSet, CliError> {
        let euler = self.euler()?;
        Ok(rotate(&self.base_material()?, euler))
    }
}

//! ZXZ Euler rotation of constant sets.
//!
//! Convention: R = Rz(γ)·Rx(β)·Rz(α) with right-handed (active) elementary
//! rotations, e.g. Rz(a) = [[cos a, −sin a, 0], [sin a, cos a, 0], [0, 0, 1]].
//! The crystal is turned inside the fixed device frame, and tensors transform
//! as c'_ijkl = R_ip R_jq R_kr R_ls c_pqrs. With this choice the rotated
//! Y-cut family is (0, 90° − θ, 0) and γ is an in-plane turn about the plate
//! normal.

use nalgebra::{Matrix3, Matrix6};

use super::MaterialSet;
use super::VOIGT_PAIRS;

/// ZXZ Euler angles in degrees, each normalized to [0, 360).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerZXZ {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

fn normalize_deg(a: f64) -> f64 {
    let r = a.rem_euclid(360.0);
    // rem_euclid of a tiny negative number rounds up to exactly 360
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

impl EulerZXZ {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        EulerZXZ {
            alpha: normalize_deg(alpha),
            beta: normalize_deg(beta),
            gamma: normalize_deg(gamma),
        }
    }

    pub fn identity() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    /// Rotated Y-cut by `theta_deg`: (0, 90 − θ, 0).
    pub fn rotated_y_cut(theta_deg: f64) -> Self {
        Self::new(0.0, 90.0 - theta_deg, 0.0)
    }

    /// Angles of the inverse rotation.
    pub fn inverse(&self) -> Self {
        Self::new(-self.gamma, -self.beta, -self.alpha)
    }

    /// 3×3 rotation matrix R.
    pub fn matrix(&self) -> Matrix3<f64> {
        rot_z(self.gamma.to_radians()) * rot_x(self.beta.to_radians()) * rot_z(self.alpha.to_radians())
    }
}

fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

/// Bond stress-transformation matrix for rotation `r`: T'_I = M_IJ T_J for
/// Voigt stress vectors.
pub fn bond_matrix(r: &Matrix3<f64>) -> Matrix6<f64> {
    let mut m = Matrix6::zeros();
    for (big_i, &(i, j)) in VOIGT_PAIRS.iter().enumerate() {
        for (big_j, &(k, l)) in VOIGT_PAIRS.iter().enumerate() {
            m[(big_i, big_j)] = if k == l {
                r[(i, k)] * r[(j, l)]
            } else {
                r[(i, k)] * r[(j, l)] + r[(i, l)] * r[(j, k)]
            };
        }
    }
    m
}

/// Rotates a constant set: c' = M c Mᵀ, e' = R e Mᵀ, ε' = R ε Rᵀ.
pub fn rotate(material: &MaterialSet, euler: EulerZXZ) -> MaterialSet {
    let r = euler.matrix();
    let m = bond_matrix(&r);
    let sym6 = |a: Matrix6<f64>| (a + a.transpose()) * 0.5;
    let sym3 = |a: Matrix3<f64>| (a + a.transpose()) * 0.5;
    MaterialSet {
        name: material.name.clone(),
        stiffness_ce: sym6(m * material.stiffness_ce * m.transpose()),
        piezo_e: r * material.piezo_e * m.transpose(),
        permittivity_eps_s: sym3(r * material.permittivity_eps_s * r.transpose()),
        density: material.density,
    }
}

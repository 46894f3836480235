//! Semi-analytical finite elements through the plate thickness.
//!
//! Fields vary as exp(j(ωt − kx·x1)) along the plate; the thickness
//! coordinate x3 is discretised with quadratic 3-node elements on the
//! nondimensional interval z = x3/t ∈ [0, 1]. Each node carries
//! [u1, u2, u3, φ]. With ξ = kx·t and Ω² = ω²t²ρ/c_ref the discrete
//! problem is the quadratic pencil
//!
//!   P(ξ) = ξ²·A2 + jξ·A1 + A0 − Ω²·M
//!
//! where A2, A0, M are real symmetric and A1 is real antisymmetric, so
//! P(ξ) is Hermitian for real ξ and P(−ξ) = P(ξ)ᵀ. The potential is scaled by
//! √(c_ref/ε33) so all blocks share one magnitude.

use nalgebra::{DMatrix, Matrix4};

use super::{Bc, Symmetry};
use crate::material::MaterialSet;

/// Degrees of freedom per node.
pub(crate) const NDOF: usize = 4;

#[derive(Debug, Clone)]
pub(crate) struct SafeMatrices {
    pub n_nodes: usize,
    pub a2: DMatrix<f64>,
    pub a1: DMatrix<f64>,
    pub a0: DMatrix<f64>,
    pub m: DMatrix<f64>,
    /// Stiffness scale [Pa]
    pub c_ref: f64,
    /// [kg/m³]
    pub density: f64,
}

/// 4×4 block coupling ∂_i and ∂_l (0-based material axes): elastic
/// c_iJKl, piezoelectric e_liJ / e_iKl, dielectric −ε_il.
fn gamma(m: &MaterialSet, i: usize, l: usize) -> Matrix4<f64> {
    let mut g = Matrix4::zeros();
    for jj in 0..3 {
        for kk in 0..3 {
            g[(jj, kk)] = m.c(i, jj, kk, l);
        }
        g[(jj, 3)] = m.e(l, i, jj);
        g[(3, jj)] = m.e(i, jj, l);
    }
    g[(3, 3)] = -m.permittivity_eps_s[(i, l)];
    g
}

// 3-point Gauss–Legendre on [−1, 1]
const GAUSS: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

pub(crate) fn assemble(material: &MaterialSet, n_elements: usize) -> SafeMatrices {
    let c_ref = material.stiffness_ce[(2, 2)];
    let s = (c_ref / material.permittivity_eps_s[(2, 2)]).sqrt();
    let scale = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, 1.0, s));
    let blk = |i, l| scale * gamma(material, i, l) * scale / c_ref;
    let (g11, g13, g33) = (blk(0, 0), blk(0, 2), blk(2, 2));

    let n_nodes = 2 * n_elements + 1;
    let n = NDOF * n_nodes;
    let mut a2 = DMatrix::zeros(n, n);
    let mut a1 = DMatrix::zeros(n, n);
    let mut a0 = DMatrix::zeros(n, n);
    let mut mm = DMatrix::zeros(n, n);
    let h = 1.0 / n_elements as f64;

    for el in 0..n_elements {
        let base = 2 * el;
        for &(xi, w) in &GAUSS {
            let shape = [0.5 * xi * (xi - 1.0), 1.0 - xi * xi, 0.5 * xi * (xi + 1.0)];
            let dshape = [(xi - 0.5) * 2.0 / h, -2.0 * xi * 2.0 / h, (xi + 0.5) * 2.0 / h];
            let jw = w * h / 2.0;
            for a in 0..3 {
                for b in 0..3 {
                    let (ra, rb) = (NDOF * (base + a), NDOF * (base + b));
                    let nn = jw * shape[a] * shape[b];
                    let dd = jw * dshape[a] * dshape[b];
                    let nd = jw * shape[a] * dshape[b];
                    let dn = jw * dshape[a] * shape[b];
                    for p in 0..NDOF {
                        for q in 0..NDOF {
                            a2[(ra + p, rb + q)] += nn * g11[(p, q)];
                            a0[(ra + p, rb + q)] += dd * g33[(p, q)];
                            // Ebᵀ − Eb with Eb = ∫ Nᵀ Γ13 N'
                            a1[(ra + p, rb + q)] += dn * g13[(q, p)] - nd * g13[(p, q)];
                        }
                        if p < 3 {
                            mm[(ra + p, rb + p)] += nn;
                        }
                    }
                }
            }
        }
    }
    SafeMatrices {
        n_nodes,
        a2,
        a1,
        a0,
        m: mm,
        c_ref,
        density: material.density,
    }
}

impl SafeMatrices {
    /// ω [rad/s] for nondimensional Ω at plate thickness `t`.
    pub fn omega(&self, big_omega: f64, t: f64) -> f64 {
        big_omega * (self.c_ref / self.density).sqrt() / t
    }

    /// Ω² for angular frequency ω at plate thickness `t`.
    pub fn big_omega2(&self, omega: f64, t: f64) -> f64 {
        (omega * t).powi(2) * self.density / self.c_ref
    }

    /// Velocity scale √(c_ref/ρ) [m/s].
    pub fn velocity_scale(&self) -> f64 {
        (self.c_ref / self.density).sqrt()
    }
}

/// Sign of each nodal component under the midplane operator
/// (u1, u2, u3, φ)(z) → (u1, −u2, −u3, −φ)(t − z).
const MIRROR_SIGN: [f64; NDOF] = [1.0, -1.0, -1.0, -1.0];

/// Largest relative change of any block under the midplane operator; zero
/// when the class split is exact.
pub(crate) fn mirror_defect(s: &SafeMatrices) -> f64 {
    let nn = s.n_nodes;
    let mirror = |i: usize| NDOF * (nn - 1 - i / NDOF) + i % NDOF;
    let sign = |i: usize| MIRROR_SIGN[i % NDOF];
    [&s.a2, &s.a1, &s.a0, &s.m]
        .iter()
        .map(|a| {
            let mut worst = 0.0f64;
            for i in 0..a.nrows() {
                for j in 0..a.ncols() {
                    let d = sign(i) * sign(j) * a[(mirror(i), mirror(j))] - a[(i, j)];
                    worst = worst.max(d.abs());
                }
            }
            worst / a.amax()
        })
        .fold(0.0, f64::max)
}

/// The pencil restricted to one midplane symmetry class, with the
/// electrically fixed potentials removed.
#[derive(Debug, Clone)]
pub(crate) struct ClassPencil {
    pub a2: DMatrix<f64>,
    pub a1: DMatrix<f64>,
    pub a0: DMatrix<f64>,
    pub m: DMatrix<f64>,
    /// With u1 rescaled by j, jξ·A1 becomes ξ·S with S real symmetric,
    /// making K(ξ) = ξ²A2 + ξS + A0 real symmetric for real ξ
    pub s1: DMatrix<f64>,
    /// Nodal component (0..4) carried by each reduced DOF
    pub comp: Vec<usize>,
}

impl ClassPencil {
    pub fn dim(&self) -> usize {
        self.comp.len()
    }

    pub fn is_phi(&self, a: usize) -> bool {
        self.comp[a] == 3
    }
}

/// Restricts `s` to class `sym`. Short circuit grounds φ on both faces;
/// `gauge` grounds the (even) potential at the faces to remove the
/// constant-potential null vector of the open plate at kx = 0.
pub(crate) fn project(s: &SafeMatrices, sym: Symmetry, bc: Bc, gauge: bool) -> ClassPencil {
    let nn = s.n_nodes;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut basis = Vec::new();
    let mut comp = Vec::new();
    for i in 0..=(nn - 1) / 2 {
        let j = nn - 1 - i;
        for d in 0..NDOF {
            let w = sym.sign() * MIRROR_SIGN[d];
            if d == 3 && i == 0 && (bc == Bc::Short || (gauge && w > 0.0)) {
                continue;
            }
            let col = if i == j {
                if w < 0.0 {
                    continue;
                }
                vec![(NDOF * i + d, 1.0)]
            } else {
                vec![(NDOF * i + d, r), (NDOF * j + d, w * r)]
            };
            basis.push(col);
            comp.push(d);
        }
    }
    let proj = |a: &DMatrix<f64>| {
        DMatrix::from_fn(basis.len(), basis.len(), |p, q| {
            let mut acc = 0.0;
            for &(i, wi) in &basis[p] {
                for &(j, wj) in &basis[q] {
                    acc += wi * wj * a[(i, j)];
                }
            }
            acc
        })
    };
    let a1 = proj(&s.a1);
    // the mirror plane normal to axis 1 leaves A1 coupling u1 only to the
    // other fields, so the phase change is exact
    let s1 = DMatrix::from_fn(a1.nrows(), a1.ncols(), |a, b| match (comp[a] == 0, comp[b] == 0) {
        (true, false) => -a1[(a, b)],
        (false, true) => a1[(a, b)],
        _ => 0.0,
    });
    ClassPencil {
        a2: proj(&s.a2),
        a0: proj(&s.a0),
        m: proj(&s.m),
        a1,
        s1,
        comp,
    }
}

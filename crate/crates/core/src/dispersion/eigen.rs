//! Dense eigen-solves of one symmetry class of the SAFE pencil.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;

use super::safe::ClassPencil;
use super::DispersionError;

const J: Complex64 = Complex64::new(0.0, 1.0);

fn submatrix<T: nalgebra::Scalar + Copy>(m: &DMatrix<T>, rows: &[usize], cols: &[usize]) -> DMatrix<T> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Mode at fixed real ξ.
#[derive(Debug, Clone)]
pub(crate) struct FixedKMode {
    pub omega2: f64,
    /// dΩ²/dξ
    pub d_omega2: f64,
    /// Share of kinetic energy carried by u2
    pub u2_fraction: f64,
    /// Electric over mechanical stored energy
    pub electric_fraction: f64,
}

fn numeric(message: &str, diagnostic: String) -> DispersionError {
    DispersionError::Numeric { message: message.into(), diagnostic }
}

fn quad(y: &DVector<f64>, a: &DMatrix<f64>) -> f64 {
    y.dot(&(a * y))
}

/// Lowest `n_modes` eigenpairs at real ξ with the potential condensed out.
/// Works on the real symmetric form K(ξ) = ξ²A2 + ξS + A0.
pub(crate) fn solve_fixed_k(p: &ClassPencil, xi: f64, n_modes: usize) -> Result<Vec<FixedKMode>, DispersionError> {
    let diag = || format!("xi = {xi:e}, dim = {}", p.dim());
    let k = &p.a2 * (xi * xi) + &p.s1 * xi + &p.a0;
    let mech: Vec<usize> = (0..p.dim()).filter(|&a| !p.is_phi(a)).collect();
    let phi: Vec<usize> = (0..p.dim()).filter(|&a| p.is_phi(a)).collect();

    let kuu = submatrix(&k, &mech, &mech);
    let kup = submatrix(&k, &mech, &phi);
    let kpp = submatrix(&k, &phi, &phi);
    let x_pu = if phi.is_empty() {
        DMatrix::zeros(0, mech.len())
    } else {
        kpp.clone()
            .lu()
            .solve(&kup.transpose())
            .ok_or_else(|| numeric("potential block is singular", diag()))?
    };
    let ks = &kuu - &kup * &x_pu;
    let ks = (&ks + ks.transpose()) * 0.5;

    let mu = submatrix(&p.m, &mech, &mech);
    let l = mu
        .cholesky()
        .ok_or_else(|| numeric("mass matrix is not positive definite", diag()))?
        .l();
    // C = L⁻¹ Ks L⁻ᵀ
    let y = l.solve_lower_triangular(&ks).ok_or_else(|| numeric("triangular solve failed", diag()))?;
    let c = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| numeric("triangular solve failed", diag()))?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(c, 1e-15, 10_000)
        .ok_or_else(|| numeric("symmetric eigen-solve did not converge", diag()))?;

    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    order.truncate(n_modes.min(order.len()));

    let lt = l.transpose();
    let m2 = DMatrix::from_fn(p.dim(), p.dim(), |a, b| {
        if p.comp[a] == 1 && p.comp[b] == 1 { p.m[(a, b)] } else { 0.0 }
    });
    let mut vals = Vec::with_capacity(order.len());
    let mut vecs = Vec::with_capacity(order.len());
    for &idx in &order {
        let w = eig.eigenvectors.column(idx).into_owned();
        let u = lt.solve_upper_triangular(&w).ok_or_else(|| numeric("back substitution failed", diag()))?;
        let f = -(&x_pu * &u);
        let mut yv = DVector::zeros(p.dim());
        for (a, &i) in mech.iter().enumerate() {
            yv[i] = u[a];
        }
        for (a, &i) in phi.iter().enumerate() {
            yv[i] = f[a];
        }
        vals.push(eig.eigenvalues[idx]);
        vecs.push(yv);
    }
    separate_degenerate(&vals, &mut vecs, &m2);

    let dk = &p.a2 * (2.0 * xi) + &p.s1;
    let mask = |want_phi: bool| {
        DMatrix::from_fn(p.dim(), p.dim(), |a, b| {
            if p.is_phi(a) == want_phi && p.is_phi(b) == want_phi { k[(a, b)] } else { 0.0 }
        })
    };
    let (kphi, kmech) = (mask(true), mask(false));
    Ok(vals
        .into_iter()
        .zip(vecs)
        .map(|(omega2, y)| {
            let mass = quad(&y, &p.m);
            let e_el = quad(&y, &kphi).abs();
            let e_me = quad(&y, &kmech).abs();
            FixedKMode {
                omega2,
                // Hellmann–Feynman; the condensed potential is stationary
                d_omega2: quad(&y, &dk) / mass,
                u2_fraction: quad(&y, &m2) / mass,
                electric_fraction: if e_me > 0.0 { e_el / e_me } else { 0.0 },
            }
        })
        .collect())
}

/// Within groups of (numerically) equal eigenvalues, rotates the basis so
/// each vector has a definite u2 share, least u2 first; this keeps
/// rigid-body and cutoff degeneracies from mixing shear-horizontal and Lamb
/// motion.
fn separate_degenerate(vals: &[f64], vecs: &mut [DVector<f64>], m2: &DMatrix<f64>) {
    let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-12);
    let mut start = 0;
    while start < vals.len() {
        let mut end = start + 1;
        while end < vals.len() && (vals[end] - vals[start]).abs() <= 1e-9 * scale {
            end += 1;
        }
        let g = end - start;
        if g > 1 {
            let gm = DMatrix::from_fn(g, g, |a, b| vecs[start + a].dot(&(m2 * &vecs[start + b])));
            let e = SymmetricEigen::new((&gm + gm.transpose()) * 0.5);
            let old: Vec<DVector<f64>> = vecs[start..end].to_vec();
            let mut cols: Vec<usize> = (0..g).collect();
            cols.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
            for (slot, &c) in cols.iter().enumerate() {
                let mut v = DVector::zeros(old[0].len());
                for (a, o) in old.iter().enumerate() {
                    v += o * e.eigenvectors[(a, c)];
                }
                vecs[start + slot] = v;
            }
        }
        start = end;
    }
}

/// Root ξ of det P(ξ) = 0 at fixed Ω² with its reduced right eigenvector.
#[derive(Debug, Clone)]
pub(crate) struct QepRoot {
    pub xi: Complex64,
    pub y: DVector<Complex64>,
    /// Relative backward error ‖P(ξ)y‖ / (‖y‖·Σ|ξ|^k‖A_k‖)
    pub residual: f64,
}

/// Roots of the quadratic pencil at fixed Ω² with |Im ξ| < `im_limit`, via
/// companion linearisation and a complex Schur decomposition.
pub(crate) fn solve_fixed_omega(p: &ClassPencil, omega2: f64, im_limit: f64) -> Result<Vec<QepRoot>, DispersionError> {
    let n = p.dim();
    let a2 = p.a2.map(|v| Complex64::new(v, 0.0));
    let a1 = p.a1.map(|v| J * v);
    let b0 = (&p.a0 - &p.m * omega2).map(|v| Complex64::new(v, 0.0));

    let lu = a2.clone().lu();
    let piv = lu.u().diagonal().map(|v| v.norm());
    let ratio = piv.max() / piv.min();
    let fail = |message: &str| numeric(message, format!("A2 pivot ratio {ratio:.3e}, Omega^2 = {omega2:.6e}, dim = {n}"));
    if !ratio.is_finite() || ratio > 1e14 {
        return Err(fail("A2 is numerically singular"));
    }
    let p0 = lu.solve(&b0).ok_or_else(|| fail("A2 is singular"))?;
    let p1 = lu.solve(&a1).ok_or_else(|| fail("A2 is singular"))?;

    // ξ [y; ξy] = [[0, I], [−A2⁻¹B0, −A2⁻¹(jA1)]] [y; ξy]
    let mut comp = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        comp[(i, n + i)] = Complex64::new(1.0, 0.0);
        for j in 0..n {
            comp[(n + i, j)] = -p0[(i, j)];
            comp[(n + i, n + j)] = -p1[(i, j)];
        }
    }
    let schur = Schur::try_new(comp, 1e-15, 100_000).ok_or_else(|| fail("Schur iteration did not converge"))?;
    let (q, t) = schur.unpack();
    let m = 2 * n;
    let norms = (p.a2.norm(), p.a1.norm(), b0.norm());

    let mut roots = Vec::new();
    for k in 0..m {
        let lambda = t[(k, k)];
        if !(lambda.re.is_finite() && lambda.im.is_finite()) || lambda.im.abs() >= im_limit {
            continue;
        }
        // eigenvector of the triangular factor by back substitution, v_k = 1
        let mut v = DVector::<Complex64>::zeros(m);
        v[k] = Complex64::new(1.0, 0.0);
        let tiny = 1e-14 * lambda.norm().max(1.0);
        for i in (0..k).rev() {
            let mut acc = Complex64::new(0.0, 0.0);
            for jj in i + 1..=k {
                acc += t[(i, jj)] * v[jj];
            }
            let mut d = t[(i, i)] - lambda;
            if d.norm() < tiny {
                d = Complex64::new(tiny, 0.0);
            }
            v[i] = -acc / d;
        }
        let z = &q * v;
        let mut y = z.rows(0, n).into_owned();
        let nrm = y.norm();
        if nrm > 0.0 {
            y /= Complex64::new(nrm, 0.0);
        }
        let r = &a2 * &y * (lambda * lambda) + &a1 * &y * lambda + &b0 * &y;
        let scale = lambda.norm_sqr() * norms.0 + lambda.norm() * norms.1 + norms.2;
        roots.push(QepRoot { xi: lambda, residual: r.norm() / scale, y });
    }
    Ok(roots)
}

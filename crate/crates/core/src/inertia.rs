//! Second-order structure of `Û = U|_𝕊` at critical points.

use crate::config::{Configuration, SpectrumS, Tolerances};
use crate::error::{Result, SbcError};
use crate::potential::{hessian_unchecked, moment_of_inertia_s, s_inner, sbc_residual};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Morse index, nullity and coindex of a critical point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InertiaTriple {
    pub index: usize,
    pub nullity: usize,
    pub coindex: usize,
}

impl InertiaTriple {
    pub fn new(index: usize, nullity: usize, coindex: usize) -> Self {
        InertiaTriple { index, nullity, coindex }
    }

    pub fn dim(&self) -> usize {
        self.index + self.nullity + self.coindex
    }

    pub fn from_eigenvalues(eigs: &[f64], band: f64) -> Self {
        let index = eigs.iter().filter(|&&e| e < -band).count();
        let coindex = eigs.iter().filter(|&&e| e > band).count();
        InertiaTriple { index, nullity: eigs.len() - index - coindex, coindex }
    }
}

impl std::fmt::Display for InertiaTriple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.index, self.nullity, self.coindex)
    }
}

/// Eigen-decomposition with eigenvalues sorted ascending (columns follow).
pub fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(m.nrows(), order.len());
    for (c, &k) in order.iter().enumerate() {
        vectors.set_column(c, &eig.eigenvectors.column(k));
    }
    (values, vectors)
}

/// `S`-weighted mass-orthonormal basis of `T_q𝕊`, one basis vector per column.
///
/// Gram–Schmidt (two passes) starting from the translations and `q`,
/// then sweeping canonical unit vectors in row-major order.
pub fn tangent_basis(q: &Configuration, s: &SpectrumS) -> DMatrix<f64> {
    let (n, d) = (q.n(), q.d());
    let dim = n * d;
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(dim);
    let add = |v: Vec<f64>, frame: &mut Vec<Vec<f64>>| -> bool {
        let mut w = v;
        let norm0 = s_inner(q, s, &w, &w).sqrt();
        for _ in 0..2 {
            for f in frame.iter() {
                let c = s_inner(q, s, &w, f);
                for (a, b) in w.iter_mut().zip(f) {
                    *a -= c * b;
                }
            }
        }
        let norm = s_inner(q, s, &w, &w).sqrt();
        if norm <= 1e-8 * norm0 {
            return false;
        }
        w.iter_mut().for_each(|x| *x /= norm);
        frame.push(w);
        true
    };
    for k in 0..d {
        let mut t = vec![0.0; dim];
        for i in 0..n {
            t[i * d + k] = 1.0;
        }
        add(t, &mut frame);
    }
    add(q.coords().to_vec(), &mut frame);
    let fixed = frame.len();
    for idx in 0..dim {
        if frame.len() == dim {
            break;
        }
        let mut e = vec![0.0; dim];
        e[idx] = 1.0;
        add(e, &mut frame);
    }
    let cols = frame.len() - fixed;
    DMatrix::from_fn(dim, cols, |r, c| frame[fixed + c][r])
}

/// Euclidean form `Ĥ = D²U + λ Ŝ M` on the full configuration space (read-only cross-check).
pub fn euclidean_restricted_hessian(q: &Configuration, s: &SpectrumS) -> Result<DMatrix<f64>> {
    q.check_collision_free(&Tolerances::default())?;
    let d = q.d();
    let lambda = crate::potential::potential_unchecked(q) / moment_of_inertia_s(q, s);
    let mut h = hessian_unchecked(q);
    for i in 0..q.n() {
        for k in 0..d {
            h[(i * d + k, i * d + k)] += lambda * s.get(k) * q.masses()[i];
        }
    }
    Ok(h)
}

/// Hessian of `Û` at a critical point, expressed on [`tangent_basis`].
#[derive(Debug, Clone)]
pub struct RestrictedHessian {
    pub matrix: DMatrix<f64>,
    pub basis: DMatrix<f64>,
    pub potential: f64,
}

impl RestrictedHessian {
    pub fn eigenvalues(&self) -> Vec<f64> {
        sorted_symmetric_eigen(&self.matrix).0
    }

    pub fn triple(&self, null_tol: f64) -> InertiaTriple {
        InertiaTriple::from_eigenvalues(&self.eigenvalues(), null_tol * self.potential)
    }

    /// Tangent vector (configuration coordinates) for coefficient vector `c`.
    pub fn lift(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.basis * c
    }
}

/// Quadratic form of `Ĥ` on the tangent space, without the criticality check.
pub(crate) fn tangent_hessian(q: &Configuration, s: &SpectrumS) -> Result<RestrictedHessian> {
    let h = euclidean_restricted_hessian(q, s)?;
    let e = tangent_basis(q, s);
    let mut g = e.transpose() * h * &e;
    let gt = g.transpose();
    g = (g + gt) * 0.5;
    Ok(RestrictedHessian { matrix: g, basis: e, potential: crate::potential::potential_unchecked(q) })
}

pub fn restricted_hessian(q: &Configuration, s: &SpectrumS) -> Result<RestrictedHessian> {
    restricted_hessian_with(q, s, &Tolerances::default())
}

/// Normalizes to `I_S = 1` and checks criticality before assembling the form.
pub fn restricted_hessian_with(q: &Configuration, s: &SpectrumS, tol: &Tolerances) -> Result<RestrictedHessian> {
    if q.d() != s.d() {
        return Err(SbcError::InvalidInput(format!("weights have length {}, configuration has d = {}", s.d(), q.d())));
    }
    let q = q.normalized(s);
    let r = sbc_residual(&q, s)?;
    let limit = tol.res * r.potential;
    if !(r.norm() < limit) {
        return Err(SbcError::NotCritical { residual: r.norm(), tol: limit });
    }
    tangent_hessian(&q, s)
}

pub fn inertia_indices(q: &Configuration, s: &SpectrumS, null_tol: f64) -> Result<InertiaTriple> {
    Ok(restricted_hessian(q, s)?.triple(null_tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::MassVector;

    #[test]
    fn basis_is_orthonormal_and_tangent() {
        let q = Configuration::from_rows(
            MassVector::new(vec![1.0, 2.0, 0.5]).unwrap(),
            &[vec![0.3, 1.0], vec![-0.7, 0.2], vec![1.1, -0.9]],
        )
        .unwrap();
        let s = SpectrumS::planar(1.7).unwrap();
        let e = tangent_basis(&q, &s);
        assert_eq!(e.ncols(), 3);
        for a in 0..3 {
            let va: Vec<f64> = e.column(a).iter().copied().collect();
            assert!(s_inner(&q, &s, &va, q.coords()).abs() < 1e-12);
            for b in 0..3 {
                let vb: Vec<f64> = e.column(b).iter().copied().collect();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((s_inner(&q, &s, &va, &vb) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn triple_from_eigenvalues() {
        assert_eq!(InertiaTriple::from_eigenvalues(&[-1.0, 1e-9, 2.0, 3.0], 1e-6), InertiaTriple::new(1, 1, 2));
    }
}

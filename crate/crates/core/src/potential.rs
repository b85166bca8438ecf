//! Newtonian potential, its derivatives and the S-weighted sphere.

use crate::config::{Configuration, SpectrumS, Tolerances};
use crate::error::Result;
use nalgebra::DMatrix;

/// `I_S(q) = Σ_i m_i Σ_k s_k q_ik²`.
pub fn moment_of_inertia_s(q: &Configuration, s: &SpectrumS) -> f64 {
    let d = q.d();
    let m = q.masses();
    let mut acc = 0.0;
    for i in 0..q.n() {
        for k in 0..d {
            let x = q.coords()[i * d + k];
            acc += m[i] * s.get(k) * x * x;
        }
    }
    acc
}

/// Ordinary moment of inertia `Σ m_i |q_i|²`.
pub fn moment_of_inertia(q: &Configuration) -> f64 {
    moment_of_inertia_s(q, &SpectrumS::identity(q.d()))
}

/// `⟨u, v⟩_S = Σ_i m_i Σ_k s_k u_ik v_ik`.
pub fn s_inner(q: &Configuration, s: &SpectrumS, u: &[f64], v: &[f64]) -> f64 {
    let d = q.d();
    let m = q.masses();
    let mut acc = 0.0;
    for i in 0..q.n() {
        for k in 0..d {
            acc += m[i] * s.get(k) * u[i * d + k] * v[i * d + k];
        }
    }
    acc
}

pub fn potential(q: &Configuration) -> Result<f64> {
    potential_with(q, &Tolerances::default())
}

pub fn potential_with(q: &Configuration, tol: &Tolerances) -> Result<f64> {
    q.check_collision_free(tol)?;
    Ok(potential_unchecked(q))
}

pub(crate) fn potential_unchecked(q: &Configuration) -> f64 {
    let m = q.masses();
    let mut u = 0.0;
    for i in 0..q.n() {
        for j in i + 1..q.n() {
            u += m[i] * m[j] / q.distance(i, j);
        }
    }
    u
}

/// `∂U/∂q_i = Σ_{j≠i} m_i m_j (q_j - q_i) / r_ij³`, flattened row-major.
pub fn gradient(q: &Configuration) -> Result<Vec<f64>> {
    q.check_collision_free(&Tolerances::default())?;
    Ok(gradient_unchecked(q))
}

pub(crate) fn gradient_unchecked(q: &Configuration) -> Vec<f64> {
    let (n, d) = (q.n(), q.d());
    let m = q.masses();
    let x = q.coords();
    let mut g = vec![0.0; n * d];
    for i in 0..n {
        for j in i + 1..n {
            let r = q.distance(i, j);
            let c = m[i] * m[j] / (r * r * r);
            for k in 0..d {
                let f = c * (x[j * d + k] - x[i * d + k]);
                g[i * d + k] += f;
                g[j * d + k] -= f;
            }
        }
    }
    g
}

/// `D²U(q)` assembled from the pair blocks `(m_i m_j / r³)(I - 3 u uᵀ)`.
pub fn hessian(q: &Configuration) -> Result<DMatrix<f64>> {
    q.check_collision_free(&Tolerances::default())?;
    Ok(hessian_unchecked(q))
}

pub(crate) fn hessian_unchecked(q: &Configuration) -> DMatrix<f64> {
    let (n, d) = (q.n(), q.d());
    let m = q.masses();
    let x = q.coords();
    let mut h = DMatrix::zeros(n * d, n * d);
    let mut u = vec![0.0; d];
    for i in 0..n {
        for j in i + 1..n {
            let r = q.distance(i, j);
            let c = m[i] * m[j] / (r * r * r);
            for k in 0..d {
                u[k] = (x[i * d + k] - x[j * d + k]) / r;
            }
            for a in 0..d {
                for b in 0..d {
                    let delta = if a == b { 1.0 } else { 0.0 };
                    let blk = c * (delta - 3.0 * u[a] * u[b]);
                    h[(i * d + a, j * d + b)] = blk;
                    h[(j * d + a, i * d + b)] = blk;
                    h[(i * d + a, i * d + b)] -= blk;
                    h[(j * d + a, j * d + b)] -= blk;
                }
            }
        }
    }
    h
}

/// Residual of `∇U + λ Ŝ M q = 0` with `λ = U / I_S`.
#[derive(Debug, Clone, PartialEq)]
pub struct SbcResidual {
    pub residual: Vec<f64>,
    pub lambda: f64,
    pub potential: f64,
}

impl SbcResidual {
    pub fn norm(&self) -> f64 {
        self.residual.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

pub fn sbc_residual(q: &Configuration, s: &SpectrumS) -> Result<SbcResidual> {
    q.check_collision_free(&Tolerances::default())?;
    Ok(sbc_residual_unchecked(q, s))
}

pub(crate) fn sbc_residual_unchecked(q: &Configuration, s: &SpectrumS) -> SbcResidual {
    let d = q.d();
    let u = potential_unchecked(q);
    let lambda = u / moment_of_inertia_s(q, s);
    let mut r = gradient_unchecked(q);
    let m = q.masses();
    for i in 0..q.n() {
        for k in 0..d {
            r[i * d + k] += lambda * s.get(k) * m[i] * q.coords()[i * d + k];
        }
    }
    SbcResidual { residual: r, lambda, potential: u }
}

/// Residual of the central-configuration equation (`S = I`).
pub fn cc_residual(q: &Configuration) -> Result<SbcResidual> {
    sbc_residual(q, &SpectrumS::identity(q.d()))
}

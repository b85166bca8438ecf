use crate::config::{ConfigDocument, Configuration, SpectrumS, Tolerances};
use crate::error::{Result, SbcError};
use crate::inertia::{sorted_symmetric_eigen, tangent_hessian, InertiaTriple};
use crate::potential::{cc_residual, moment_of_inertia_s, sbc_residual_unchecked};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub max_iter: usize,
    /// Largest tangent step, in the S-weighted mass norm (the sphere has radius 1).
    pub max_step: f64,
    pub tol: Tolerances,
    /// An axis is occupied when some coordinate along it exceeds this (relative to scale).
    pub occupancy_tol: f64,
    /// Central-configuration test: CC residual below `cc_tol * U`.
    pub cc_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { max_iter: 100, max_step: 0.25, tol: Tolerances::default(), occupancy_tol: 1e-8, cc_tol: 1e-8 }
    }
}

/// Geometric type of a solution, by the coordinate axes it occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    /// On a line; `axis` is set when the line is a coordinate axis.
    Collinear {
        axis: Option<usize>,
    },
    /// Spanning a plane; `axes` is set when it is a coordinate plane.
    Planar {
        axes: Option<(usize, usize)>,
    },
    FullDimensional,
}

impl Classification {
    pub fn is_collinear(&self) -> bool {
        matches!(self, Classification::Collinear { .. })
    }

    pub fn label(&self) -> String {
        match self {
            Classification::Collinear { axis: Some(a) } => format!("collinear(e{})", a + 1),
            Classification::Collinear { axis: None } => "collinear".into(),
            Classification::Planar { axes: Some((i, j)) } => format!("planar(e{},e{})", i + 1, j + 1),
            Classification::Planar { axes: None } => "planar".into(),
            Classification::FullDimensional => "full-dimensional".into(),
        }
    }
}

impl Serialize for Classification {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            kind: &'static str,
            #[serde(skip_serializing_if = "Vec::is_empty")]
            axes: Vec<usize>,
        }
        let (kind, axes) = match *self {
            Classification::Collinear { axis } => ("collinear", axis.map(|a| vec![a + 1]).unwrap_or_default()),
            Classification::Planar { axes } => ("planar", axes.map(|(i, j)| vec![i + 1, j + 1]).unwrap_or_default()),
            Classification::FullDimensional => ("full-dimensional", vec![]),
        };
        Repr { kind, axes }.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Classification {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            kind: String,
            #[serde(default)]
            axes: Vec<usize>,
        }
        let r = Repr::deserialize(de)?;
        let axis = |k: usize| r.axes.get(k).map(|a| a.saturating_sub(1));
        match r.kind.as_str() {
            "collinear" => Ok(Classification::Collinear { axis: axis(0) }),
            "planar" => Ok(Classification::Planar { axes: axis(0).zip(axis(1)) }),
            "full-dimensional" => Ok(Classification::FullDimensional),
            other => Err(serde::de::Error::custom(format!("unknown classification {other}"))),
        }
    }
}

/// Classifies by the rank of the point set and by coordinate-axis occupancy.
pub fn classify(q: &Configuration, occupancy_tol: f64) -> Classification {
    let scale = q.scale();
    let pts = DMatrix::from_row_slice(q.n(), q.d(), q.coords());
    let sv = pts.singular_values();
    let top = sv.max();
    let rank = sv.iter().filter(|&&v| v > occupancy_tol * top).count();
    let occupied: Vec<usize> =
        q.axis_extent().iter().enumerate().filter(|(_, &e)| e > occupancy_tol * scale).map(|(k, _)| k).collect();
    match rank {
        0 | 1 => Classification::Collinear { axis: (occupied.len() == 1).then(|| occupied[0]) },
        2 => Classification::Planar { axes: (occupied.len() == 2).then(|| (occupied[0], occupied[1])) },
        _ => Classification::FullDimensional,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SBCSolution {
    pub config: Configuration,
    pub spectrum: SpectrumS,
    pub lambda: f64,
    pub potential: f64,
    pub residual_norm: f64,
    pub triple: InertiaTriple,
    pub classification: Classification,
    pub is_cc: bool,
    /// Norm of `∇U + (U/I) M q`, relative to `U`.
    pub cc_residual: f64,
}

impl SBCSolution {
    /// Evaluates and classifies a converged configuration (normalized to `I_S = 1` first).
    pub fn from_config(q: &Configuration, s: &SpectrumS, opts: &SolverOptions) -> Result<SBCSolution> {
        let q = q.normalized(s);
        q.check_collision_free(&opts.tol)?;
        let r = sbc_residual_unchecked(&q, s);
        let limit = opts.tol.res * r.potential;
        if !(r.norm() < limit) {
            return Err(SbcError::NotCritical { residual: r.norm(), tol: limit });
        }
        let triple = tangent_hessian(&q, s)?.triple(opts.tol.null);
        let cc = cc_residual(&q)?.norm() / r.potential;
        Ok(SBCSolution {
            classification: classify(&q, opts.occupancy_tol),
            config: q,
            spectrum: s.clone(),
            lambda: r.lambda,
            potential: r.potential,
            residual_norm: r.norm(),
            triple,
            is_cc: cc < opts.cc_tol,
            cc_residual: cc,
        })
    }

    pub fn to_document(&self) -> ConfigDocument {
        self.config.to_document(&self.spectrum)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCause {
    Collision,
    MaxIter,
    /// Neither the Newton nor the merit-descent step reduced the merit.
    Stalled,
}

/// Why a single search did not converge.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub cause: FailureCause,
    pub iterations: usize,
    pub merit: f64,
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?} after {} iterations (merit {:.3e})", self.cause, self.iterations, self.merit)
    }
}

/// `rᵀ (Ŝ M)⁻¹ r`, the squared norm of the Riemannian gradient.
fn merit(q: &Configuration, s: &SpectrumS, r: &[f64]) -> f64 {
    let d = q.d();
    let mut acc = 0.0;
    for i in 0..q.n() {
        for k in 0..d {
            acc += r[i * d + k] * r[i * d + k] / (q.masses()[i] * s.get(k));
        }
    }
    acc
}

fn retract(q: &Configuration, s: &SpectrumS, v: &DVector<f64>, t: f64) -> Option<Configuration> {
    let x: Vec<f64> = q.coords().iter().zip(v.iter()).map(|(a, b)| a + t * b).collect();
    let p = q.with_coords(x).ok()?;
    let i_s = moment_of_inertia_s(&p, s);
    (i_s > 0.0 && i_s.is_finite()).then(|| p.scaled(1.0 / i_s.sqrt()))
}

/// Regularized Newton step `c = -Σ μ/(μ² + ν) (w·g) w` over eigenpairs `(μ, w)` of `G`.
///
/// With `ν = max|μ| ‖g‖` directions of tiny curvature (symmetry orbits,
/// near-degenerate modes) are damped away from a critical point, while the
/// step tends to the plain Newton step as `g → 0`.
fn newton_coefficients(g_mat: &DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    let (vals, vecs) = sorted_symmetric_eigen(g_mat);
    let top = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let nu = top * g.norm();
    let mut c = DVector::zeros(g.len());
    for (k, mu) in vals.iter().enumerate() {
        let denom = mu * mu + nu;
        if denom > 0.0 {
            let w = vecs.column(k);
            c -= w * (w.dot(g) * mu / denom);
        }
    }
    c
}

/// Full Newton steps from a converged point while they keep reducing the merit.
fn polish(mut q: Configuration, s: &SpectrumS, mut phi: f64) -> Result<Configuration> {
    for _ in 0..3 {
        let h = tangent_hessian(&q, s)?;
        let r = sbc_residual_unchecked(&q, s);
        let g = h.basis.transpose() * DVector::from_column_slice(&r.residual);
        let Some(p) = retract(&q, s, &h.lift(&newton_coefficients(&h.matrix, &g)), 1.0) else { break };
        let phip = merit(&p, s, &sbc_residual_unchecked(&p, s).residual);
        if !(phip < 0.5 * phi) {
            break;
        }
        q = p;
        phi = phip;
    }
    Ok(q)
}

/// Projected Newton search for a critical point of `U` on the sphere `I_S = 1`.
///
/// Each iteration takes a regularized Newton step on the tangent space and
/// backtracks on the merit `rᵀ(ŜM)⁻¹r`; when that fails a descent step on
/// the merit is tried instead.
pub fn find_critical_point(q0: &Configuration, s: &SpectrumS, opts: &SolverOptions) -> Result<SBCSolution> {
    match search(q0, s, opts)? {
        Ok(q) => SBCSolution::from_config(&q, s, opts),
        Err(f) => Err(SbcError::SearchFailed(f)),
    }
}

/// Like [`find_critical_point`] but reports non-convergence as data.
pub fn search(
    q0: &Configuration,
    s: &SpectrumS,
    opts: &SolverOptions,
) -> Result<std::result::Result<Configuration, Failure>> {
    if q0.d() != s.d() {
        return Err(SbcError::InvalidInput(format!("weights have length {}, configuration has d = {}", s.d(), q0.d())));
    }
    let mut q = q0.normalized(s);
    let fail = |cause, iterations, merit| Ok(Err(Failure { cause, iterations, merit }));
    if q.check_collision_free(&opts.tol).is_err() {
        return fail(FailureCause::Collision, 0, f64::NAN);
    }
    let mut r = sbc_residual_unchecked(&q, s);
    let mut phi = merit(&q, s, &r.residual);
    for iter in 0..opts.max_iter {
        if r.norm() < opts.tol.res * r.potential {
            return Ok(Ok(polish(q, s, phi)?));
        }
        let h = tangent_hessian(&q, s)?;
        let g = h.basis.transpose() * DVector::from_column_slice(&r.residual);
        let newton = newton_coefficients(&h.matrix, &g);
        let descent = -(&h.matrix * &g);
        let mut accepted = None;
        let mut collided = false;
        for dir in [newton, descent] {
            let norm = dir.norm();
            if !(norm > 0.0) {
                continue;
            }
            let dir = if norm > opts.max_step { dir * (opts.max_step / norm) } else { dir };
            let v = h.lift(&dir);
            let mut t = 1.0;
            for _ in 0..40 {
                if let Some(p) = retract(&q, s, &v, t) {
                    if p.check_collision_free(&opts.tol).is_err() {
                        collided = true;
                    } else {
                        let rp = sbc_residual_unchecked(&p, s);
                        let phip = merit(&p, s, &rp.residual);
                        if phip < (1.0 - 1e-4 * t) * phi {
                            accepted = Some((p, rp, phip));
                            break;
                        }
                    }
                }
                t *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
        }
        match accepted {
            Some((p, rp, phip)) => {
                q = p;
                r = rp;
                phi = phip;
            }
            None if collided => return fail(FailureCause::Collision, iter, phi),
            None => return fail(FailureCause::Stalled, iter, phi),
        }
    }
    if r.norm() < opts.tol.res * r.potential {
        return Ok(Ok(polish(q, s, phi)?));
    }
    fail(FailureCause::MaxIter, opts.max_iter, phi)
}

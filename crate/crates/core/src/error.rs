use thiserror::Error;

pub type Result<T> = std::result::Result<T, SbcError>;

#[derive(Debug, Error)]
pub enum SbcError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("collision: min pairwise distance {min_sep:.3e} below guard {guard:.3e}")]
    Collision { min_sep: f64, guard: f64 },
    #[error("not a critical point: residual {residual:.3e} exceeds {tol:.3e}")]
    NotCritical { residual: f64, tol: f64 },
    #[error("configuration is not collinear (off-axis coordinate {offset:.3e})")]
    NotCollinear { offset: f64 },
    #[error("configuration is not planar (d = {d})")]
    NotPlanar { d: usize },
    #[error("critical point search failed: {0}")]
    SearchFailed(crate::solver::Failure),
    #[error("newton iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("spectrum anomaly: {0}")]
    SpectrumAnomaly(String),
    #[error("unsupported case: {0}")]
    UnsupportedCase(String),
    #[error("continuation branch lost at parameter step {step:.3e}")]
    BranchLost { step: f64 },
    #[error("quadrature budget of {budget} evaluations exceeded")]
    QuadratureBudgetExceeded { budget: usize },
    #[error("census contains {count} degenerate solutions")]
    DegenerateCensus { count: usize },
    #[error("identity violated: {0}")]
    IdentityViolation(String),
    #[error("integrator step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl SbcError {
    /// Input validation problems, as opposed to numerical failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            SbcError::InvalidInput(_)
                | SbcError::NotPlanar { .. }
                | SbcError::UnsupportedCase(_)
                | SbcError::Json(_)
                | SbcError::Io(_)
        )
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the set where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// A structural condition on `a` or `H` does not hold at some sample.
    #[error("condition `{check}` violated: {detail}")]
    SpecViolation { check: &'static str, detail: String },
    #[error("singular evaluation: {0}")]
    Singular(String),
    #[error("orbit integration failed: {0}")]
    Integration(String),
    #[error("chart geometry: {0}")]
    Geometry(String),
    #[error("level {level} is not crossed (orbit sweeps [{lo}, {hi}])")]
    NoCrossing { level: f64, lo: f64, hi: f64 },
    #[error("nonlinear solver stopped after {iterations} iterations with residual {residual:e}")]
    SolverFailure { iterations: usize, residual: f64 },
    #[error("indicator fixed point stopped after {} iterations (last change {:e})", trace.len(), trace.last().copied().unwrap_or(f64::NAN))]
    OuterNonConvergence { trace: Vec<f64> },
    #[error("insufficient resolution: {0}")]
    Resolution(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("parse error on line {line}: {detail}")]
    Parse { line: usize, detail: String },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub(crate) fn violation(check: &'static str, detail: impl Into<String>) -> Self {
        Error::SpecViolation {
            check,
            detail: detail.into(),
        }
    }
}

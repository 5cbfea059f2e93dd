use std::path::PathBuf;

/// Errors produced by the solvers, derivative engines and file formats.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("too few usable points for a rate fit: {usable} above the floor, need {needed}")]
    TooFewPoints { usable: usize, needed: usize },

    #[error("step size {step:e} outside (0, 2/L) with L = {lipschitz:e}")]
    StepSize { step: f64, lipschitz: f64 },

    #[error("diverged at iteration {iter}: objective {objective:e} exceeds guard {limit:e}")]
    Diverged {
        iter: usize,
        objective: f64,
        limit: f64,
    },

    #[error("trace is missing or inconsistent: {0}")]
    MissingTrace(String),

    #[error(
        "reduced Hessian is not positive definite (smallest eigenvalue {min_eigenvalue:e}); \
         restricted positive definiteness fails at this point"
    )]
    SingularReducedHessian { min_eigenvalue: f64 },

    #[error("conjugate gradient stopped after {iterations} iterations with relative residual {residual:e}")]
    CgFailure { iterations: usize, residual: f64 },

    #[error("{what} did not converge in {iterations} iterations (residual {residual:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("no nondegenerate instance after {attempts} attempts (last gap {min_gap:e})")]
    Degenerate { attempts: usize, min_gap: f64 },

    #[error("active pattern changed under a finite-difference perturbation")]
    PatternMismatch,

    #[error("malformed image: {0}")]
    Image(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn dim_err(msg: impl Into<String>) -> Error {
    Error::Dimension(msg.into())
}

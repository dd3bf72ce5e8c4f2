use thiserror::Error;

/// Errors produced by graph construction, objective generation, algorithm
/// stepping and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("graph is not connected after {attempts} attempt(s)")]
    NotConnected { attempts: usize },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("matrix is not doubly stochastic (max row/col sum deviation {max_dev:e})")]
    NotDoublyStochastic { max_dev: f64 },

    #[error("aggregate normal equations are singular; retry with a new seed")]
    SingularSystem,

    #[error("agent {agent} has all-identical labels and the reference solve diverged")]
    DegenerateLabels { agent: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("objective suite is not strongly convex (mu = 0)")]
    NotStronglyConvex,

    #[error("initial step size {eta0:e} too large for L = {l:e} (requires eta0 * L < 1)")]
    StepTooLarge { eta0: f64, l: f64 },

    #[error("reference solve did not converge: gradient norm {grad_norm:e} > tol {tol:e}")]
    NoConvergence { grad_norm: f64, tol: f64 },

    #[error("non-positive error value in fit window at t = {t}")]
    NonPositiveError { t: u64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid config field `{field}`: {msg}")]
    Validation { field: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

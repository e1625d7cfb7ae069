use thiserror::Error;

use crate::system::PositivityReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is singular or ill-conditioned (reciprocal condition estimate {rcond:e})")]
    Singular { rcond: f64 },

    #[error("system is not positive: {} violation(s), first at {}", .0.violations.len(), .0.first_violation())]
    NotPositive(PositivityReport),

    #[error("matrix A is not Metzler; the LP stability test only applies to Metzler matrices")]
    NotMetzler,

    #[error("system is not asymptotically stable (no copositive linear Lyapunov function exists)")]
    Unstable,

    #[error("linear program is infeasible: {0}")]
    Infeasible(String),

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("simplex did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("malformed linear program: {0}")]
    InvalidLp(String),

    #[error("polynomial degree {degree} exceeds the allowed maximum {max}")]
    Degree { degree: usize, max: usize },

    #[error("combinatorial cap exceeded: {count} items requested, cap is {cap}")]
    Combinatorial { count: usize, cap: usize },

    #[error("value outside its domain: {0}")]
    Domain(String),

    #[error("LFT loop is ill-posed: I - Delta*F00 is singular at delta = {0:?}")]
    IllPosed(Vec<f64>),

    #[error("model error: {0}")]
    Model(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

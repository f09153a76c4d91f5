use thiserror::Error;

use crate::numerics::NumericsError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Numerics(#[from] NumericsError),

    #[error("unknown system family `{0}`")]
    UnknownSystem(String),
    #[error("{family}: missing parameter `{key}`")]
    MissingParam { family: String, key: String },
    #[error("{family}: unknown parameter `{key}`")]
    UnknownParam { family: String, key: String },
    #[error("invalid parameter `{key}`: {reason}")]
    InvalidParam { key: String, reason: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("{what} has rank {rank}, expected {expected}")]
    RankDeficient {
        what: String,
        rank: usize,
        expected: usize,
    },
    #[error("expected a {expected} system")]
    WrongDomain { expected: &'static str },

    #[error("input matrix is square: the annihilator is empty")]
    FullyActuated,
    #[error("state is not an assignable equilibrium (residual {residual:.3e})")]
    NotAssignable { residual: f64 },

    #[error("R̂ is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e}); no constant W exists")]
    RhatNotPsd { min_eigenvalue: f64 },
    #[error("storage matrix P is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    StorageNotPsd { min_eigenvalue: f64 },

    #[error("feedback loop is ill-posed: cond(I + J1 J2) = {condition:.3e}")]
    IllPosed { condition: f64 },
    #[error("system must be square (m = p), got m = {m}, p = {p}")]
    NonSquare { m: usize, p: usize },
    #[error("loop transformation requires zero feedthrough J")]
    NonzeroFeedthrough,
    #[error("invalid sector: {0}")]
    InvalidSector(String),
    #[error("solvability conditions not met: {0}")]
    ConditionsNotMet(String),
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("domain error: {0}")]
    Domain(String),
    #[error("constraint matrix A is not full row rank")]
    RankDeficientA,
    #[error("disturbance set is empty")]
    EmptyDisturbanceSet,

    #[error("trajectory left the finite range at t = {t}")]
    NonFinite { t: f64 },
    #[error("io: {0}")]
    Io(String),
    #[error("json: {0}")]
    Json(String),
    #[error("csv: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library. Every variant carries enough context to name
/// the offending parameter, node or file.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: field has {found}, grid expects {expected}")]
    GridMismatch { expected: String, found: String },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("non-finite {what} at node {coord:?}")]
    NonFiniteSample { what: String, coord: Vec<f64> },

    #[error("non-finite energy ({0})")]
    NonFiniteEnergy(String),

    #[error("the zero pair has no fibering scale")]
    ZeroField,

    #[error("degenerate nonlinearity: mu*|u|_p^p + |v|_q^q = 0, no fibering scale exists")]
    DegenerateNonlinearity,

    #[error("quadratic form is not positive (B = {0:e}); check the potentials")]
    NonpositiveQuadraticForm(f64),

    #[error("lattice translation requires a periodic grid")]
    NotPeriodic,

    #[error("grid does not resolve unit period: {0}")]
    PeriodUnresolved(String),

    #[error("asymptotic validation needs a periodic reference set")]
    MissingReference,

    #[error("{what} did not converge after {iters} iterations")]
    NoConvergence { what: String, iters: usize },

    #[error("wrong regime: {0}")]
    WrongRegime(String),

    #[error("candidate is not positive at node {coord:?} (u = {u:e}, v = {v:e})")]
    NotPositive { coord: Vec<f64>, u: f64, v: f64 },

    #[error("reports are not comparable: {0}")]
    Incomparable(String),

    #[error("config error at {key}: {msg}")]
    Config { key: String, msg: String },

    #[error("field file {path}: {msg}")]
    FieldFile { path: PathBuf, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }
}

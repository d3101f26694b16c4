use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value fell outside the domain of an angle or probability map by more
    /// than floating-point drift. Always a caller bug.
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    /// The repeat loop of a round ran past its analytic bound. Under a
    /// correct binomial oracle this cannot happen.
    #[error("inner loop exceeded {limit} batches in round {round}")]
    InnerLoopExceeded { round: usize, limit: u64 },

    #[error("{method} exceeded {limit} rounds without reaching the target width")]
    RoundLimit { method: &'static str, limit: u64 },

    #[error("scaling fit needs at least 3 distinct epsilon values, got {0}")]
    TooFewPoints(usize),

    #[error("malformed report {path}: {msg}")]
    Report { path: PathBuf, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

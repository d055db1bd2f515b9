use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("sample count must be at least {min}, got {got}")]
    TooFewSamples { min: usize, got: usize },

    #[error("trace has zero current variance; remote resistance cannot be inferred")]
    DegenerateTrace,

    #[error("resistance estimate must be positive and finite, got {0}")]
    NonPositiveEstimate(f64),

    #[error("attempt cap of {cap} reached with {retained} of {target} secure bits")]
    AttemptCapExceeded {
        cap: usize,
        retained: usize,
        target: usize,
    },

    #[error("no attackable secure bits")]
    NoSecureBits,

    #[error("invalid defense: {0}")]
    InvalidDefense(String),

    #[error("bandwidth {requested} Hz exceeds the wave limit of {limit} Hz")]
    WaveLimitExceeded { requested: f64, limit: f64 },

    #[error("invalid sweep configuration: {0}")]
    InvalidSweep(String),

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("result is empty; nothing to write")]
    EmptyResult,

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

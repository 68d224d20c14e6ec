use std::io;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation failed:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error("{kind} window space would exceed the cap of {cap} windows")]
    WindowCap { kind: &'static str, cap: usize },

    #[error("impossible observation: likelihood {likelihood:e} is below {threshold:e}")]
    ImpossibleObservation { likelihood: f64, threshold: f64 },

    #[error("backup would enumerate {candidates} candidate vectors (cap {cap}); enable incremental pruning")]
    CandidateCap { candidates: f64, cap: usize },

    #[error("linear program failed while testing vector {index}: {message}")]
    Lp { index: usize, message: String },

    #[error("gamma set for follower state {state} is empty")]
    EmptyGammaSet { state: usize },

    #[error("value iteration did not converge in {iterations} iterations (residual {residual:e}, target {target:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        target: f64,
    },

    #[error("window-pair system has {pairs} pairs, above the cap of {cap}")]
    DimensionCap { pairs: usize, cap: usize },

    #[error("linear system is numerically singular")]
    Singular,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("{what} count {count} exceeds the cap of {cap}")]
    CapExceeded {
        what: &'static str,
        count: f64,
        cap: usize,
    },

    #[error("observation kernel does not factorize into per-agent channels")]
    NotFactorizable,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

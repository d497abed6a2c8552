//! Crate-wide error type.

use std::path::PathBuf;

/// Errors surfaced by field construction, the numerical engines, and the
/// experiment harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An explicit time step exceeded the von Neumann bound.
    #[error("stability violation: dt = {dt} s exceeds the stable maximum {max_dt} s")]
    StabilityViolation { dt: f64, max_dt: f64 },

    /// The Bayes update collapsed: prediction and likelihood place no joint
    /// mass on any velocity channel at some node.
    #[error("degenerate update at node {node}: normalization {norm} below 1e-300")]
    DegenerateUpdate { node: usize, norm: f64 },

    /// A field developed a negative value too large to be attributed to
    /// round-off (magnitude above 1e-12).
    #[error("negative probability {value} at node {node}, channel {channel}")]
    NegativeProbability {
        node: usize,
        channel: usize,
        value: f64,
    },

    /// Malformed experiment configuration or stimulus file.
    #[error("config error: {0}")]
    Config(String),

    /// I/O failure, annotated with the path involved.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates the invariant of the quantity it describes.
    #[error("{name} out of range: {reason}")]
    Domain { name: &'static str, reason: String },

    /// The requested synthesis exceeds what the generator will allocate.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("insufficient statistics: {0}")]
    Statistics(String),

    #[error("no segment with at least two samples survived the slope band")]
    EmptySegments,

    /// The mean phase change never reached the requested target.
    #[error(
        "target {target} rad not reached; maximum mean phase change observed is {max_observed} rad"
    )]
    NotReached { target: f64, max_observed: f64 },

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Rejects NaN and infinities before any range check runs.
pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::domain(name, format!("must be finite, got {value}")))
    }
}

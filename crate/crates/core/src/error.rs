use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("window {window:?} does not fit inside a {height}x{width} image")]
    WindowOutOfBounds {
        window: crate::image::Window,
        height: usize,
        width: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("alignment violation: {0}")]
    Alignment(String),

    #[error("time step {t} out of range (schedule has {steps} steps)")]
    StepOutOfRange { t: usize, steps: usize },

    #[error("non-finite state at step {step}: {context}")]
    NonFinite { step: usize, context: String },

    #[error("malformed image file: {0}")]
    Format(String),

    #[error("invalid prior: {0}")]
    Prior(String),

    #[error("tile {index} processed out of order (expected {expected})")]
    TileOrder { index: usize, expected: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which side of an image failed a size check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Width,
    Height,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dimension::Width => f.write_str("width"),
            Dimension::Height => f.write_str("height"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {dimension} {actual}px is smaller than the {crop}px crop")]
    ImageTooSmall {
        path: String,
        dimension: Dimension,
        actual: u32,
        crop: u32,
    },

    #[error("failed to decode {}: {reason}", path.display())]
    Decode { path: PathBuf, reason: String },

    #[error("{}: unsupported color layout ({layout}), expected three-channel RGB", path.display())]
    UnsupportedColor { path: PathBuf, layout: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("need at least {needed} images, got {found}")]
    InsufficientImages { needed: usize, found: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("degenerate corpus: every image is constant in the {channel} channel")]
    DegenerateCorpus { channel: String },

    #[error("eigenvalue {index} is negative ({value:e}) beyond round-off tolerance")]
    NegativeEigenvalue { index: usize, value: f64 },

    #[error("component {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("image {image_id} has a constant {channel} channel; Pearson correlation is undefined")]
    ConstantChannel { image_id: u32, channel: String },

    #[error("channel count mismatch: {0}")]
    ChannelCountMismatch(String),

    #[error("malformed tensor dump: {0}")]
    Format(String),

    #[error("failed to encode image: {0}")]
    Encode(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Failures caused by the numeric content of the data rather than by I/O
    /// or bad arguments.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::DegenerateCorpus { .. }
                | Error::ConstantChannel { .. }
                | Error::NegativeEigenvalue { .. }
        )
    }

    /// Failures reading, decoding or validating input files.
    pub fn is_input(&self) -> bool {
        matches!(
            self,
            Error::ImageTooSmall { .. }
                | Error::Decode { .. }
                | Error::UnsupportedColor { .. }
                | Error::Format(_)
                | Error::Io { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

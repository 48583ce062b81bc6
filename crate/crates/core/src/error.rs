use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("truncated input: need {expected} {unit}, found {actual}")]
    Truncated {
        expected: u64,
        actual: u64,
        unit: &'static str,
    },

    #[error("dimensions {width}x{height} are not multiples of 16")]
    UnalignedDimensions { width: usize, height: usize },

    #[error("unsupported Y4M colorspace `{0}` (only 4:2:0 is accepted)")]
    UnsupportedColorspace(String),

    #[error("malformed Y4M stream: {0}")]
    BadY4m(String),

    #[error("inconsistent dimensions: {0}")]
    DimensionMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

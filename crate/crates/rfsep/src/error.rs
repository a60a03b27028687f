use thiserror::Error;

/// Errors produced across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("bit count not multiple of 2")]
    OddBitCount,

    #[error("bit count mismatch: expected {expected}, got {got}")]
    BitCountMismatch { expected: usize, got: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("signal too short: length {len}, need at least {need}")]
    SignalTooShort { len: usize, need: usize },

    #[error("frame of length {frame_len} shorter than requested window {window_len}")]
    FrameTooShort { frame_len: usize, window_len: usize },

    #[error("no spectral content")]
    NoSpectralContent,

    #[error("covariance matrix is singular; increase the regularization epsilon")]
    SingularCovariance,

    #[error("covariance matrix is not positive semidefinite")]
    NotPositiveSemidefinite,

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {reason}")]
    MalformedFile { path: String, reason: String },

    #[error("malformed data: {0}")]
    MalformedData(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

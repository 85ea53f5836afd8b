use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors produced anywhere in the analysis / enhancement / evaluation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),
    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt wav header: {0}")]
    CorruptHeader(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("sample rate mismatch: {left} Hz vs {right} Hz")]
    SampleRateMismatch { left: u32, right: u32 },
    #[error("noise is shorter than the clean signal ({noise} < {clean} samples)")]
    NoiseTooShort { clean: usize, noise: usize },
    #[error("input has zero energy")]
    SilentInput,
    #[error("signal too short: {len} samples, need at least {needed}")]
    SignalTooShort { len: usize, needed: usize },
    #[error("length mismatch: {left} vs {right} samples")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid window length {0}, need at least 2")]
    InvalidLength(usize),
    #[error("overlap-add normalizer vanishes at sample {sample} ({value:e})")]
    ColaViolation { sample: usize, value: f64 },
    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("negative magnitude {0}")]
    NegativeMagnitude(f64),
    #[error("noise estimate is zero or negative in bin {0}")]
    ZeroNoiseEstimate(usize),
    #[error("bin count mismatch: {left} vs {right}")]
    BinCountMismatch { left: usize, right: usize },

    #[error("tracker initialization needs at least one frame")]
    EmptyInit,

    #[error("every frame is silent")]
    AllFramesSilent,
    #[error("autocorrelation matrix is singular")]
    SingularAutocorrelation,

    #[error("spectrogram input has no frames")]
    EmptyMatrix,

    #[error("{condition}: {source}")]
    Condition {
        condition: String,
        #[source]
        source: Box<Error>,
    },
    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wraps an error with the evaluation condition that produced it.
    pub fn in_condition(self, condition: impl Into<String>) -> Self {
        Error::Condition {
            condition: condition.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, looking through condition annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::Condition { source, .. } => source.root(),
            other => other,
        }
    }
}

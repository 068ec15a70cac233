use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty stream: {0}")]
    EmptyStream(String),
    #[error("timestamps not strictly increasing in stream `{stream}` at index {index}")]
    NonMonotonicTimestamps { stream: String, index: usize },
    #[error("insufficient references: need at least 2 point pairs, got {0}")]
    InsufficientReferences(usize),
    #[error("reference point counts differ: {visible} visible vs {ir} infrared")]
    ReferenceCountMismatch { visible: usize, ir: usize },
    #[error("degenerate reference geometry")]
    DegenerateReferences,
    #[error("canvas too small: image {image_w}x{image_h} does not fit canvas {canvas_w}x{canvas_h}")]
    CanvasTooSmall {
        image_w: usize,
        image_h: usize,
        canvas_w: usize,
        canvas_h: usize,
    },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("undefined correlation: {0} has zero variance")]
    UndefinedCorrelation(&'static str),
    #[error("empty mask")]
    EmptyMask,
    #[error("no flame detected")]
    NoFlameDetected,
    #[error("zero frequency for class {0}; drop or smooth the class before computing weights")]
    ZeroClassFrequency(usize),
    #[error("division by zero: {series}[{index}] is 0")]
    ZeroDenominator { series: &'static str, index: usize },
    #[error("non-finite loss at step {step}: {detail}")]
    NonFiniteLoss { step: usize, detail: String },
    #[error("checkpoint not found: {0}")]
    CheckpointNotFound(String),
    #[error("checkpoint {path}: {reason}")]
    BadCheckpoint { path: PathBuf, reason: String },
    #[error("stage `{stage}` failed on frame `{frame}`: {source}")]
    Stage {
        stage: &'static str,
        frame: String,
        #[source]
        source: Box<Error>,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Tensor(#[from] candle_core::Error),
    #[error(transparent)]
    Safetensors(#[from] safetensors::SafeTensorError),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn at_stage(self, stage: &'static str, frame: impl Into<String>) -> Self {
        Error::Stage {
            stage,
            frame: frame.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn dims(expected: impl ToString, actual: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

use crate::variant::VariantFamily;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid logits: {0}")]
    InvalidLogits(String),

    #[error("invalid vocabulary size {0}: need at least 2 tokens")]
    InvalidVocab(usize),

    #[error("shape mismatch: expected vocab size {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("fusion requires at least one contrastive variant")]
    EmptyVariantSet,

    #[error("single-sample calibration takes exactly one variant, got {0}")]
    SingleNeedsOneVariant(usize),

    #[error("plausibility beta must lie in [0, 1], got {0}")]
    InvalidBeta(f64),

    #[error("contrast weight alpha must be finite and non-negative, got {0}")]
    InvalidAlpha(f64),

    #[error("noise step {steps} exceeds schedule length {total}")]
    StepOutOfRange { steps: u32, total: u32 },

    #[error("invalid noise schedule: {0}")]
    InvalidSchedule(String),

    #[error("downsample ratio {ratio} is larger than image side ({height}x{width})")]
    RatioTooLarge { ratio: u32, height: usize, width: usize },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("yes and no token sets overlap on token {0}")]
    InvalidAnswerMap(u32),

    #[error("gold answer must be yes or no")]
    InvalidGold,

    #[error("record file line {line}: {message}")]
    RecordFormat { line: usize, message: String },

    #[error("duplicate record for ({sample_id}, {variant})")]
    DuplicateRecord { sample_id: String, variant: String },

    #[error("dataset line {line}: {message}")]
    DatasetFormat { line: usize, message: String },

    #[error("duplicate sample id {0} in dataset")]
    DuplicateSample(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("missing logits for ({sample_id}, {variant})")]
    MissingVariant { sample_id: String, variant: VariantFamily },

    #[error("no yes/no token mapping available for sample {0}")]
    MissingAnswerMap(String),

    #[error("csv output: {0}")]
    Csv(String),

    #[error("thread pool: {0}")]
    ThreadPool(String),

    #[error("unknown method {0:?}")]
    UnknownMethod(String),

    #[error("overlap matrix needs at least two methods, got {0}")]
    TooFewMethods(usize),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image codec: {0}")]
    Codec(#[from] image::ImageError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Errors caused by the content of an input file or by a provider that
    /// cannot serve a request, as opposed to programming or argument errors.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::RecordFormat { .. }
                | Error::DuplicateRecord { .. }
                | Error::DatasetFormat { .. }
                | Error::DuplicateSample(_)
                | Error::EmptyDataset
                | Error::MissingVariant { .. }
                | Error::MissingAnswerMap(_)
                | Error::ShapeMismatch { .. }
                | Error::InvalidLogits(_)
                | Error::InvalidVocab(_)
                | Error::InvalidAnswerMap(_)
                | Error::InvalidImage(_)
                | Error::Io { .. }
                | Error::Codec(_)
                | Error::Json(_)
        )
    }
}

//! Visual contrastive decoding for vision-language models.
//!
//! Contrastive decoding suppresses tokens that a model would also predict
//! from a degraded view of the image. This crate provides the degradations
//! ([`perturb`]), the logit-space contrast and fusion rules ([`calibrate`]),
//! probability-level diagnostics ([`metrics`]), a replayable record format
//! for captured logits ([`records`]) and a yes/no QA evaluation harness
//! ([`harness`]).

pub mod calibrate;
pub mod config;
pub mod error;
pub mod harness;
pub mod logits;
pub mod metrics;
pub mod perturb;
pub mod records;
pub mod variant;

pub use calibrate::{
    apply_plausibility, calibrate, cd_single, fuse_naive, fuse_weighted, fuse_with_weights, metric_weights,
    CalibrationInput, CalibrationOutput,
};
pub use config::{CalibrationConfig, Fusion, WeightMetric};
pub use error::{Error, Result};
pub use logits::{softmax, Distribution, LogitValues, LogitVector};
pub use metrics::{AnswerClass, AnswerMap, RevisionClass};
pub use records::{RecordFile, RecordHeader, VariantRecord};
pub use variant::{VariantFamily, VariantKind};

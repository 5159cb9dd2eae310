use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-variant weight used by metric-weighted fusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMetric {
    /// Entropy of the variant distribution, in nats.
    Entropy,
    /// Max probability of the variant distribution.
    Confidence,
    /// Reciprocal of the confidence.
    Unconfidence,
    /// Hellinger distance between the original and variant distributions.
    Pdd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Fusion {
    /// Contrast against exactly one variant.
    Single,
    /// Every variant subtracted with the same weight alpha.
    Naive,
    /// Each variant weighted by a probability-level metric of its own output.
    Weighted { metric: WeightMetric },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub alpha: f64,
    pub beta: f64,
    pub fusion: Fusion,
    /// Divide the naive-fusion contrast by the number of variants.
    pub normalize_naive: bool,
    /// Global multiplier on metric weights; 1.0 applies the metric values as-is.
    pub weight_scale: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 0.2, fusion: Fusion::Single, normalize_naive: false, weight_scale: 1.0 }
    }
}

impl CalibrationConfig {
    pub fn with_fusion(fusion: Fusion) -> Self {
        Self { fusion, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(Error::InvalidAlpha(self.alpha));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::InvalidBeta(self.beta));
        }
        if !self.weight_scale.is_finite() || self.weight_scale < 0.0 {
            return Err(Error::InvalidAlpha(self.weight_scale));
        }
        Ok(())
    }
}

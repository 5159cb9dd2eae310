//! Contrastive decoding in logit space.
//!
//! Every transform is written as `original + Σ weight·(original − variant)`.
//! Keeping the original as the leading term makes the degenerate cases exact:
//! a variant equal to the original adds `weight·0.0`, so the output equals the
//! input bit for bit, and single-sample contrast, one-variant naive fusion and
//! one-variant weighted fusion with weight alpha produce identical bits.
//!
//! `-inf` handling: an original score of `-inf` stays `-inf`; a variant score
//! of `-inf` carries no contrast for that token, so its difference term is 0.

use std::collections::BTreeSet;

use crate::config::{CalibrationConfig, Fusion, WeightMetric};
use crate::error::{Error, Result};
use crate::logits::{masked_softmax, softmax, Distribution, LogitVector};
use crate::metrics::hellinger;
use crate::variant::VariantKind;

#[derive(Debug, Clone)]
pub struct CalibrationInput {
    pub original: LogitVector,
    pub variants: Vec<(VariantKind, LogitVector)>,
    pub config: CalibrationConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOutput {
    pub distribution: Distribution,
    /// Contrast weight applied to each variant, in input order.
    pub weights_used: Vec<f64>,
    /// Tokens passing the plausibility constraint, ascending.
    pub survivors: BTreeSet<u32>,
}

fn difference(orig: f64, variant: f64) -> f64 {
    if variant == f64::NEG_INFINITY {
        0.0
    } else {
        orig - variant
    }
}

fn check_vocab(original: &LogitVector, variants: &[&LogitVector]) -> Result<()> {
    for v in variants {
        original.check_same_vocab(v)?;
    }
    Ok(())
}

fn finish(scores: Vec<f64>) -> Result<LogitVector> {
    if let Some((i, s)) = scores.iter().enumerate().find(|(_, s)| s.is_nan() || **s == f64::INFINITY) {
        return Err(Error::InvalidLogits(format!("calibrated score of token {i} is {s}")));
    }
    LogitVector::dense(scores)
}

/// Single-sample contrast: `(1+α)·original − α·variant`.
pub fn cd_single(original: &LogitVector, variant: &LogitVector, alpha: f64) -> Result<LogitVector> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::InvalidAlpha(alpha));
    }
    check_vocab(original, &[variant])?;
    let o = original.to_dense_vec();
    let v = variant.to_dense_vec();
    let out = o
        .iter()
        .zip(&v)
        .map(|(&lo, &lv)| if lo == f64::NEG_INFINITY { lo } else { lo + alpha * difference(lo, lv) })
        .collect();
    finish(out)
}

/// Equal-weight fusion: `(1+α)·original − α·Σ variants`, or `− (α/k)·Σ variants`
/// when `normalize` is set.
pub fn fuse_naive(
    original: &LogitVector,
    variants: &[&LogitVector],
    alpha: f64,
    normalize: bool,
) -> Result<LogitVector> {
    if variants.is_empty() {
        return Err(Error::EmptyVariantSet);
    }
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::InvalidAlpha(alpha));
    }
    check_vocab(original, variants)?;
    let o = original.to_dense_vec();
    let vs: Vec<Vec<f64>> = variants.iter().map(|v| v.to_dense_vec()).collect();
    let k = if normalize { vs.len() as f64 } else { 1.0 };
    let out = o
        .iter()
        .enumerate()
        .map(|(t, &lo)| {
            if lo == f64::NEG_INFINITY {
                return lo;
            }
            // -inf variant scores stand in as the original so they contribute nothing.
            let sum = vs.iter().map(|v| if v[t] == f64::NEG_INFINITY { lo } else { v[t] }).fold(0.0, |acc, x| acc + x);
            lo + alpha * (lo - sum / k)
        })
        .collect();
    finish(out)
}

/// Fusion with caller-supplied per-variant weights:
/// `original + Σ wᵢ·(original − variantᵢ)`.
pub fn fuse_with_weights(original: &LogitVector, variants: &[&LogitVector], weights: &[f64]) -> Result<LogitVector> {
    if variants.is_empty() {
        return Err(Error::EmptyVariantSet);
    }
    if weights.len() != variants.len() {
        return Err(Error::ShapeMismatch { expected: variants.len(), found: weights.len() });
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
        return Err(Error::InvalidAlpha(*w));
    }
    check_vocab(original, variants)?;
    let o = original.to_dense_vec();
    let vs: Vec<Vec<f64>> = variants.iter().map(|v| v.to_dense_vec()).collect();
    let out = o
        .iter()
        .enumerate()
        .map(|(t, &lo)| {
            if lo == f64::NEG_INFINITY {
                return lo;
            }
            let shift = vs.iter().zip(weights).fold(0.0, |acc, (v, &w)| acc + w * difference(lo, v[t]));
            lo + shift
        })
        .collect();
    finish(out)
}

/// Weight each variant by a metric of its own output distribution.
pub fn metric_weights(original: &LogitVector, variants: &[&LogitVector], metric: WeightMetric) -> Result<Vec<f64>> {
    let base = match metric {
        WeightMetric::Pdd => Some(softmax(original)?),
        _ => None,
    };
    variants
        .iter()
        .map(|v| {
            let d = softmax(v)?;
            Ok(match metric {
                WeightMetric::Entropy => d.entropy(),
                WeightMetric::Confidence => d.confidence(),
                WeightMetric::Unconfidence => 1.0 / d.confidence(),
                WeightMetric::Pdd => hellinger(base.as_ref().expect("computed above"), &d)?,
            })
        })
        .collect()
}

/// Metric-weighted fusion; returns the fused scores and the weights used.
pub fn fuse_weighted(
    original: &LogitVector,
    variants: &[&LogitVector],
    metric: WeightMetric,
) -> Result<(LogitVector, Vec<f64>)> {
    if variants.is_empty() {
        return Err(Error::EmptyVariantSet);
    }
    check_vocab(original, variants)?;
    let weights = metric_weights(original, variants, metric)?;
    let fused = fuse_with_weights(original, variants, &weights)?;
    Ok((fused, weights))
}

/// Restricts `calibrated` to tokens whose probability under the unmodified
/// `raw` scores is at least `beta` times the top probability.
pub fn apply_plausibility(raw: &LogitVector, calibrated: &LogitVector, beta: f64) -> Result<CalibrationOutput> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidBeta(beta));
    }
    raw.check_same_vocab(calibrated)?;
    let p = softmax(raw)?;
    let threshold = beta * p.confidence();
    let mask: Vec<bool> = p.probs().iter().map(|&x| x >= threshold).collect();
    let survivors: BTreeSet<u32> = mask.iter().enumerate().filter(|(_, &k)| k).map(|(i, _)| i as u32).collect();
    let distribution = masked_softmax(&calibrated.to_dense_vec(), Some(&mask))?;
    Ok(CalibrationOutput { distribution, weights_used: Vec::new(), survivors })
}

/// Runs the configured fusion and then the plausibility constraint.
pub fn calibrate(input: &CalibrationInput) -> Result<CalibrationOutput> {
    let cfg = &input.config;
    cfg.validate()?;
    if input.variants.is_empty() {
        return Err(Error::EmptyVariantSet);
    }
    let variants: Vec<&LogitVector> = input.variants.iter().map(|(_, l)| l).collect();
    let (scores, weights) = match cfg.fusion {
        Fusion::Single => {
            if variants.len() != 1 {
                return Err(Error::SingleNeedsOneVariant(variants.len()));
            }
            (cd_single(&input.original, variants[0], cfg.alpha)?, vec![cfg.alpha])
        }
        Fusion::Naive => {
            let per = if cfg.normalize_naive { cfg.alpha / variants.len() as f64 } else { cfg.alpha };
            let scores = fuse_naive(&input.original, &variants, cfg.alpha, cfg.normalize_naive)?;
            (scores, vec![per; variants.len()])
        }
        Fusion::Weighted { metric } => {
            check_vocab(&input.original, &variants)?;
            let mut weights = metric_weights(&input.original, &variants, metric)?;
            if cfg.weight_scale != 1.0 {
                for w in &mut weights {
                    *w *= cfg.weight_scale;
                }
            }
            (fuse_with_weights(&input.original, &variants, &weights)?, weights)
        }
    };
    let mut out = apply_plausibility(&input.original, &scores, cfg.beta)?;
    out.weights_used = weights;
    Ok(out)
}

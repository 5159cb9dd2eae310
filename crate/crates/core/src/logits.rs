//! Next-token score vectors and the probability distributions derived from them.
//!
//! A [`LogitVector`] is either dense (one score per vocabulary entry) or sparse
//! (a handful of listed tokens plus a floor score shared by every unlisted
//! token). Real model vocabularies run from tens to hundreds of thousands of
//! entries, so captured records usually keep only the top-k scores.
//!
//! Scores may be `-inf` to mark tokens that can never be produced. `+inf` and
//! NaN are rejected everywhere.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum LogitValues {
    Dense(Vec<f64>),
    Sparse { ids: Vec<u32>, values: Vec<f64>, floor: f64 },
}

/// Pre-softmax scores over a vocabulary for a single decoding step.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitVector {
    vocab_size: usize,
    values: LogitValues,
}

fn check_score(v: f64, what: &str) -> Result<()> {
    if v.is_nan() || v == f64::INFINITY {
        return Err(Error::InvalidLogits(format!("{what} is {v}")));
    }
    Ok(())
}

impl LogitVector {
    pub fn dense(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidVocab(values.len()));
        }
        for (i, &v) in values.iter().enumerate() {
            check_score(v, &format!("score of token {i}"))?;
        }
        if values.iter().all(|v| *v == f64::NEG_INFINITY) {
            return Err(Error::InvalidLogits("every score is -inf".into()));
        }
        Ok(Self { vocab_size: values.len(), values: LogitValues::Dense(values) })
    }

    /// Sparse scores: `ids[i]` carries `values[i]`, every other token gets `floor`.
    ///
    /// Listed values must be finite. `floor` may be finite or `-inf`.
    pub fn sparse(vocab_size: usize, ids: Vec<u32>, values: Vec<f64>, floor: f64) -> Result<Self> {
        if vocab_size < 2 {
            return Err(Error::InvalidVocab(vocab_size));
        }
        if ids.len() != values.len() {
            return Err(Error::InvalidLogits(format!("{} sparse ids but {} values", ids.len(), values.len())));
        }
        check_score(floor, "floor")?;
        let mut seen = std::collections::HashSet::with_capacity(ids.len());
        for (&id, &v) in ids.iter().zip(&values) {
            if id as usize >= vocab_size {
                return Err(Error::InvalidLogits(format!("token id {id} outside vocabulary of {vocab_size}")));
            }
            if !seen.insert(id) {
                return Err(Error::InvalidLogits(format!("token id {id} listed twice")));
            }
            if !v.is_finite() {
                return Err(Error::InvalidLogits(format!("sparse score of token {id} is {v}")));
            }
        }
        if ids.is_empty() && floor == f64::NEG_INFINITY {
            return Err(Error::InvalidLogits("every score is -inf".into()));
        }
        Ok(Self { vocab_size, values: LogitValues::Sparse { ids, values, floor } })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn values(&self) -> &LogitValues {
        &self.values
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.values, LogitValues::Dense(_))
    }

    /// Dense copy of the scores; unlisted sparse tokens take the floor.
    pub fn to_dense_vec(&self) -> Vec<f64> {
        match &self.values {
            LogitValues::Dense(v) => v.clone(),
            LogitValues::Sparse { ids, values, floor } => {
                let mut out = vec![*floor; self.vocab_size];
                for (&id, &v) in ids.iter().zip(values) {
                    out[id as usize] = v;
                }
                out
            }
        }
    }

    pub fn densify(&self) -> LogitVector {
        LogitVector { vocab_size: self.vocab_size, values: LogitValues::Dense(self.to_dense_vec()) }
    }

    /// Highest-scoring token, lowest id on ties.
    pub fn argmax(&self) -> u32 {
        argmax(&self.to_dense_vec())
    }

    pub(crate) fn check_same_vocab(&self, other: &LogitVector) -> Result<()> {
        if self.vocab_size != other.vocab_size {
            return Err(Error::ShapeMismatch { expected: self.vocab_size, found: other.vocab_size });
        }
        Ok(())
    }
}

pub(crate) fn argmax(xs: &[f64]) -> u32 {
    let mut best = 0usize;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best as u32
}

/// A normalized probability vector with cached entropy (nats) and confidence.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
    entropy: f64,
    confidence: f64,
}

impl Distribution {
    /// Wraps a probability vector that already sums to one.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidVocab(probs.len()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidLogits("probabilities must be finite and non-negative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidLogits(format!("probabilities sum to {total}")));
        }
        Ok(Self::new_unchecked(probs))
    }

    pub(crate) fn new_unchecked(probs: Vec<f64>) -> Self {
        let max_entropy = (probs.len() as f64).ln();
        let entropy = probs.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum::<f64>().clamp(0.0, max_entropy);
        let confidence = probs.iter().copied().fold(0.0, f64::max);
        Self { probs, entropy, confidence }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn vocab_size(&self) -> usize {
        self.probs.len()
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        self.entropy
    }

    /// Probability of the most likely token.
    pub fn confidence(&self) -> f64 {
        self.confidence
    }

    pub fn argmax(&self) -> u32 {
        argmax(&self.probs)
    }

    /// The `k` most likely tokens with their probabilities, lowest id first on ties.
    pub fn top_k(&self, k: usize) -> Vec<(u32, f64)> {
        let mut idx: Vec<u32> = (0..self.probs.len() as u32).collect();
        idx.sort_by(|&a, &b| self.probs[b as usize].total_cmp(&self.probs[a as usize]).then(a.cmp(&b)));
        idx.into_iter().take(k).map(|i| (i, self.probs[i as usize])).collect()
    }
}

/// Numerically stable softmax over a dense score slice restricted to `mask`
/// (`None` keeps every token). Masked-out tokens get probability exactly 0.
pub(crate) fn masked_softmax(scores: &[f64], mask: Option<&[bool]>) -> Result<Distribution> {
    let keep = |i: usize| mask.is_none_or(|m| m[i]);
    let mut max = f64::NEG_INFINITY;
    for (i, &s) in scores.iter().enumerate() {
        if s.is_nan() || s == f64::INFINITY {
            return Err(Error::InvalidLogits(format!("score of token {i} is {s}")));
        }
        if keep(i) && s > max {
            max = s;
        }
    }
    if max == f64::NEG_INFINITY {
        return Err(Error::InvalidLogits("no token with a finite score".into()));
    }
    let mut probs: Vec<f64> =
        scores.iter().enumerate().map(|(i, &s)| if keep(i) { (s - max).exp() } else { 0.0 }).collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    Ok(Distribution::new_unchecked(probs))
}

/// Converts scores to a probability distribution.
pub fn softmax(logits: &LogitVector) -> Result<Distribution> {
    masked_softmax(&logits.to_dense_vec(), None)
}

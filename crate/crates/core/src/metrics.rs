//! Probability-level analysis: entropy, confidence, Hellinger distance,
//! answer and revision classification, and Jaccard overlap.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logits::Distribution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerClass {
    Yes,
    No,
    Other,
}

impl AnswerClass {
    pub const ALL: [AnswerClass; 3] = [AnswerClass::Yes, AnswerClass::No, AnswerClass::Other];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RevisionClass {
    UnchangedCorrect,
    UnchangedWrong,
    ReviseCorrect,
    ReviseWrong,
}

impl RevisionClass {
    pub const ALL: [RevisionClass; 4] = [
        RevisionClass::UnchangedCorrect,
        RevisionClass::UnchangedWrong,
        RevisionClass::ReviseCorrect,
        RevisionClass::ReviseWrong,
    ];
}

/// Token ids whose surface forms read as "yes" and "no".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "AnswerMapRepr")]
pub struct AnswerMap {
    yes: BTreeSet<u32>,
    no: BTreeSet<u32>,
}

#[derive(Deserialize)]
struct AnswerMapRepr {
    yes: BTreeSet<u32>,
    no: BTreeSet<u32>,
}

impl TryFrom<AnswerMapRepr> for AnswerMap {
    type Error = Error;

    fn try_from(r: AnswerMapRepr) -> Result<Self> {
        AnswerMap::new(r.yes, r.no)
    }
}

impl AnswerMap {
    pub fn new(yes: impl IntoIterator<Item = u32>, no: impl IntoIterator<Item = u32>) -> Result<Self> {
        let yes: BTreeSet<u32> = yes.into_iter().collect();
        let no: BTreeSet<u32> = no.into_iter().collect();
        if let Some(&t) = yes.intersection(&no).next() {
            return Err(Error::InvalidAnswerMap(t));
        }
        Ok(Self { yes, no })
    }

    pub fn yes(&self) -> &BTreeSet<u32> {
        &self.yes
    }

    pub fn no(&self) -> &BTreeSet<u32> {
        &self.no
    }

    pub fn classify_token(&self, token: u32) -> AnswerClass {
        if self.yes.contains(&token) {
            AnswerClass::Yes
        } else if self.no.contains(&token) {
            AnswerClass::No
        } else {
            AnswerClass::Other
        }
    }
}

pub fn entropy(d: &Distribution) -> f64 {
    d.entropy()
}

pub fn confidence(d: &Distribution) -> f64 {
    d.confidence()
}

/// Hellinger distance normalized to `[0, 1]`.
pub fn hellinger(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.vocab_size() != q.vocab_size() {
        return Err(Error::ShapeMismatch { expected: p.vocab_size(), found: q.vocab_size() });
    }
    let sq: f64 = p
        .probs()
        .iter()
        .zip(q.probs())
        .map(|(a, b)| {
            let d = a.sqrt() - b.sqrt();
            d * d
        })
        .sum();
    Ok((sq / 2.0).sqrt().min(1.0))
}

/// Maps the argmax token (lowest id on ties) to an answer class.
pub fn classify_answer(d: &Distribution, yes_ids: &BTreeSet<u32>, no_ids: &BTreeSet<u32>) -> Result<AnswerClass> {
    let map = AnswerMap::new(yes_ids.iter().copied(), no_ids.iter().copied())?;
    Ok(map.classify_token(d.argmax()))
}

pub fn classify_revision(orig: AnswerClass, cal: AnswerClass, gold: AnswerClass) -> Result<RevisionClass> {
    if gold == AnswerClass::Other {
        return Err(Error::InvalidGold);
    }
    let correct = cal == gold;
    Ok(match (orig == cal, correct) {
        (true, true) => RevisionClass::UnchangedCorrect,
        (true, false) => RevisionClass::UnchangedWrong,
        (false, true) => RevisionClass::ReviseCorrect,
        (false, false) => RevisionClass::ReviseWrong,
    })
}

/// `|a ∩ b| / |a ∪ b|`, taken as 1 when both sets are empty.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Fixed-width histogram over `[lo, hi]`; values past either end land in the edge bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        assert!(bins > 0 && hi > lo, "histogram needs a non-empty range and at least one bin");
        Self { lo, hi, counts: vec![0; bins] }
    }

    pub fn bin_of(&self, x: f64) -> usize {
        let n = self.counts.len();
        let t = (x - self.lo) / (self.hi - self.lo);
        ((t * n as f64).floor().max(0.0) as usize).min(n - 1)
    }

    pub fn add(&mut self, x: f64) {
        let b = self.bin_of(x);
        self.counts[b] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn edges(&self, bin: usize) -> (f64, f64) {
        let w = (self.hi - self.lo) / self.counts.len() as f64;
        (self.lo + w * bin as f64, self.lo + w * (bin + 1) as f64)
    }
}

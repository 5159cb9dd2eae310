//! Seeded synthetic logits for desk-scale scenarios.
//!
//! Every sample has a yes token, a no token and `vocab_size − 2` filler
//! tokens. Filler scores are drawn once per sample and shared by all of its
//! variants, so variants read as perturbations of the same prediction. The
//! yes/no margin (yes minus no) is either scripted per sample or drawn from
//! the sample stream, optionally biased toward the gold answer.
//!
//! Per-variant knobs:
//! - `entropy_raise` lifts every filler score, spreading mass off the answer
//!   tokens and raising entropy.
//! - `margin_shift` moves the yes/no margin (positive leans yes).
//! - `jitter` adds independent noise per variant to the filler scores.
//! - `prior_token`/`prior_bias` add a fixed bias to one token.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::dataset::QaItem;
use super::provider::LogitProvider;
use crate::error::{Error, Result};
use crate::logits::LogitVector;
use crate::metrics::{AnswerClass, AnswerMap};
use crate::variant::{VariantFamily, VariantKind};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariantKnobs {
    pub entropy_raise: f64,
    pub margin_shift: f64,
    pub jitter: f64,
    pub prior_token: Option<u32>,
    pub prior_bias: f64,
}

/// Fixed yes/no margins for one sample: the original and, optionally, per variant family.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleScript {
    pub margin: f64,
    #[serde(default)]
    pub variants: BTreeMap<VariantFamily, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MockConfig {
    pub vocab_size: usize,
    pub yes_token: u32,
    pub no_token: u32,
    pub seed: u64,
    pub filler_mean: f64,
    pub filler_spread: f64,
    /// Unscripted margins are uniform in `[-margin_scale, margin_scale]`.
    pub margin_scale: f64,
    /// Added toward the gold answer when the provider knows it.
    pub truth_bias: f64,
    pub knobs: BTreeMap<VariantFamily, VariantKnobs>,
    pub scripts: BTreeMap<String, SampleScript>,
}

impl Default for MockConfig {
    fn default() -> Self {
        let knob = |entropy_raise, margin_shift, jitter| VariantKnobs {
            entropy_raise,
            margin_shift,
            jitter,
            ..Default::default()
        };
        Self {
            vocab_size: 32,
            yes_token: 0,
            no_token: 1,
            seed: 0,
            filler_mean: -4.0,
            filler_spread: 1.0,
            margin_scale: 3.0,
            truth_bias: 1.0,
            knobs: BTreeMap::from([
                (VariantFamily::DiffusionNoise, knob(2.5, 0.5, 0.3)),
                (VariantFamily::Downsample, knob(2.0, 0.5, 0.3)),
                (VariantFamily::NoImage, knob(1.0, -0.5, 0.5)),
                (VariantFamily::Edited, knob(1.0, -0.5, 0.5)),
            ]),
            scripts: BTreeMap::new(),
        }
    }
}

impl MockConfig {
    pub fn validate(&self) -> Result<()> {
        if self.vocab_size < 2 {
            return Err(Error::InvalidVocab(self.vocab_size));
        }
        let v = self.vocab_size as u32;
        if self.yes_token >= v || self.no_token >= v {
            return Err(Error::InvalidLogits("answer token outside the mock vocabulary".into()));
        }
        if self.yes_token == self.no_token {
            return Err(Error::InvalidAnswerMap(self.yes_token));
        }
        for k in self.knobs.values() {
            if k.prior_token.is_some_and(|t| t >= v) {
                return Err(Error::InvalidLogits("prior token outside the mock vocabulary".into()));
            }
        }
        Ok(())
    }

    pub fn answer_map(&self) -> AnswerMap {
        AnswerMap::new([self.yes_token], [self.no_token]).expect("validated distinct tokens")
    }
}

fn stream(seed: u64, sample_id: &str, label: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((sample_id.len() as u64).to_le_bytes());
    h.update(sample_id.as_bytes());
    h.update(label.as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Deterministic logits for `(sample_id, variant)` under `config`, with the
/// generator seeded by `seed`. `gold` feeds `truth_bias` for unscripted samples.
pub fn mock_logits(
    sample_id: &str,
    variant: &VariantKind,
    seed: u64,
    config: &MockConfig,
    gold: Option<AnswerClass>,
) -> Result<LogitVector> {
    config.validate()?;
    let v = config.vocab_size;
    let (yes, no) = (config.yes_token as usize, config.no_token as usize);
    let family = variant.family();

    let mut shared = stream(seed, sample_id, "shared");
    let mut scores: Vec<f64> =
        (0..v).map(|_| config.filler_mean + config.filler_spread * normal(&mut shared)).collect();
    let drawn = config.margin_scale * (2.0 * shared.gen::<f64>() - 1.0);
    let lean = match gold {
        Some(AnswerClass::Yes) => config.truth_bias,
        Some(AnswerClass::No) => -config.truth_bias,
        _ => 0.0,
    };
    let script = config.scripts.get(sample_id);
    let base_margin = script.map_or(drawn + lean, |s| s.margin);

    let default_knobs = VariantKnobs::default();
    let knobs = match family {
        VariantFamily::Original => &default_knobs,
        f => config.knobs.get(&f).unwrap_or(&default_knobs),
    };
    if family != VariantFamily::Original {
        let mut own = stream(seed, sample_id, &variant.key());
        for s in scores.iter_mut() {
            *s += knobs.jitter * normal(&mut own) + knobs.entropy_raise;
        }
    }
    let margin = match family {
        VariantFamily::Original => base_margin,
        f => script.and_then(|s| s.variants.get(&f).copied()).unwrap_or(base_margin + knobs.margin_shift),
    };
    scores[yes] = margin / 2.0;
    scores[no] = -margin / 2.0;
    if let Some(t) = knobs.prior_token {
        scores[t as usize] += knobs.prior_bias;
    }
    LogitVector::dense(scores)
}

/// Provider backed by [`mock_logits`].
#[derive(Debug, Clone)]
pub struct MockProvider {
    config: MockConfig,
    golds: HashMap<String, AnswerClass>,
}

impl MockProvider {
    pub fn new(config: MockConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, golds: HashMap::new() })
    }

    /// Lets unscripted samples lean toward their gold answer by `truth_bias`.
    pub fn with_golds(mut self, items: &[QaItem]) -> Self {
        self.golds = items.iter().map(|i| (i.sample_id.clone(), i.gold)).collect();
        self
    }

    pub fn config(&self) -> &MockConfig {
        &self.config
    }
}

impl LogitProvider for MockProvider {
    fn logits(&self, sample_id: &str, variant: &VariantKind) -> Result<LogitVector> {
        mock_logits(sample_id, variant, self.config.seed, &self.config, self.golds.get(sample_id).copied())
    }

    fn answer_map(&self, _sample_id: &str) -> Result<AnswerMap> {
        Ok(self.config.answer_map())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logits::softmax;

    fn noise() -> VariantKind {
        VariantKind::DiffusionNoise { steps: 500, schedule: "linear".into() }
    }

    #[test]
    fn deterministic() {
        let cfg = MockConfig::default();
        for id in ["a", "b", "sample-17"] {
            let x = mock_logits(id, &noise(), 7, &cfg, None).unwrap();
            assert_eq!(x, mock_logits(id, &noise(), 7, &cfg, None).unwrap());
        }
        let a = mock_logits("a", &noise(), 7, &cfg, None).unwrap();
        assert_ne!(a, mock_logits("a", &noise(), 8, &cfg, None).unwrap());
        assert_ne!(a, mock_logits("a", &VariantKind::Downsample { ratio: 32 }, 7, &cfg, None).unwrap());
    }

    #[test]
    fn entropy_raise_raises_entropy() {
        let mut cfg = MockConfig::default();
        cfg.knobs.insert(
            VariantFamily::DiffusionNoise,
            VariantKnobs { entropy_raise: 2.5, jitter: 0.3, ..Default::default() },
        );
        let n = 500;
        let higher = (0..n)
            .filter(|i| {
                let id = format!("s{i}");
                let o = softmax(&mock_logits(&id, &VariantKind::Original, 11, &cfg, None).unwrap()).unwrap();
                let v = softmax(&mock_logits(&id, &noise(), 11, &cfg, None).unwrap()).unwrap();
                v.entropy() > o.entropy()
            })
            .count();
        assert!(higher * 100 >= 95 * n, "{higher}/{n}");
    }

    #[test]
    fn prior_bias_dominates() {
        let mut cfg = MockConfig::default();
        cfg.knobs.insert(
            VariantFamily::NoImage,
            VariantKnobs { prior_token: Some(5), prior_bias: 10.0, jitter: 0.5, ..Default::default() },
        );
        for i in 0..500 {
            let l = mock_logits(&format!("q{i}"), &VariantKind::NoImage, 3, &cfg, None).unwrap();
            assert_eq!(l.argmax(), 5, "sample q{i}");
        }
    }

    #[test]
    fn scripts_fix_margins() {
        let mut cfg = MockConfig::default();
        cfg.scripts.insert(
            "x".into(),
            SampleScript { margin: -0.5, variants: BTreeMap::from([(VariantFamily::Downsample, -3.0)]) },
        );
        let o = mock_logits("x", &VariantKind::Original, 0, &cfg, None).unwrap().to_dense_vec();
        assert_eq!((o[0], o[1]), (-0.25, 0.25));
        let d = mock_logits("x", &VariantKind::Downsample { ratio: 32 }, 0, &cfg, None).unwrap().to_dense_vec();
        assert_eq!((d[0], d[1]), (-1.5, 1.5));
        // unscripted family falls back to base margin plus its shift
        let n = mock_logits("x", &noise(), 0, &cfg, None).unwrap().to_dense_vec();
        assert_eq!(n[0] - n[1], -0.5 + cfg.knobs[&VariantFamily::DiffusionNoise].margin_shift);
    }

    #[test]
    fn config_validation() {
        let cfg = MockConfig { yes_token: 40, ..Default::default() };
        assert!(MockProvider::new(cfg).is_err());
        let cfg = MockConfig { no_token: 0, ..Default::default() };
        assert!(MockProvider::new(cfg).is_err());
    }

    #[test]
    fn config_json_roundtrip() {
        let cfg = MockConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: MockConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
        let partial: MockConfig = serde_json::from_str(r#"{"vocab_size": 8, "seed": 3}"#).unwrap();
        assert_eq!(partial.vocab_size, 8);
        assert_eq!(partial.filler_mean, -4.0);
    }
}

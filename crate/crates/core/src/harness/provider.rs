use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::logits::LogitVector;
use crate::metrics::AnswerMap;
use crate::records::RecordFile;
use crate::variant::{VariantFamily, VariantKind};

/// Source of first-token logits for `(sample, variant)` pairs.
///
/// Implementations must be deterministic and safe for concurrent reads.
pub trait LogitProvider: Send + Sync {
    fn logits(&self, sample_id: &str, variant: &VariantKind) -> Result<LogitVector>;

    /// Yes/no token ids used to read answers for `sample_id`.
    fn answer_map(&self, sample_id: &str) -> Result<AnswerMap>;
}

/// Serves logits from a record file.
#[derive(Debug, Clone)]
pub struct ReplayProvider {
    file: RecordFile,
    index: HashMap<(String, String), usize>,
    fallback_answers: Option<AnswerMap>,
}

impl ReplayProvider {
    pub fn new(file: RecordFile) -> Self {
        let index = file.records.iter().enumerate().map(|(i, r)| ((r.sample_id.clone(), r.variant.key()), i)).collect();
        Self { file, index, fallback_answers: None }
    }

    /// Answer map used when neither the header nor the original record carries one.
    pub fn with_fallback_answers(mut self, map: AnswerMap) -> Self {
        self.fallback_answers = Some(map);
        self
    }

    pub fn records(&self) -> &RecordFile {
        &self.file
    }

    fn missing(sample_id: &str, family: VariantFamily) -> Error {
        Error::MissingVariant { sample_id: sample_id.to_string(), variant: family }
    }
}

impl LogitProvider for ReplayProvider {
    fn logits(&self, sample_id: &str, variant: &VariantKind) -> Result<LogitVector> {
        self.index
            .get(&(sample_id.to_string(), variant.key()))
            .map(|&i| self.file.records[i].logits.clone())
            .ok_or_else(|| Self::missing(sample_id, variant.family()))
    }

    fn answer_map(&self, sample_id: &str) -> Result<AnswerMap> {
        let own = self
            .index
            .get(&(sample_id.to_string(), VariantKind::Original.key()))
            .and_then(|&i| self.file.records[i].answer_map.clone());
        own.or_else(|| self.file.header.as_ref().and_then(|h| h.answer_tokens.clone()))
            .or_else(|| self.fallback_answers.clone())
            .ok_or_else(|| Error::MissingAnswerMap(sample_id.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FILE: &str = r#"{"v":1,"header":{"answer_tokens":{"yes":[0],"no":[1]}}}
{"v":1,"sample_id":"a","variant":{"kind":"original"},"logits":{"dense":[1.0,0.5,0.0]}}
{"v":1,"sample_id":"a","variant":{"kind":"edited","params":{"cfg_text":20.0,"instruction":"a car"}},"logits":{"dense":[0.0,0.5,0.0]}}
{"v":1,"sample_id":"b","variant":{"kind":"original"},"logits":{"dense":[1.0,0.5,0.0]},"answer_tokens":{"yes":[2],"no":[1]}}
"#;

    fn provider() -> ReplayProvider {
        ReplayProvider::new(RecordFile::from_reader(FILE.as_bytes()).unwrap())
    }

    #[test]
    fn serves_and_repeats() {
        let p = provider();
        let a = p.logits("a", &VariantKind::Original).unwrap();
        assert_eq!(a, p.logits("a", &VariantKind::Original).unwrap());
        // edit instruction text is not part of the lookup key
        let e = VariantKind::Edited { cfg_text: 20.0, instruction: "something else".into() };
        assert_eq!(p.logits("a", &e).unwrap().to_dense_vec(), vec![0.0, 0.5, 0.0]);
    }

    #[test]
    fn missing_pair_names_key() {
        let err = provider().logits("a", &VariantKind::NoImage).unwrap_err();
        assert_eq!(err.to_string(), "missing logits for (a, NoImage)");
        let err = provider().logits("a", &VariantKind::Downsample { ratio: 16 }).unwrap_err();
        assert!(matches!(err, Error::MissingVariant { variant: VariantFamily::Downsample, .. }));
    }

    #[test]
    fn answer_map_precedence() {
        let p = provider();
        assert!(p.answer_map("a").unwrap().yes().contains(&0));
        assert!(p.answer_map("b").unwrap().yes().contains(&2));
        let bare = ReplayProvider::new(RecordFile::default());
        assert!(matches!(bare.answer_map("z"), Err(Error::MissingAnswerMap(_))));
        let bare = bare.with_fallback_answers(AnswerMap::new([5], [6]).unwrap());
        assert!(bare.answer_map("z").unwrap().no().contains(&6));
    }
}

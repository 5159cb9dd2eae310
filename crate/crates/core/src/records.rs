//! JSON-lines logit record files (schema version 1).
//!
//! ```text
//! {"v":1,"header":{"vocab_size":32000,"answer_tokens":{"yes":[3869],"no":[1939]}}}
//! {"v":1,"sample_id":"p1","variant":{"kind":"original"},"logits":{"dense":[0.1,-2.0]}}
//! {"v":1,"sample_id":"p1","variant":{"kind":"downsample","params":{"ratio":32}},
//!  "logits":{"sparse":{"ids":[3869,1939],"values":[12.5,11.0],"floor":4.25}},"vocab_size":32000}
//! ```
//!
//! The header line is optional and must come first. `-inf` scores are written
//! as `null`. Sparse records need a vocabulary size, either on the record or
//! in the header.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::Deserializer;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logits::{LogitValues, LogitVector};
use crate::metrics::AnswerMap;
use crate::variant::VariantKind;

pub const SCHEMA_VERSION: u32 = 1;

/// A score where JSON `null` stands for `-inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Score(f64);

impl Serialize for Score {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0 == f64::NEG_INFINITY {
            s.serialize_none()
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Score {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(Score(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY)))
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum LogitsRepr {
    Dense(Vec<Score>),
    Sparse { ids: Vec<u32>, values: Vec<f64>, floor: Score },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RecordHeader {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocab_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_tokens: Option<AnswerMap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    v: u32,
    header: RecordHeader,
}

#[derive(Serialize, Deserialize)]
struct RecordLine {
    v: u32,
    sample_id: String,
    variant: VariantKind,
    logits: LogitsRepr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vocab_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    answer_tokens: Option<AnswerMap>,
}

/// One `(sample, variant, logits)` row.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantRecord {
    pub sample_id: String,
    pub variant: VariantKind,
    pub logits: LogitVector,
    /// Per-record override of the header's yes/no token ids.
    pub answer_map: Option<AnswerMap>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecordFile {
    pub header: Option<RecordHeader>,
    pub records: Vec<VariantRecord>,
}

fn format_err(line: usize, message: impl Into<String>) -> Error {
    Error::RecordFormat { line, message: message.into() }
}

impl RecordFile {
    pub fn read(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(BufReader::new(file))
    }

    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self> {
        let mut out = RecordFile::default();
        let mut seen: HashSet<(String, String)> = HashSet::new();
        let mut vocab: HashMap<String, usize> = HashMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|e| format_err(lineno, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let value: serde_json::Value =
                serde_json::from_str(&line).map_err(|e| format_err(lineno, e.to_string()))?;
            match value.get("v").and_then(|v| v.as_u64()) {
                Some(v) if v == SCHEMA_VERSION as u64 => {}
                Some(v) => return Err(format_err(lineno, format!("unsupported schema version {v}"))),
                None => return Err(format_err(lineno, "missing schema version field `v`")),
            }
            if value.get("header").is_some() {
                if out.header.is_some() || !out.records.is_empty() {
                    return Err(format_err(lineno, "header must be the first line"));
                }
                let h: HeaderLine = serde_json::from_value(value).map_err(|e| format_err(lineno, e.to_string()))?;
                if let Some(v) = h.header.vocab_size {
                    if v < 2 {
                        return Err(format_err(lineno, format!("header vocab_size {v} below 2")));
                    }
                }
                out.header = Some(h.header);
                continue;
            }
            let raw: RecordLine = serde_json::from_value(value).map_err(|e| format_err(lineno, e.to_string()))?;
            let header_vocab = out.header.as_ref().and_then(|h| h.vocab_size);
            let logits = match raw.logits {
                LogitsRepr::Dense(scores) => {
                    let l = LogitVector::dense(scores.into_iter().map(|s| s.0).collect())
                        .map_err(|e| format_err(lineno, e.to_string()))?;
                    if let Some(v) = raw.vocab_size {
                        if v != l.vocab_size() {
                            return Err(format_err(
                                lineno,
                                format!("vocab_size {v} but {} dense scores", l.vocab_size()),
                            ));
                        }
                    }
                    l
                }
                LogitsRepr::Sparse { ids, values, floor } => {
                    let v = raw
                        .vocab_size
                        .or(header_vocab)
                        .ok_or_else(|| format_err(lineno, "sparse logits need a vocab_size"))?;
                    LogitVector::sparse(v, ids, values, floor.0).map_err(|e| format_err(lineno, e.to_string()))?
                }
            };
            if let Some(hv) = header_vocab {
                if hv != logits.vocab_size() {
                    return Err(format_err(
                        lineno,
                        format!("vocab size {} differs from header {hv}", logits.vocab_size()),
                    ));
                }
            }
            match vocab.get(&raw.sample_id) {
                Some(&v) if v != logits.vocab_size() => {
                    return Err(format_err(
                        lineno,
                        format!("sample {} mixes vocab sizes {v} and {}", raw.sample_id, logits.vocab_size()),
                    ))
                }
                _ => {
                    vocab.insert(raw.sample_id.clone(), logits.vocab_size());
                }
            }
            if !seen.insert((raw.sample_id.clone(), raw.variant.key())) {
                return Err(Error::DuplicateRecord { sample_id: raw.sample_id, variant: raw.variant.key() });
            }
            out.records.push(VariantRecord {
                sample_id: raw.sample_id,
                variant: raw.variant,
                logits,
                answer_map: raw.answer_tokens,
            });
        }
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.to_writer(&mut buf)?;
        fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn to_writer<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::io("<record writer>", e);
        if let Some(h) = &self.header {
            let line = HeaderLine { v: SCHEMA_VERSION, header: h.clone() };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n").map_err(io)?;
        }
        for r in &self.records {
            let (logits, vocab_size) = match r.logits.values() {
                LogitValues::Dense(v) => (LogitsRepr::Dense(v.iter().map(|&x| Score(x)).collect()), None),
                LogitValues::Sparse { ids, values, floor } => (
                    LogitsRepr::Sparse { ids: ids.clone(), values: values.clone(), floor: Score(*floor) },
                    Some(r.logits.vocab_size()),
                ),
            };
            let line = RecordLine {
                v: SCHEMA_VERSION,
                sample_id: r.sample_id.clone(),
                variant: r.variant.clone(),
                logits,
                vocab_size,
                answer_tokens: r.answer_map.clone(),
            };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n").map_err(io)?;
        }
        Ok(())
    }

    pub fn summary(&self) -> RecordSummary {
        let mut samples: Vec<&str> = Vec::new();
        let mut seen = HashSet::new();
        let mut vocab_sizes = BTreeMap::new();
        let mut variants = BTreeMap::new();
        for r in &self.records {
            if seen.insert(r.sample_id.as_str()) {
                samples.push(&r.sample_id);
                *vocab_sizes.entry(r.logits.vocab_size()).or_insert(0usize) += 1;
            }
            *variants.entry(r.variant.key()).or_insert(0usize) += 1;
        }
        RecordSummary {
            records: self.records.len(),
            samples: samples.len(),
            vocab_sizes,
            variants,
            has_answer_tokens: self.header.as_ref().is_some_and(|h| h.answer_tokens.is_some()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordSummary {
    pub records: usize,
    pub samples: usize,
    /// vocab size -> number of samples using it
    pub vocab_sizes: BTreeMap<usize, usize>,
    /// variant key -> number of records
    pub variants: BTreeMap<String, usize>,
    pub has_answer_tokens: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"{"v":1,"header":{"vocab_size":4,"answer_tokens":{"yes":[0],"no":[1]}}}
{"v":1,"sample_id":"a","variant":{"kind":"original"},"logits":{"dense":[1.0,0.5,null,-2.0]}}
{"v":1,"sample_id":"a","variant":{"kind":"no_image"},"logits":{"sparse":{"ids":[1],"values":[3.0],"floor":-1.5}}}
{"v":1,"sample_id":"a","variant":{"kind":"downsample","params":{"ratio":32}},"logits":{"sparse":{"ids":[0,2],"values":[0.25,1.0],"floor":null}}}
"#;

    fn parse(s: &str) -> Result<RecordFile> {
        RecordFile::from_reader(s.as_bytes())
    }

    #[test]
    fn parses_header_and_records() {
        let f = parse(GOOD).unwrap();
        assert_eq!(f.header.as_ref().unwrap().vocab_size, Some(4));
        assert_eq!(f.records.len(), 3);
        assert_eq!(f.records[0].logits.to_dense_vec()[2], f64::NEG_INFINITY);
        assert_eq!(f.records[1].logits.to_dense_vec(), vec![-1.5, 3.0, -1.5, -1.5]);
        let s = f.summary();
        assert_eq!((s.records, s.samples), (3, 1));
        assert_eq!(s.variants["downsample(ratio=32)"], 1);
    }

    #[test]
    fn write_is_byte_stable() {
        let f = parse(GOOD).unwrap();
        let mut a = Vec::new();
        f.to_writer(&mut a).unwrap();
        let g = RecordFile::from_reader(a.as_slice()).unwrap();
        assert_eq!(f, g);
        let mut b = Vec::new();
        g.to_writer(&mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_unknown_kind() {
        let bad = r#"{"v":1,"sample_id":"a","variant":{"kind":"sharpened"},"logits":{"dense":[1.0,0.5]}}"#;
        assert!(matches!(parse(bad), Err(Error::RecordFormat { line: 1, .. })));
    }

    #[test]
    fn rejects_duplicates() {
        let dup = r#"{"v":1,"sample_id":"a","variant":{"kind":"original"},"logits":{"dense":[1.0,0.5]}}
{"v":1,"sample_id":"a","variant":{"kind":"original"},"logits":{"dense":[0.0,0.5]}}"#;
        assert!(matches!(parse(dup), Err(Error::DuplicateRecord { .. })));
    }

    #[test]
    fn rejects_mixed_vocab_within_sample() {
        let mixed = r#"{"v":1,"sample_id":"a","variant":{"kind":"original"},"logits":{"dense":[1.0,0.5]}}
{"v":1,"sample_id":"a","variant":{"kind":"no_image"},"logits":{"dense":[0.0,0.5,1.0]}}"#;
        assert!(matches!(parse(mixed), Err(Error::RecordFormat { line: 2, .. })));
    }

    #[test]
    fn rejects_bad_version_and_misplaced_header() {
        let v2 = r#"{"v":2,"sample_id":"a","variant":{"kind":"original"},"logits":{"dense":[1.0,0.5]}}"#;
        assert!(parse(v2).is_err());
        let late = r#"{"v":1,"sample_id":"a","variant":{"kind":"original"},"logits":{"dense":[1.0,0.5]}}
{"v":1,"header":{"vocab_size":2}}"#;
        assert!(matches!(parse(late), Err(Error::RecordFormat { line: 2, .. })));
    }

    #[test]
    fn sparse_needs_vocab() {
        let s = r#"{"v":1,"sample_id":"a","variant":{"kind":"original"},"logits":{"sparse":{"ids":[0],"values":[1.0],"floor":0.0}}}"#;
        assert!(parse(s).is_err());
    }

    #[test]
    fn overlapping_answer_tokens_rejected() {
        let s = r#"{"v":1,"header":{"answer_tokens":{"yes":[0,1],"no":[1]}}}"#;
        assert!(parse(s).is_err());
    }
}

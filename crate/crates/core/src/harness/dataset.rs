use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::AnswerClass;

/// One yes/no question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaItem {
    pub sample_id: String,
    pub question: String,
    #[serde(with = "gold_serde")]
    pub gold: AnswerClass,
    pub task_tag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edit_instruction: Option<String>,
}

mod gold_serde {
    use serde::{de, Deserialize, Deserializer, Serializer};

    use crate::metrics::AnswerClass;

    pub fn serialize<S: Serializer>(gold: &AnswerClass, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(match gold {
            AnswerClass::Yes => "yes",
            AnswerClass::No => "no",
            AnswerClass::Other => "other",
        })
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<AnswerClass, D::Error> {
        let s = String::deserialize(d)?;
        match s.trim().to_ascii_lowercase().as_str() {
            "yes" => Ok(AnswerClass::Yes),
            "no" => Ok(AnswerClass::No),
            other => Err(de::Error::custom(format!("gold must be yes or no, got {other:?}"))),
        }
    }
}

impl QaItem {
    /// The stored instruction, or one derived from the question.
    pub fn edit_instruction(&self) -> String {
        self.edit_instruction.clone().unwrap_or_else(|| derive_edit_instruction(&self.question))
    }
}

pub fn load_dataset(path: &Path) -> Result<Vec<QaItem>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(BufReader::new(file))
}

pub fn parse_dataset<R: BufRead>(reader: R) -> Result<Vec<QaItem>> {
    let mut items = Vec::new();
    let mut ids = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::DatasetFormat { line: idx + 1, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let item: QaItem =
            serde_json::from_str(&line).map_err(|e| Error::DatasetFormat { line: idx + 1, message: e.to_string() })?;
        if item.sample_id.is_empty() {
            return Err(Error::DatasetFormat { line: idx + 1, message: "empty sample_id".into() });
        }
        if !ids.insert(item.sample_id.clone()) {
            return Err(Error::DuplicateSample(item.sample_id));
        }
        items.push(item);
    }
    Ok(items)
}

pub fn write_dataset(items: &[QaItem]) -> Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    Ok(out)
}

fn strip_prefix_ci<'a>(s: &'a str, prefix: &str) -> Option<&'a str> {
    let head = s.get(..prefix.len())?;
    head.eq_ignore_ascii_case(prefix).then(|| &s[prefix.len()..])
}

fn strip_suffix_ci<'a>(s: &'a str, suffix: &str) -> Option<&'a str> {
    let cut = s.len().checked_sub(suffix.len())?;
    let tail = s.get(cut..)?;
    tail.eq_ignore_ascii_case(suffix).then(|| &s[..cut])
}

/// "a elephant" -> "an elephant"; a bare noun gets "a"/"an" when `add` is set.
fn fix_article(phrase: &str, add: bool) -> String {
    let starts_vowel = |w: &str| w.chars().next().is_some_and(|c| "aeiouAEIOU".contains(c));
    if let Some(rest) = strip_prefix_ci(phrase, "a ") {
        if starts_vowel(rest) {
            return format!("an {rest}");
        }
        return phrase.to_string();
    }
    if strip_prefix_ci(phrase, "an ").is_some() || strip_prefix_ci(phrase, "the ").is_some() || !add {
        return phrase.to_string();
    }
    if starts_vowel(phrase) {
        format!("an {phrase}")
    } else {
        format!("a {phrase}")
    }
}

/// Turns a yes/no question into a text instruction for an image editor:
/// the queried object, or the question restated as a statement.
pub fn derive_edit_instruction(question: &str) -> String {
    let q = question.trim();
    let q = q.split('?').next().unwrap_or(q).trim();

    for lead in ["is there ", "are there "] {
        if let Some(rest) = strip_prefix_ci(q, lead) {
            let mut obj = rest;
            for tail in [
                " in the image",
                " in this image",
                " in the picture",
                " in this picture",
                " in the photo",
                " in this photo",
            ] {
                if let Some(o) = strip_suffix_ci(obj, tail) {
                    obj = o;
                    break;
                }
            }
            return fix_article(obj.trim(), false);
        }
    }
    if let Some(x) = strip_prefix_ci(q, "does this image describe a place of ") {
        return fix_article(x.trim(), true);
    }
    if let Some(x) = strip_prefix_ci(q, "is this a photo of ") {
        return x.trim().to_string();
    }
    if let Some(x) = strip_prefix_ci(q, "is this movie titled ") {
        return format!("This movie is titled {}", x.trim());
    }
    if let Some(x) = strip_prefix_ci(q, "does this artwork exist in the form of ") {
        return format!("This artwork exists in the form of {}", x.trim());
    }
    if let Some(rest) = strip_prefix_ci(q, "is the ") {
        if let Some(pos) = rest.rfind(" called ") {
            return format!("the {} is called {}", &rest[..pos], &rest[pos + " called ".len()..]);
        }
        return format!("the {rest}");
    }
    question.trim().to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pope_line() {
        let line =
            r#"{"sample_id":"p1","question":"Is there a car in the image?","gold":"yes","task_tag":"pope-random"}"#;
        let items = parse_dataset(line.as_bytes()).unwrap();
        assert_eq!(items.len(), 1);
        assert_eq!(items[0].gold, AnswerClass::Yes);
        assert_eq!(items[0].task_tag, "pope-random");
        assert_eq!(items[0].edit_instruction(), "a car");
    }

    #[test]
    fn empty_file_is_empty_list() {
        assert!(parse_dataset("".as_bytes()).unwrap().is_empty());
        assert!(parse_dataset("\n\n".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn schema_violations() {
        let bad_gold = r#"{"sample_id":"p1","question":"q","gold":"maybe","task_tag":"t"}"#;
        assert!(matches!(parse_dataset(bad_gold.as_bytes()), Err(Error::DatasetFormat { line: 1, .. })));
        let missing = r#"{"sample_id":"p1","gold":"no","task_tag":"t"}"#;
        assert!(matches!(parse_dataset(missing.as_bytes()), Err(Error::DatasetFormat { .. })));
        let dup = "{\"sample_id\":\"p1\",\"question\":\"q\",\"gold\":\"no\",\"task_tag\":\"t\"}\n\
                   {\"sample_id\":\"p1\",\"question\":\"q\",\"gold\":\"yes\",\"task_tag\":\"t\"}";
        assert!(matches!(parse_dataset(dup.as_bytes()), Err(Error::DuplicateSample(id)) if id == "p1"));
    }

    #[test]
    fn roundtrip() {
        let items = vec![QaItem {
            sample_id: "m1".into(),
            question: "Is there a elephant in this image?".into(),
            gold: AnswerClass::No,
            task_tag: "mme-existence".into(),
            image_path: Some("x.jpg".into()),
            edit_instruction: None,
        }];
        let text = write_dataset(&items).unwrap();
        assert_eq!(parse_dataset(text.as_bytes()).unwrap(), items);
    }

    #[test]
    fn instruction_examples() {
        let cases = [
            ("Is there a car in the image?", "a car"),
            ("Is there a elephant in this image?", "an elephant"),
            ("Are there a total of two trains in the picture?", "a total of two trains"),
            ("Is there a blue court in the image?", "a blue court"),
            ("Is the vase on the left of the toothbrush?", "the vase on the left of the toothbrush"),
            ("Is this movie titled a beautiful mind (2001)?", "This movie is titled a beautiful mind (2001)"),
            (
                "Is the person inside the red bounding box called Sally Field?",
                "the person inside the red bounding box is called Sally Field",
            ),
            ("Does this image describe a place of windmill?", "a windmill"),
            ("Is this a photo of Clearwater Beach, Florida?", "Clearwater Beach, Florida"),
            ("Does this artwork exist in the form of painting?", "This artwork exists in the form of painting"),
            ("Is the word in the logo \"cold drinks\"?", "the word in the logo \"cold drinks\""),
            ("Is there a dog in the image? Please answer yes or no.", "a dog"),
        ];
        for (q, want) in cases {
            assert_eq!(derive_edit_instruction(q), want, "{q}");
        }
    }

    #[test]
    fn unknown_shape_falls_back_to_question() {
        let q = "Should I buy this?";
        assert_eq!(derive_edit_instruction(q), q);
    }
}

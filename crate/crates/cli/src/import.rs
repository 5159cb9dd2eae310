//! Converters from published benchmark layouts to the dataset JSONL schema.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use cd_engine::harness::QaItem;
use cd_engine::AnswerClass;
use serde::Deserialize;

use crate::DataError;

fn gold(raw: &str, at: impl Fn() -> String) -> Result<AnswerClass> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "yes" => Ok(AnswerClass::Yes),
        "no" => Ok(AnswerClass::No),
        other => Err(DataError(format!("{}: answer must be yes or no, got {other:?}", at())).into()),
    }
}

#[derive(Deserialize)]
struct PopeLine {
    question_id: serde_json::Value,
    image: String,
    text: String,
    label: String,
}

/// POPE question files: one JSON object per line with `question_id`,
/// `image`, `text` and `label`.
pub fn pope(text: &str, split: &str, source: &Path) -> Result<Vec<QaItem>> {
    let mut items = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let at = || format!("{}:{}", source.display(), i + 1);
        let row: PopeLine = serde_json::from_str(line).map_err(|e| DataError(format!("{}: {e}", at())))?;
        let qid = match &row.question_id {
            serde_json::Value::String(s) => s.clone(),
            v => v.to_string(),
        };
        items.push(QaItem {
            sample_id: format!("pope-{split}-{qid}"),
            question: row.text,
            gold: gold(&row.label, at)?,
            task_tag: format!("pope-{split}"),
            image_path: Some(row.image),
            edit_instruction: None,
        });
    }
    Ok(items)
}

fn subtask_slug(name: &str) -> String {
    name.trim().to_ascii_lowercase().replace([' ', '-'], "_")
}

/// MME answer files: tab-separated `image, question, answer[, prediction]`.
pub fn mme_file(text: &str, subtask: &str, source: &Path, start: usize) -> Result<Vec<QaItem>> {
    let slug = subtask_slug(subtask);
    let mut items = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let at = || format!("{}:{}", source.display(), i + 1);
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 3 {
            return Err(DataError(format!("{}: expected image<TAB>question<TAB>answer", at())).into());
        }
        items.push(QaItem {
            sample_id: format!("mme-{slug}-{:04}", start + items.len()),
            question: cols[1].trim().to_string(),
            gold: gold(cols[2], at)?,
            task_tag: format!("mme-{slug}"),
            image_path: Some(cols[0].trim().to_string()),
            edit_instruction: None,
        });
    }
    Ok(items)
}

fn txt_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.is_dir() {
            txt_files(&path, out)?;
        } else if path.extension().is_some_and(|e| e == "txt") {
            out.push(path);
        }
    }
    Ok(())
}

/// Reads one MME file, or every `.txt` file under a directory. The subtask is
/// `subtask` if given, else the first directory below `input`, else the file stem.
pub fn mme(input: &Path, subtask: Option<&str>) -> Result<Vec<QaItem>> {
    let mut files = Vec::new();
    if input.is_dir() {
        txt_files(input, &mut files)?;
        files.sort();
    } else {
        files.push(input.to_path_buf());
    }
    let mut items: Vec<QaItem> = Vec::new();
    for file in files {
        let name = match subtask {
            Some(s) => s.to_string(),
            None => {
                let rel = file.strip_prefix(input).unwrap_or(&file);
                let mut parts = rel.components();
                match (parts.next(), parts.next()) {
                    (Some(first), Some(_)) => first.as_os_str().to_string_lossy().into_owned(),
                    _ => file.file_stem().unwrap_or_default().to_string_lossy().into_owned(),
                }
            }
        };
        let text = fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
        let start = items.iter().filter(|i| i.task_tag == format!("mme-{}", subtask_slug(&name))).count();
        items.extend(mme_file(&text, &name, &file, start)?);
    }
    Ok(items)
}

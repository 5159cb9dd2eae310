//! CSV and JSON renderings of an [`EvalReport`].

use std::fs;
use std::path::Path;

use super::eval::{EvalReport, Histograms, STANDARD_COLUMNS};
use crate::error::{Error, Result};
use crate::metrics::{AnswerClass, RevisionClass};

fn render<F>(header: Vec<String>, fill: F) -> Result<String>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let run = || -> csv::Result<Vec<u8>> {
        w.write_record(&header)?;
        fill(&mut w)?;
        w.into_inner().map_err(|e| e.into_error().into())
    };
    let bytes = run().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Accuracy table: one row per method, the four standard task columns, any
/// other task columns, then `All` (plain mean of the columns present).
/// Columns with no items are left blank.
pub fn accuracy_csv(report: &EvalReport) -> Result<String> {
    let mut cols: Vec<String> = STANDARD_COLUMNS.iter().map(|c| c.to_string()).collect();
    cols.extend(report.columns.iter().filter(|c| !STANDARD_COLUMNS.contains(&c.as_str())).cloned());
    let mut header = vec!["method".to_string()];
    header.extend(cols.iter().cloned());
    header.push("All".into());
    render(header, |w| {
        for m in &report.methods {
            let mut row = vec![m.label.clone()];
            for c in &cols {
                row.push(m.column_accuracy.get(c).map(|a| format!("{a:.3}")).unwrap_or_default());
            }
            row.push(format!("{:.3}", m.overall));
            w.write_record(&row)?;
        }
        Ok(())
    })
}

fn snake<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|j| j.as_str().map(str::to_string)).unwrap_or_default()
}

pub fn revisions_csv(report: &EvalReport) -> Result<String> {
    let mut header = vec!["method".to_string()];
    header.extend(RevisionClass::ALL.iter().map(snake));
    render(header, |w| {
        for m in &report.methods {
            let mut row = vec![m.name.clone()];
            row.extend(RevisionClass::ALL.iter().map(|r| m.revision_counts[r].to_string()));
            w.write_record(&row)?;
        }
        Ok(())
    })
}

pub fn tendency_csv(report: &EvalReport) -> Result<String> {
    let mut header = vec!["method".to_string()];
    header.extend(AnswerClass::ALL.iter().map(snake));
    render(header, |w| {
        for m in &report.methods {
            let mut row = vec![m.name.clone()];
            row.extend(AnswerClass::ALL.iter().map(|a| m.tendency_counts[a].to_string()));
            w.write_record(&row)?;
        }
        Ok(())
    })
}

/// Jaccard matrix, or `None` when fewer than two calibrated methods ran.
pub fn overlap_csv(report: &EvalReport) -> Result<Option<String>> {
    let Some(o) = &report.overlap else { return Ok(None) };
    let mut header = vec!["method".to_string()];
    header.extend(o.methods.iter().cloned());
    render(header, |w| {
        for (name, row) in o.methods.iter().zip(&o.values) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(|v| format!("{v:.6}")));
            w.write_record(&rec)?;
        }
        Ok(())
    })
    .map(Some)
}

/// Long-format histogram counts; `source` is a method name or `variant:<family>`.
pub fn histograms_csv(report: &EvalReport) -> Result<String> {
    let header = ["source", "statistic", "bin", "lo", "hi", "count"].map(String::from).to_vec();
    let mut sources: Vec<(String, &Histograms)> =
        report.methods.iter().map(|m| (m.name.clone(), &m.histograms)).collect();
    sources.extend(report.variant_histograms.iter().map(|(f, h)| (format!("variant:{}", f.as_str()), h)));
    render(header, |w| {
        for (source, h) in &sources {
            for (stat, hist) in [("entropy", &h.entropy), ("confidence", &h.confidence), ("pdd", &h.pdd)] {
                for (bin, count) in hist.counts.iter().enumerate() {
                    let (lo, hi) = hist.edges(bin);
                    w.write_record([
                        source.clone(),
                        stat.to_string(),
                        bin.to_string(),
                        format!("{lo:.6}"),
                        format!("{hi:.6}"),
                        count.to_string(),
                    ])?;
                }
            }
        }
        Ok(())
    })
}

/// Writes `report.json` and the CSV tables into `dir`, creating it if needed.
/// Returns the file names written, in order.
pub fn write_report_dir(report: &EvalReport, dir: &Path) -> Result<Vec<String>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = vec![
        ("accuracy.csv", accuracy_csv(report)?),
        ("revisions.csv", revisions_csv(report)?),
        ("tendency.csv", tendency_csv(report)?),
        ("histograms.csv", histograms_csv(report)?),
        ("report.json", report.to_json()?),
    ];
    let overlap = dir.join("overlap.csv");
    match overlap_csv(report)? {
        Some(text) => files.insert(3, ("overlap.csv", text)),
        None if overlap.exists() => fs::remove_file(&overlap).map_err(|e| Error::io(&overlap, e))?,
        None => {}
    }
    for (name, text) in &files {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(files.into_iter().map(|(n, _)| n.to_string()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_eval, EvalOptions, Method, MockConfig, MockProvider, QaItem};

    fn items() -> Vec<QaItem> {
        let tags = ["pope-random", "pope-popular", "pope-adversarial", "mme-count"];
        (0..16)
            .map(|i| QaItem {
                sample_id: format!("x{i}"),
                question: "Is there a cat in the image?".into(),
                gold: if i % 2 == 0 { AnswerClass::Yes } else { AnswerClass::No },
                task_tag: tags[i % 4].into(),
                image_path: None,
                edit_instruction: None,
            })
            .collect()
    }

    fn report() -> EvalReport {
        let its = items();
        let p = MockProvider::new(MockConfig::default()).unwrap().with_golds(&its);
        run_eval(&its, &p, &Method::table(), &EvalOptions::default()).unwrap()
    }

    #[test]
    fn accuracy_layout() {
        let csv = accuracy_csv(&report()).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "method,P-R,P-P,P-A,MME,All");
        let labels: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(
            labels,
            [
                "Original",
                "diffusion noise",
                "no image",
                "downsample",
                "image editing",
                "naive fusion",
                "entropy-weighted fusion",
                "PDD-weighted fusion"
            ]
        );
        for l in &lines[1..] {
            assert_eq!(l.split(',').count(), 6);
        }
    }

    #[test]
    fn other_tables() {
        let r = report();
        let rev = revisions_csv(&r).unwrap();
        assert!(rev.starts_with("method,unchanged_correct,unchanged_wrong,revise_correct,revise_wrong\n"));
        let ten = tendency_csv(&r).unwrap();
        assert!(ten.starts_with("method,yes,no,other\n"));
        let ov = overlap_csv(&r).unwrap().unwrap();
        assert_eq!(ov.lines().count(), 8);
        let h = histograms_csv(&r).unwrap();
        // 8 methods + 4 variant families, 3 statistics, 50 bins, plus header
        assert_eq!(h.lines().count(), 12 * 3 * 50 + 1);
    }

    #[test]
    fn writes_directory() {
        let dir = tempfile::tempdir().unwrap();
        let names = write_report_dir(&report(), dir.path()).unwrap();
        assert_eq!(
            names,
            ["accuracy.csv", "revisions.csv", "tendency.csv", "overlap.csv", "histograms.csv", "report.json"]
        );
        for n in names {
            assert!(dir.path().join(n).exists());
        }
    }
}

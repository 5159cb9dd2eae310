use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::QaItem;
use super::methods::{Method, VariantPlan};
use super::provider::LogitProvider;
use crate::calibrate::{calibrate, CalibrationInput};
use crate::config::CalibrationConfig;
use crate::error::{Error, Result};
use crate::logits::{softmax, Distribution};
use crate::metrics::{classify_answer, classify_revision, hellinger, jaccard, AnswerClass, Histogram, RevisionClass};
use crate::variant::{VariantFamily, VariantKind};

pub const HISTOGRAM_BINS: usize = 50;

/// Columns of the accuracy table that have fixed positions.
pub const STANDARD_COLUMNS: [&str; 4] = ["P-R", "P-P", "P-A", "MME"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    pub alpha: f64,
    pub beta: f64,
    pub normalize_naive: bool,
    pub weight_scale: f64,
    pub plan: VariantPlan,
    /// Worker threads; `None` uses the hardware concurrency.
    pub threads: Option<usize>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        let c = CalibrationConfig::default();
        Self {
            alpha: c.alpha,
            beta: c.beta,
            normalize_naive: c.normalize_naive,
            weight_scale: c.weight_scale,
            plan: VariantPlan::default(),
            threads: None,
        }
    }
}

impl EvalOptions {
    pub fn config_for(&self, method: &Method) -> Option<CalibrationConfig> {
        method.fusion.map(|fusion| CalibrationConfig {
            alpha: self.alpha,
            beta: self.beta,
            fusion,
            normalize_naive: self.normalize_naive,
            weight_scale: self.weight_scale,
        })
    }
}

/// Table column for a task tag.
pub fn column_of(task_tag: &str) -> String {
    match task_tag {
        "pope-random" => "P-R".into(),
        "pope-popular" => "P-P".into(),
        "pope-adversarial" => "P-A".into(),
        t if t == "mme" || t.starts_with("mme-") => "MME".into(),
        t => t.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histograms {
    pub entropy: Histogram,
    pub confidence: Histogram,
    pub pdd: Histogram,
}

impl Histograms {
    fn new(max_entropy: f64) -> Self {
        Self {
            entropy: Histogram::new(0.0, max_entropy, HISTOGRAM_BINS),
            confidence: Histogram::new(0.0, 1.0, HISTOGRAM_BINS),
            pdd: Histogram::new(0.0, 1.0, HISTOGRAM_BINS),
        }
    }

    fn add(&mut self, s: &Stats) {
        self.entropy.add(s.entropy);
        self.confidence.add(s.confidence);
        self.pdd.add(s.pdd);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub name: String,
    pub label: String,
    pub correct: u64,
    /// Pooled accuracy over every item.
    pub accuracy: f64,
    pub per_task_accuracy: BTreeMap<String, f64>,
    pub column_accuracy: BTreeMap<String, f64>,
    /// Plain mean of the column accuracies.
    pub overall: f64,
    pub revision_counts: BTreeMap<RevisionClass, u64>,
    pub tendency_counts: BTreeMap<AnswerClass, u64>,
    /// Sample ids whose answer calibration changed to the correct one.
    pub revise_correct: Vec<String>,
    /// Output distribution statistics; `pdd` is the distance from the original distribution.
    pub histograms: Histograms,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapMatrix {
    pub methods: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset_size: usize,
    /// Columns present in the data, standard ones first.
    pub columns: Vec<String>,
    pub methods: Vec<MethodSummary>,
    /// Jaccard overlap of revise-correct sets between calibrated methods.
    pub overlap: Option<OverlapMatrix>,
    /// Statistics of each contrastive variant's own distribution.
    pub variant_histograms: BTreeMap<VariantFamily, Histograms>,
}

impl EvalReport {
    pub fn method(&self, name: &str) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Symmetric Jaccard matrix over named sets.
pub fn overlap_matrix(sets: &[(String, BTreeSet<String>)]) -> Result<OverlapMatrix> {
    if sets.len() < 2 {
        return Err(Error::TooFewMethods(sets.len()));
    }
    let n = sets.len();
    let mut values = vec![vec![1.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = jaccard(&sets[i].1, &sets[j].1);
            values[i][j] = v;
            values[j][i] = v;
        }
    }
    Ok(OverlapMatrix { methods: sets.iter().map(|(m, _)| m.clone()).collect(), values })
}

#[derive(Debug, Clone, Copy)]
struct Stats {
    entropy: f64,
    confidence: f64,
    pdd: f64,
}

fn stats(base: &Distribution, d: &Distribution) -> Result<Stats> {
    Ok(Stats { entropy: d.entropy(), confidence: d.confidence(), pdd: hellinger(base, d)? })
}

struct ItemResult {
    vocab: usize,
    original: AnswerClass,
    answers: Vec<(AnswerClass, Stats)>,
    variants: Vec<(VariantFamily, Stats)>,
}

fn evaluate_item(
    item: &QaItem,
    provider: &dyn LogitProvider,
    methods: &[Method],
    needed: &[VariantFamily],
    opts: &EvalOptions,
) -> Result<ItemResult> {
    let map = provider.answer_map(&item.sample_id)?;
    let original = provider.logits(&item.sample_id, &VariantKind::Original)?;
    let base = softmax(&original)?;
    let original_answer = classify_answer(&base, map.yes(), map.no())?;

    let mut fetched = Vec::with_capacity(needed.len());
    let mut variants = Vec::with_capacity(needed.len());
    for &family in needed {
        let kind = opts.plan.kind(family, item);
        let logits = provider.logits(&item.sample_id, &kind)?;
        variants.push((family, stats(&base, &softmax(&logits)?)?));
        fetched.push((family, kind, logits));
    }

    let mut answers = Vec::with_capacity(methods.len());
    for method in methods {
        let dist = match opts.config_for(method) {
            None => base.clone(),
            Some(config) => {
                let chosen = method
                    .variants
                    .iter()
                    .map(|f| {
                        let (_, kind, logits) = fetched.iter().find(|(g, _, _)| g == f).expect("fetched above");
                        (kind.clone(), logits.clone())
                    })
                    .collect();
                calibrate(&CalibrationInput { original: original.clone(), variants: chosen, config })?.distribution
            }
        };
        let answer = classify_answer(&dist, map.yes(), map.no())?;
        answers.push((answer, stats(&base, &dist)?));
    }
    Ok(ItemResult { vocab: original.vocab_size(), original: original_answer, answers, variants })
}

fn ratio(num: u64, den: u64) -> f64 {
    num as f64 / den as f64
}

/// Evaluates every method on every item. The uncalibrated baseline is always
/// the first method in the report, whether or not `methods` lists it.
pub fn run_eval(
    items: &[QaItem],
    provider: &dyn LogitProvider,
    methods: &[Method],
    opts: &EvalOptions,
) -> Result<EvalReport> {
    if items.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut all = vec![Method::original()];
    all.extend(methods.iter().filter(|m| m.fusion.is_some()).cloned());
    let all = dedup(all);
    for m in &all {
        if let Some(c) = opts.config_for(m) {
            c.validate()?;
        }
    }
    let needed: Vec<VariantFamily> =
        VariantFamily::CONTRASTIVE.into_iter().filter(|f| all.iter().any(|m| m.variants.contains(f))).collect();

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::ThreadPool(e.to_string()))?;
    let results: Vec<Result<ItemResult>> =
        pool.install(|| items.par_iter().map(|it| evaluate_item(it, provider, &all, &needed, opts)).collect());
    let results: Vec<ItemResult> = results.into_iter().collect::<Result<_>>()?;

    let max_entropy = (results.iter().map(|r| r.vocab).max().expect("non-empty") as f64).ln();

    let mut columns: Vec<String> = Vec::new();
    for c in STANDARD_COLUMNS {
        if items.iter().any(|i| column_of(&i.task_tag) == c) {
            columns.push(c.to_string());
        }
    }
    let extras: BTreeSet<String> =
        items.iter().map(|i| column_of(&i.task_tag)).filter(|c| !STANDARD_COLUMNS.contains(&c.as_str())).collect();
    columns.extend(extras);

    let mut summaries = Vec::with_capacity(all.len());
    for (mi, method) in all.iter().enumerate() {
        let mut revisions: BTreeMap<RevisionClass, u64> = RevisionClass::ALL.iter().map(|&r| (r, 0)).collect();
        let mut tendency: BTreeMap<AnswerClass, u64> = AnswerClass::ALL.iter().map(|&a| (a, 0)).collect();
        let mut task: BTreeMap<String, (u64, u64)> = BTreeMap::new();
        let mut column: BTreeMap<String, (u64, u64)> = BTreeMap::new();
        let mut revise_correct = Vec::new();
        let mut hist = Histograms::new(max_entropy);
        for (item, r) in items.iter().zip(&results) {
            let (answer, s) = r.answers[mi];
            let rev = classify_revision(r.original, answer, item.gold)?;
            *revisions.get_mut(&rev).expect("all classes") += 1;
            *tendency.get_mut(&answer).expect("all classes") += 1;
            if rev == RevisionClass::ReviseCorrect {
                revise_correct.push(item.sample_id.clone());
            }
            let ok = u64::from(answer == item.gold);
            for (map, key) in [(&mut task, item.task_tag.clone()), (&mut column, column_of(&item.task_tag))] {
                let e = map.entry(key).or_insert((0, 0));
                e.0 += ok;
                e.1 += 1;
            }
            hist.add(&s);
        }
        let correct = revisions[&RevisionClass::UnchangedCorrect] + revisions[&RevisionClass::ReviseCorrect];
        let column_accuracy: BTreeMap<String, f64> =
            column.iter().map(|(k, &(c, n))| (k.clone(), ratio(c, n))).collect();
        let overall = columns.iter().map(|c| column_accuracy[c]).sum::<f64>() / columns.len() as f64;
        summaries.push(MethodSummary {
            name: method.name.clone(),
            label: method.label(),
            correct,
            accuracy: ratio(correct, items.len() as u64),
            per_task_accuracy: task.iter().map(|(k, &(c, n))| (k.clone(), ratio(c, n))).collect(),
            column_accuracy,
            overall,
            revision_counts: revisions,
            tendency_counts: tendency,
            revise_correct,
            histograms: hist,
        });
    }

    let calibrated: Vec<(String, BTreeSet<String>)> =
        summaries.iter().skip(1).map(|s| (s.name.clone(), s.revise_correct.iter().cloned().collect())).collect();
    let overlap = if calibrated.len() >= 2 { Some(overlap_matrix(&calibrated)?) } else { None };

    let mut variant_histograms = BTreeMap::new();
    for (vi, &family) in needed.iter().enumerate() {
        let mut h = Histograms::new(max_entropy);
        for r in &results {
            h.add(&r.variants[vi].1);
        }
        variant_histograms.insert(family, h);
    }

    Ok(EvalReport { dataset_size: items.len(), columns, methods: summaries, overlap, variant_histograms })
}

fn dedup(methods: Vec<Method>) -> Vec<Method> {
    let mut out: Vec<Method> = Vec::with_capacity(methods.len());
    for m in methods {
        if !out.iter().any(|o| o.name == m.name) {
            out.push(m);
        }
    }
    out
}

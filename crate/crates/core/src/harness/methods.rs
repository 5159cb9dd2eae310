use serde::{Deserialize, Serialize};

use super::dataset::QaItem;
use crate::config::{Fusion, WeightMetric};
use crate::error::{Error, Result};
use crate::perturb::{DEFAULT_NOISE_STEPS, DEFAULT_RATIO};
use crate::variant::{VariantFamily, VariantKind};

/// Parameters used to turn a variant family into a concrete variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariantPlan {
    pub noise_steps: u32,
    pub schedule: String,
    pub ratio: u32,
    pub cfg_text: f64,
}

impl Default for VariantPlan {
    fn default() -> Self {
        Self { noise_steps: DEFAULT_NOISE_STEPS, schedule: "linear".into(), ratio: DEFAULT_RATIO, cfg_text: 20.0 }
    }
}

impl VariantPlan {
    pub fn kind(&self, family: VariantFamily, item: &QaItem) -> VariantKind {
        match family {
            VariantFamily::Original => VariantKind::Original,
            VariantFamily::DiffusionNoise => {
                VariantKind::DiffusionNoise { steps: self.noise_steps, schedule: self.schedule.clone() }
            }
            VariantFamily::Downsample => VariantKind::Downsample { ratio: self.ratio },
            VariantFamily::NoImage => VariantKind::NoImage,
            VariantFamily::Edited => {
                VariantKind::Edited { cfg_text: self.cfg_text, instruction: item.edit_instruction() }
            }
        }
    }
}

/// A named evaluation method: the fusion mode plus the variants it contrasts against.
/// `fusion == None` is the uncalibrated baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Method {
    pub name: String,
    pub fusion: Option<Fusion>,
    pub variants: Vec<VariantFamily>,
}

const ALL_NAMES: [&str; 10] = [
    "original",
    "single-noise",
    "single-noimage",
    "single-downsample",
    "single-edited",
    "naive-fusion",
    "entropy-fusion",
    "pdd-fusion",
    "confidence-fusion",
    "unconfidence-fusion",
];

/// Method rows of the main accuracy table, in display order.
pub const TABLE_METHODS: [&str; 8] = [
    "original",
    "single-noise",
    "single-noimage",
    "single-downsample",
    "single-edited",
    "naive-fusion",
    "entropy-fusion",
    "pdd-fusion",
];

impl Method {
    pub fn original() -> Self {
        Self { name: "original".into(), fusion: None, variants: Vec::new() }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        let single = |f: VariantFamily| (Some(Fusion::Single), vec![f]);
        let fused = |fusion: Fusion| (Some(fusion), VariantFamily::CONTRASTIVE.to_vec());
        let weighted = |metric| fused(Fusion::Weighted { metric });
        let (fusion, variants) = match name {
            "original" => (None, Vec::new()),
            "single-noise" => single(VariantFamily::DiffusionNoise),
            "single-noimage" => single(VariantFamily::NoImage),
            "single-downsample" => single(VariantFamily::Downsample),
            "single-edited" => single(VariantFamily::Edited),
            "naive-fusion" => fused(Fusion::Naive),
            "entropy-fusion" => weighted(WeightMetric::Entropy),
            "pdd-fusion" => weighted(WeightMetric::Pdd),
            "confidence-fusion" => weighted(WeightMetric::Confidence),
            "unconfidence-fusion" => weighted(WeightMetric::Unconfidence),
            other => return Err(Error::UnknownMethod(other.to_string())),
        };
        Ok(Self { name: name.to_string(), fusion, variants })
    }

    /// Parses a comma-separated list; blanks are skipped and repeats dropped.
    pub fn parse_list(list: &str) -> Result<Vec<Self>> {
        let mut out: Vec<Method> = Vec::new();
        for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let m = Method::from_name(name)?;
            if !out.iter().any(|o| o.name == m.name) {
                out.push(m);
            }
        }
        Ok(out)
    }

    pub fn table() -> Vec<Self> {
        TABLE_METHODS.iter().map(|n| Method::from_name(n).expect("preset")).collect()
    }

    pub fn all_names() -> &'static [&'static str] {
        &ALL_NAMES
    }

    /// Row label used in the accuracy table.
    pub fn label(&self) -> String {
        match self.name.as_str() {
            "original" => "Original",
            "single-noise" => "diffusion noise",
            "single-noimage" => "no image",
            "single-downsample" => "downsample",
            "single-edited" => "image editing",
            "naive-fusion" => "naive fusion",
            "entropy-fusion" => "entropy-weighted fusion",
            "pdd-fusion" => "PDD-weighted fusion",
            "confidence-fusion" => "confidence-weighted fusion",
            "unconfidence-fusion" => "unconfidence-weighted fusion",
            other => other,
        }
        .to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_resolves() {
        for n in Method::all_names() {
            let m = Method::from_name(n).unwrap();
            assert_eq!(m.name, *n);
            assert_ne!(m.label(), *n);
        }
        assert!(matches!(Method::from_name("vcd"), Err(Error::UnknownMethod(_))));
    }

    #[test]
    fn list_parsing() {
        let ms = Method::parse_list("single-noise, entropy-fusion,,single-noise").unwrap();
        let names: Vec<_> = ms.iter().map(|m| m.name.as_str()).collect();
        assert_eq!(names, ["single-noise", "entropy-fusion"]);
        assert_eq!(Method::from_name("pdd-fusion").unwrap().variants.len(), 4);
        assert!(Method::from_name("original").unwrap().fusion.is_none());
    }

    #[test]
    fn plan_kinds() {
        let item = QaItem {
            sample_id: "s".into(),
            question: "Is there a car in the image?".into(),
            gold: crate::metrics::AnswerClass::Yes,
            task_tag: "pope-random".into(),
            image_path: None,
            edit_instruction: None,
        };
        let plan = VariantPlan::default();
        assert_eq!(plan.kind(VariantFamily::DiffusionNoise, &item).key(), "diffusion_noise(steps=500,schedule=linear)");
        assert_eq!(plan.kind(VariantFamily::Downsample, &item).key(), "downsample(ratio=32)");
        match plan.kind(VariantFamily::Edited, &item) {
            VariantKind::Edited { instruction, .. } => assert_eq!(instruction, "a car"),
            k => panic!("{k}"),
        }
    }
}

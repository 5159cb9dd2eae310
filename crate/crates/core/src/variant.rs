use std::fmt;

use serde::{Deserialize, Serialize};

/// How the visual input was changed before the model produced a logit vector.
///
/// Serialized as `{"kind": "...", "params": {...}}`; kinds without parameters
/// omit `params`. Unknown kinds fail to parse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum VariantKind {
    Original,
    DiffusionNoise {
        steps: u32,
        #[serde(default = "default_schedule")]
        schedule: String,
    },
    Downsample {
        ratio: u32,
    },
    NoImage,
    Edited {
        cfg_text: f64,
        #[serde(default)]
        instruction: String,
    },
}

fn default_schedule() -> String {
    "linear".to_string()
}

/// Variant kind without parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantFamily {
    Original,
    DiffusionNoise,
    Downsample,
    NoImage,
    Edited,
}

impl VariantFamily {
    pub const CONTRASTIVE: [VariantFamily; 4] =
        [VariantFamily::DiffusionNoise, VariantFamily::Downsample, VariantFamily::NoImage, VariantFamily::Edited];

    pub fn as_str(self) -> &'static str {
        match self {
            VariantFamily::Original => "original",
            VariantFamily::DiffusionNoise => "diffusion_noise",
            VariantFamily::Downsample => "downsample",
            VariantFamily::NoImage => "no_image",
            VariantFamily::Edited => "edited",
        }
    }
}

impl fmt::Display for VariantFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            VariantFamily::Original => "Original",
            VariantFamily::DiffusionNoise => "DiffusionNoise",
            VariantFamily::Downsample => "Downsample",
            VariantFamily::NoImage => "NoImage",
            VariantFamily::Edited => "Edited",
        };
        f.write_str(name)
    }
}

impl VariantKind {
    pub fn family(&self) -> VariantFamily {
        match self {
            VariantKind::Original => VariantFamily::Original,
            VariantKind::DiffusionNoise { .. } => VariantFamily::DiffusionNoise,
            VariantKind::Downsample { .. } => VariantFamily::Downsample,
            VariantKind::NoImage => VariantFamily::NoImage,
            VariantKind::Edited { .. } => VariantFamily::Edited,
        }
    }

    /// Canonical identity used for record lookup and duplicate detection.
    ///
    /// The edit instruction is free text derived per question, so it is not
    /// part of the key; two edited records of one sample differ by `cfg_text`.
    pub fn key(&self) -> String {
        match self {
            VariantKind::Original => "original".into(),
            VariantKind::DiffusionNoise { steps, schedule } => {
                format!("diffusion_noise(steps={steps},schedule={schedule})")
            }
            VariantKind::Downsample { ratio } => format!("downsample(ratio={ratio})"),
            VariantKind::NoImage => "no_image".into(),
            VariantKind::Edited { cfg_text, .. } => format!("edited(cfg_text={cfg_text})"),
        }
    }
}

impl fmt::Display for VariantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

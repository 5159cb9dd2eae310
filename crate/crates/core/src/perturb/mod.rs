//! Visually changed samples: diffusion noise, downsampling, and the absent image.

mod image;
pub mod io;
mod noise;
mod resize;

pub use self::image::ImageTensor;
pub use self::noise::{diffuse, forward_sample, NoiseSchedule, DEFAULT_NOISE_STEPS, DEFAULT_TOTAL_STEPS};
pub use self::resize::{downsample, resize, Interpolation, DEFAULT_RATIO};

use crate::variant::VariantKind;

/// Marker for the no-image variant. Text-only logits must come from a
/// provider or a record of kind `no_image`; nothing is synthesized here.
pub fn blank(_image: &ImageTensor) -> VariantKind {
    VariantKind::NoImage
}

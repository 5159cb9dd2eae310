//! Downscale-then-upscale perturbation.
//!
//! Bilinear resampling uses a triangle filter. When shrinking, the filter is
//! stretched by the scale factor so every source pixel contributes (the usual
//! antialiased bilinear); when enlarging it is the plain two-tap interpolation.
//! Pixel centers sit at `i + 0.5` and edges are handled by half-sample
//! symmetric reflection, which keeps both passes mean-preserving whenever the
//! ratio divides the image sides.

use serde::{Deserialize, Serialize};

use super::image::ImageTensor;
use crate::error::{Error, Result};

pub const DEFAULT_RATIO: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    Bilinear,
    Nearest,
}

type Taps = Vec<Vec<(usize, f64)>>;

fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - 1 - m;
    }
    m as usize
}

fn taps(n_in: usize, n_out: usize, kernel: Interpolation) -> Taps {
    let scale = n_in as f64 / n_out as f64;
    (0..n_out)
        .map(|o| {
            let center = (o as f64 + 0.5) * scale;
            match kernel {
                Interpolation::Nearest => {
                    let i = (center.floor() as usize).min(n_in - 1);
                    vec![(i, 1.0)]
                }
                Interpolation::Bilinear => {
                    let support = scale.max(1.0);
                    let lo = (center - support - 0.5).floor() as isize;
                    let hi = (center + support - 0.5).ceil() as isize;
                    let mut row: Vec<(usize, f64)> = Vec::new();
                    for i in lo..=hi {
                        let d = (i as f64 + 0.5 - center).abs();
                        if d >= support {
                            continue;
                        }
                        let w = 1.0 - d / support;
                        let j = reflect(i, n_in);
                        match row.iter_mut().find(|(k, _)| *k == j) {
                            Some((_, acc)) => *acc += w,
                            None => row.push((j, w)),
                        }
                    }
                    let total: f64 = row.iter().map(|(_, w)| w).sum();
                    for (_, w) in &mut row {
                        *w /= total;
                    }
                    row
                }
            }
        })
        .collect()
}

/// Resamples `image` to `height × width`.
pub fn resize(image: &ImageTensor, height: usize, width: usize, kernel: Interpolation) -> Result<ImageTensor> {
    if height == 0 || width == 0 {
        return Err(Error::InvalidImage(format!("cannot resize to {height}x{width}")));
    }
    let c = image.channels();
    let (h0, w0) = (image.height(), image.width());
    let src = image.pixels();

    let xt = taps(w0, width, kernel);
    let mut horiz = vec![0.0; h0 * width * c];
    for y in 0..h0 {
        for (x, row) in xt.iter().enumerate() {
            for ch in 0..c {
                horiz[(y * width + x) * c + ch] = row.iter().map(|&(i, w)| w * src[(y * w0 + i) * c + ch]).sum();
            }
        }
    }

    let yt = taps(h0, height, kernel);
    let mut out = vec![0.0; height * width * c];
    for (y, row) in yt.iter().enumerate() {
        for x in 0..width {
            for ch in 0..c {
                out[(y * width + x) * c + ch] = row.iter().map(|&(i, w)| w * horiz[(i * width + x) * c + ch]).sum();
            }
        }
    }
    ImageTensor::new(height, width, c, out)
}

/// Shrinks each side by `1/ratio` (rounding down) and scales back to the input size.
pub fn downsample(image: &ImageTensor, ratio: u32, kernel: Interpolation) -> Result<ImageTensor> {
    let r = ratio as usize;
    if r == 0 {
        return Err(Error::InvalidImage("downsample ratio must be at least 1".into()));
    }
    if r > image.height() || r > image.width() {
        return Err(Error::RatioTooLarge { ratio, height: image.height(), width: image.width() });
    }
    if r == 1 {
        return Ok(image.clone());
    }
    let small = resize(image, image.height() / r, image.width() / r, kernel)?;
    resize(&small, image.height(), image.width(), kernel)
}

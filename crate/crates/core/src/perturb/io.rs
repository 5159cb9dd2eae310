//! 8-bit PNG and raw little-endian float images.
//!
//! Raw layout: `height`, `width`, `channels` as u32 LE, then
//! `height·width·channels` f32 LE pixel values in row-major order.

use std::fs;
use std::path::Path;

use image::{DynamicImage, GrayImage, RgbImage};

use super::image::ImageTensor;
use crate::error::{Error, Result};

pub fn load_png(path: &Path) -> Result<ImageTensor> {
    let img = image::open(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(g) => {
            ImageTensor::new(h, w, 1, g.into_raw().into_iter().map(|v| v as f64 / 255.0).collect())
        }
        other => {
            let rgb = other.to_rgb8();
            ImageTensor::new(h, w, 3, rgb.into_raw().into_iter().map(|v| v as f64 / 255.0).collect())
        }
    }
}

pub fn save_png(image: &ImageTensor, path: &Path) -> Result<()> {
    let bytes: Vec<u8> = image.pixels().iter().map(|p| (p * 255.0).round() as u8).collect();
    let (w, h) = (image.width() as u32, image.height() as u32);
    let bad = || Error::InvalidImage("pixel buffer does not match dimensions".into());
    match image.channels() {
        1 => GrayImage::from_raw(w, h, bytes).ok_or_else(bad)?.save(path)?,
        _ => RgbImage::from_raw(w, h, bytes).ok_or_else(bad)?.save(path)?,
    }
    Ok(())
}

pub fn encode_raw(image: &ImageTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + image.pixels().len() * 4);
    for dim in [image.height(), image.width(), image.channels()] {
        out.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    for &p in image.pixels() {
        out.extend_from_slice(&(p as f32).to_le_bytes());
    }
    out
}

pub fn decode_raw(bytes: &[u8]) -> Result<ImageTensor> {
    if bytes.len() < 12 {
        return Err(Error::InvalidImage("raw image shorter than its 12-byte header".into()));
    }
    let dim = |i: usize| u32::from_le_bytes(bytes[i * 4..i * 4 + 4].try_into().unwrap()) as usize;
    let (h, w, c) = (dim(0), dim(1), dim(2));
    let body = &bytes[12..];
    if body.len() != h * w * c * 4 {
        return Err(Error::InvalidImage(format!("raw body has {} bytes, header says {h}x{w}x{c}", body.len())));
    }
    let pixels = body.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64).collect();
    ImageTensor::new(h, w, c, pixels)
}

fn is_png(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

/// Loads by extension: `.png` as 8-bit PNG, anything else as raw float.
pub fn load_image(path: &Path) -> Result<ImageTensor> {
    if is_png(path) {
        load_png(path)
    } else {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        decode_raw(&bytes)
    }
}

pub fn save_image(image: &ImageTensor, path: &Path) -> Result<()> {
    if is_png(path) {
        save_png(image, path)
    } else {
        fs::write(path, encode_raw(image)).map_err(|e| Error::io(path, e))
    }
}

//! Forward diffusion noising.
//!
//! One step maps `v_{n-1}` to `N(√(1−γ_n)·v_{n−1}, γ_n·I)`. Composing `N`
//! steps gives the closed form `v_N = √ᾱ_N·v_0 + √(1−ᾱ_N)·ε` with
//! `ᾱ_N = Π_{j≤N}(1−γ_j)` and `ε ~ N(0, I)`, which is what we sample.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, StandardNormal};

use super::image::ImageTensor;
use crate::error::{Error, Result};

pub const DEFAULT_TOTAL_STEPS: u32 = 999;
pub const DEFAULT_NOISE_STEPS: u32 = 500;
const LINEAR_GAMMA_START: f64 = 1e-4;
const LINEAR_GAMMA_END: f64 = 0.02;

/// Per-step noise amounts `γ_1..γ_T` and their cumulative signal retention.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    id: String,
    gammas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl NoiseSchedule {
    /// Linear ramp of `γ` from 1e-4 to 0.02 over `total_steps` steps.
    pub fn linear(total_steps: u32) -> Result<Self> {
        if total_steps == 0 {
            return Err(Error::InvalidSchedule("schedule needs at least one step".into()));
        }
        let t = total_steps as usize;
        let gammas = (0..t)
            .map(|i| {
                if t == 1 {
                    LINEAR_GAMMA_START
                } else {
                    LINEAR_GAMMA_START + (LINEAR_GAMMA_END - LINEAR_GAMMA_START) * i as f64 / (t - 1) as f64
                }
            })
            .collect();
        Self::custom("linear", gammas)
    }

    /// Any monotone non-decreasing schedule with every `γ` in `(0, 1)`.
    pub fn custom(id: impl Into<String>, gammas: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::InvalidSchedule("schedule needs at least one step".into()));
        }
        if let Some(g) = gammas.iter().find(|g| !(**g > 0.0 && **g < 1.0)) {
            return Err(Error::InvalidSchedule(format!("gamma {g} outside (0, 1)")));
        }
        if gammas.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidSchedule("gammas must be non-decreasing".into()));
        }
        let mut acc = 1.0;
        let alpha_bars = gammas
            .iter()
            .map(|g| {
                acc *= 1.0 - g;
                acc
            })
            .collect();
        Ok(Self { id: id.into(), gammas, alpha_bars })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn total_steps(&self) -> u32 {
        self.gammas.len() as u32
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    /// `ᾱ_n`; `ᾱ_0 = 1`.
    pub fn alpha_bar(&self, steps: u32) -> Result<f64> {
        match steps {
            0 => Ok(1.0),
            n if n <= self.total_steps() => Ok(self.alpha_bars[n as usize - 1]),
            n => Err(Error::StepOutOfRange { steps: n, total: self.total_steps() }),
        }
    }
}

impl Default for NoiseSchedule {
    fn default() -> Self {
        Self::linear(DEFAULT_TOTAL_STEPS).expect("default schedule is valid")
    }
}

/// Unclamped forward-process sample; pixel `i` uses the `i`-th standard
/// normal draw of a ChaCha8 stream seeded with `seed`.
pub fn forward_sample(image: &ImageTensor, steps: u32, schedule: &NoiseSchedule, seed: u64) -> Result<Vec<f64>> {
    let abar = schedule.alpha_bar(steps)?;
    if steps == 0 {
        return Ok(image.pixels().to_vec());
    }
    let (signal, spread) = (abar.sqrt(), (1.0 - abar).sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(image
        .pixels()
        .iter()
        .map(|&v| {
            let eps: f64 = StandardNormal.sample(&mut rng);
            signal * v + spread * eps
        })
        .collect())
}

/// Noised copy of `image` after `steps` forward steps, clamped to `[0, 1]`.
pub fn diffuse(image: &ImageTensor, steps: u32, schedule: &NoiseSchedule, seed: u64) -> Result<ImageTensor> {
    if steps == 0 {
        schedule.alpha_bar(0)?;
        return Ok(image.clone());
    }
    let pixels = forward_sample(image, steps, schedule, seed)?;
    ImageTensor::new(image.height(), image.width(), image.channels(), pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_schedule_shape() {
        let s = NoiseSchedule::default();
        assert_eq!(s.total_steps(), 999);
        assert_eq!(s.gammas()[0], 1e-4);
        assert!((s.gammas()[998] - 0.02).abs() < 1e-15);
        let mut last = 1.0;
        for n in 1..=999 {
            let a = s.alpha_bar(n).unwrap();
            assert!(a > 0.0 && a < last);
            last = a;
        }
    }

    #[test]
    fn schedule_validation() {
        assert!(NoiseSchedule::custom("x", vec![0.1, 0.05]).is_err());
        assert!(NoiseSchedule::custom("x", vec![0.0]).is_err());
        assert!(NoiseSchedule::custom("x", vec![1.0]).is_err());
        assert!(NoiseSchedule::custom("x", vec![]).is_err());
        assert!(NoiseSchedule::linear(0).is_err());
    }

    #[test]
    fn zero_steps_is_identity() {
        let img = ImageTensor::new(2, 3, 1, vec![0.1, 0.9, 0.3, 0.0, 1.0, 0.5]).unwrap();
        assert_eq!(diffuse(&img, 0, &NoiseSchedule::default(), 42).unwrap(), img);
    }

    #[test]
    fn step_out_of_range() {
        let img = ImageTensor::filled(2, 2, 1, 0.5).unwrap();
        let s = NoiseSchedule::linear(10).unwrap();
        assert!(matches!(diffuse(&img, 11, &s, 0), Err(Error::StepOutOfRange { steps: 11, total: 10 })));
    }

    #[test]
    fn constant_image_closed_form() {
        // two steps of γ=0.5 give ᾱ = 0.25
        let s = NoiseSchedule::custom("half", vec![0.5, 0.5]).unwrap();
        assert_eq!(s.alpha_bar(2).unwrap(), 0.25);
        let img = ImageTensor::filled(2, 2, 1, 0.5).unwrap();
        let raw = forward_sample(&img, 2, &s, 1234).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        for r in &raw {
            let eps: f64 = StandardNormal.sample(&mut rng);
            assert_eq!(*r, 0.5 * 0.5 + 0.75f64.sqrt() * eps);
        }
        let clamped = diffuse(&img, 2, &s, 1234).unwrap();
        for (c, r) in clamped.pixels().iter().zip(&raw) {
            assert_eq!(*c, r.clamp(0.0, 1.0));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let img = ImageTensor::filled(4, 4, 3, 0.3).unwrap();
        let s = NoiseSchedule::default();
        let a = diffuse(&img, 500, &s, 7).unwrap();
        assert_eq!(a, diffuse(&img, 500, &s, 7).unwrap());
        assert_ne!(a, diffuse(&img, 500, &s, 8).unwrap());
    }
}

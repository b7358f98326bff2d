//! Non-generative fills for removed regions: zero, mean and Gaussian blur.

use std::fmt;
use std::str::FromStr;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::mask::MaskRaster;
use crate::error::{DecorrError, Result};

pub const DEFAULT_BLUR_SIGMA: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FillMode {
    Zero,
    Mean,
    Blur,
}

impl FillMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FillMode::Zero => "zero",
            FillMode::Mean => "mean",
            FillMode::Blur => "blur",
        }
    }
}

impl fmt::Display for FillMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FillMode {
    type Err = DecorrError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(FillMode::Zero),
            "mean" => Ok(FillMode::Mean),
            "blur" => Ok(FillMode::Blur),
            other => Err(DecorrError::Config(format!("unknown fill mode `{other}`"))),
        }
    }
}

/// Fills the masked pixels of `image`; unmasked pixels are never touched.
/// An empty mask returns the image unchanged.
pub fn apply_fill(
    image: &RgbImage,
    mask: &MaskRaster,
    mode: FillMode,
    blur_sigma: f64,
) -> Result<RgbImage> {
    if image.dimensions() != mask.dims() {
        return Err(DecorrError::DimensionMismatch {
            expected: mask.dims(),
            actual: image.dimensions(),
        });
    }
    let mut out = image.clone();
    if mask.is_empty() {
        return Ok(out);
    }
    match mode {
        FillMode::Zero => {
            for (x, y) in mask.iter_set() {
                out.put_pixel(x, y, image::Rgb([0, 0, 0]));
            }
        }
        FillMode::Mean => {
            let mut sums = [0u64; 3];
            let n = mask.area();
            for (x, y) in mask.iter_set() {
                let p = image.get_pixel(x, y).0;
                for c in 0..3 {
                    sums[c] += p[c] as u64;
                }
            }
            let mean = sums.map(|s| ((s + n / 2) / n) as u8);
            for (x, y) in mask.iter_set() {
                out.put_pixel(x, y, image::Rgb(mean));
            }
        }
        FillMode::Blur => {
            if !(blur_sigma.is_finite() && blur_sigma > 0.0) {
                return Err(DecorrError::Config(format!(
                    "blur sigma must be positive, got {blur_sigma}"
                )));
            }
            let blurred = gaussian_blur(image, blur_sigma);
            for (x, y) in mask.iter_set() {
                out.put_pixel(x, y, *blurred.get_pixel(x, y));
            }
        }
    }
    Ok(out)
}

/// Normalized 1-D Gaussian taps over `[-radius, radius]`, radius = ⌈3σ⌉.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / total).collect()
}

/// Symmetric reflection (`-1 -> 0`, `n -> n-1`), repeated for offsets
/// larger than the axis.
pub fn reflect(i: i64, n: usize) -> usize {
    let n = n as i64;
    let m = i.rem_euclid(2 * n);
    (if m < n { m } else { 2 * n - 1 - m }) as usize
}

/// Separable Gaussian blur with reflective borders, rounded to nearest.
pub fn gaussian_blur(image: &RgbImage, sigma: f64) -> RgbImage {
    let (w, h) = (image.width() as usize, image.height() as usize);
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as i64;
    let src = image.as_raw();

    let mut horizontal = vec![0f64; w * h * 3];
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0f64; 3];
            for (k, weight) in kernel.iter().enumerate() {
                let sx = reflect(x as i64 + k as i64 - radius, w);
                let base = (y * w + sx) * 3;
                for c in 0..3 {
                    acc[c] += weight * src[base + c] as f64;
                }
            }
            horizontal[(y * w + x) * 3..(y * w + x) * 3 + 3].copy_from_slice(&acc);
        }
    }

    let mut out = RgbImage::new(w as u32, h as u32);
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0f64; 3];
            for (k, weight) in kernel.iter().enumerate() {
                let sy = reflect(y as i64 + k as i64 - radius, h);
                let base = (sy * w + x) * 3;
                for c in 0..3 {
                    acc[c] += weight * horizontal[base + c];
                }
            }
            let px = acc.map(|v| (v + 0.5).floor().clamp(0.0, 255.0) as u8);
            out.put_pixel(x as u32, y as u32, image::Rgb(px));
        }
    }
    out
}

//! Binary removal masks: rasterization, overlap ratios and the PNG/RLE codecs.

use std::collections::BTreeSet;
use std::path::Path;

use bitvec::prelude::*;
use image::GrayImage;
use serde::{Deserialize, Serialize};

use crate::dataset::{BBox, ClassId, ObjectAnnotation};
use crate::error::{DecorrError, Result};

/// Row-major bitset over a `width x height` grid; a set bit is a removed pixel.
#[derive(Clone, PartialEq, Eq)]
pub struct MaskRaster {
    width: u32,
    height: u32,
    bits: BitVec<u64, Lsb0>,
}

impl std::fmt::Debug for MaskRaster {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MaskRaster")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("area", &self.area())
            .finish()
    }
}

impl MaskRaster {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: bitvec![u64, Lsb0; 0; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.not_any()
    }

    fn offset(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[self.offset(x, y)]
    }

    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        let off = self.offset(x, y);
        self.bits.set(off, value);
    }

    /// Number of set pixels.
    pub fn area(&self) -> u64 {
        self.bits.count_ones() as u64
    }

    /// Fraction of the image covered.
    pub fn coverage(&self) -> f64 {
        self.area() as f64 / self.bits.len() as f64
    }

    /// Sets every pixel of the box after half-up corner rounding.
    pub fn fill_box(&mut self, bbox: &BBox) {
        let (x0, y0, x1, y1) = bbox.pixel_extent(self.width, self.height);
        if x0 >= x1 {
            return;
        }
        for y in y0..y1 {
            let start = self.offset(x0, y);
            let end = self.offset(x1 - 1, y) + 1;
            self.bits[start..end].fill(true);
        }
    }

    fn check_dims(&self, other: &MaskRaster) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(DecorrError::DimensionMismatch {
                expected: self.dims(),
                actual: other.dims(),
            });
        }
        Ok(())
    }

    pub fn union_with(&mut self, other: &MaskRaster) -> Result<()> {
        self.check_dims(other)?;
        for (a, b) in self
            .bits
            .as_raw_mut_slice()
            .iter_mut()
            .zip(other.bits.as_raw_slice())
        {
            *a |= *b;
        }
        Ok(())
    }

    /// `area(self ∩ other)`.
    pub fn intersection_area(&self, other: &MaskRaster) -> Result<u64> {
        self.check_dims(other)?;
        // Padding bits past `len` are always zero, so whole words can be counted.
        Ok(self
            .bits
            .as_raw_slice()
            .iter()
            .zip(other.bits.as_raw_slice())
            .map(|(a, b)| (a & b).count_ones() as u64)
            .sum())
    }

    /// Iterates set pixels as `(x, y)` in row-major order.
    pub fn iter_set(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width as usize;
        self.bits
            .iter_ones()
            .map(move |i| ((i % w) as u32, (i / w) as u32))
    }

    /// Uncompressed COCO run-length encoding.
    pub fn to_rle(&self) -> Rle {
        let (w, h) = (self.width as usize, self.height as usize);
        let mut counts = Vec::new();
        let mut current = false;
        let mut run = 0u64;
        for x in 0..w {
            for y in 0..h {
                let v = self.bits[y * w + x];
                if v != current {
                    counts.push(run);
                    run = 0;
                    current = v;
                }
                run += 1;
            }
        }
        counts.push(run);
        Rle {
            size: [self.height, self.width],
            counts,
        }
    }

    pub fn from_rle(rle: &Rle) -> Result<Self> {
        let [h, w] = rle.size;
        let total = w as u64 * h as u64;
        if rle.counts.iter().sum::<u64>() != total {
            return Err(DecorrError::Validation(format!(
                "RLE counts sum to {} but size is {}x{}",
                rle.counts.iter().sum::<u64>(),
                h,
                w
            )));
        }
        let mut mask = MaskRaster::new(w, h);
        let mut pos = 0u64;
        for (i, &run) in rle.counts.iter().enumerate() {
            if i % 2 == 1 {
                for p in pos..pos + run {
                    let (x, y) = ((p / h as u64) as u32, (p % h as u64) as u32);
                    mask.set(x, y, true);
                }
            }
            pos += run;
        }
        Ok(mask)
    }

    /// 8-bit grayscale image, removed = 255, kept = 0.
    pub fn to_gray_image(&self) -> GrayImage {
        GrayImage::from_fn(self.width, self.height, |x, y| {
            image::Luma([if self.get(x, y) { 255 } else { 0 }])
        })
    }

    /// Inverse of [`to_gray_image`](Self::to_gray_image); only 0 and 255 are accepted.
    pub fn from_gray_image(img: &GrayImage) -> Result<Self> {
        let mut mask = MaskRaster::new(img.width(), img.height());
        for (x, y, p) in img.enumerate_pixels() {
            match p.0[0] {
                0 => {}
                255 => mask.set(x, y, true),
                v => {
                    return Err(DecorrError::Validation(format!(
                        "mask pixel ({x}, {y}) has value {v}, expected 0 or 255"
                    )))
                }
            }
        }
        Ok(mask)
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        self.to_gray_image()
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|source| DecorrError::Image {
                path: path.to_owned(),
                source,
            })
    }

    pub fn read_png(path: &Path) -> Result<Self> {
        let img = image::open(path).map_err(|source| DecorrError::Image {
            path: path.to_owned(),
            source,
        })?;
        Self::from_gray_image(&img.to_luma8())
    }
}

/// COCO-convention RLE: column-major runs, the first run counts zeros.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rle {
    /// `[height, width]`.
    pub size: [u32; 2],
    pub counts: Vec<u64>,
}

/// Union of the boxes of every object whose class is in `class_filter`.
pub fn union_mask(
    objects: &[ObjectAnnotation],
    class_filter: &BTreeSet<ClassId>,
    width: u32,
    height: u32,
) -> MaskRaster {
    let mut mask = MaskRaster::new(width, height);
    for obj in objects
        .iter()
        .filter(|o| class_filter.contains(&o.class_id))
    {
        mask.fill_box(&obj.bbox);
    }
    mask
}

/// `area(a ∩ b) / area(b)` from exact pixel counts.
pub fn overlap_ratio(a: &MaskRaster, b: &MaskRaster) -> Result<f64> {
    let shared = a.intersection_area(b)?;
    let denom = b.area();
    if denom == 0 {
        return Err(DecorrError::EmptyDenominator);
    }
    Ok(shared as f64 / denom as f64)
}

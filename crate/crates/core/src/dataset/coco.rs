//! COCO-style instances and captions JSON readers.

use std::collections::HashMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;

use super::{
    BBox, CaptionRecord, ClassId, ClassVocabulary, DatasetBundle, ImageRecord, ObjectAnnotation,
    Split, ValidationReport,
};
use crate::error::{DecorrError, Result};

/// Boxes may overshoot the image by at most this many pixels before they
/// are rejected instead of clamped.
pub const CLAMP_TOLERANCE_PX: f64 = 1.0;

#[derive(Debug, Deserialize)]
struct InstancesFile {
    images: Vec<CocoImage>,
    #[serde(default)]
    annotations: Vec<CocoInstance>,
    categories: Vec<CocoCategory>,
}

#[derive(Debug, Deserialize)]
struct CocoImage {
    id: u64,
    width: u32,
    height: u32,
    #[serde(default)]
    file_name: Option<String>,
    #[serde(default)]
    split: Option<String>,
}

#[derive(Debug, Deserialize)]
struct CocoInstance {
    #[serde(default)]
    id: u64,
    image_id: u64,
    bbox: [f64; 4],
    category_id: u64,
}

#[derive(Debug, Deserialize)]
struct CocoCategory {
    id: u64,
    name: String,
}

#[derive(Debug, Deserialize)]
struct CaptionsFile {
    annotations: Vec<CocoCaption>,
}

#[derive(Debug, Deserialize)]
struct CocoCaption {
    id: u64,
    image_id: u64,
    caption: String,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path).map_err(|e| DecorrError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| DecorrError::parse(path.display().to_string(), e))
}

/// Clamps a COCO box into `width x height` when it overshoots by at most
/// [`CLAMP_TOLERANCE_PX`] on any side.
fn clamp_box(
    raw: [f64; 4],
    annotation_id: u64,
    image_id: u64,
    width: u32,
    height: u32,
) -> Result<(BBox, bool)> {
    let [x, y, w, h] = raw;
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(DecorrError::InvalidBox {
            annotation_id,
            bbox: raw,
            reason: "non-finite coordinate",
        });
    }
    if w <= 0.0 || h <= 0.0 {
        return Err(DecorrError::InvalidBox {
            annotation_id,
            bbox: raw,
            reason: "non-positive width or height",
        });
    }
    let (wf, hf) = (width as f64, height as f64);
    let overshoot = (-x).max(-y).max(x + w - wf).max(y + h - hf);
    if overshoot > CLAMP_TOLERANCE_PX {
        return Err(DecorrError::Bounds {
            annotation_id,
            image_id,
            bbox: raw,
            width,
            height,
        });
    }
    if overshoot <= 0.0 {
        return Ok((BBox::new(x, y, w, h), false));
    }
    let x0 = x.max(0.0);
    let y0 = y.max(0.0);
    let x1 = (x + w).min(wf);
    let y1 = (y + h).min(hf);
    if x1 <= x0 || y1 <= y0 {
        return Err(DecorrError::InvalidBox {
            annotation_id,
            bbox: raw,
            reason: "empty after clamping",
        });
    }
    Ok((BBox::new(x0, y0, x1 - x0, y1 - y0), true))
}

/// Reads a COCO instances file. Images without a `split` field get
/// `default_split`. Category names are reconciled against `vocab`.
pub fn load_instances(
    path: &Path,
    vocab: &ClassVocabulary,
    default_split: Split,
    report: &mut ValidationReport,
) -> Result<DatasetBundle> {
    let file: InstancesFile = read_json(path)?;

    let mut categories: HashMap<u64, ClassId> = HashMap::with_capacity(file.categories.len());
    for cat in &file.categories {
        let id = vocab
            .lookup(&cat.name)
            .ok_or_else(|| DecorrError::UnknownClass(cat.name.clone()))?;
        categories.insert(cat.id, id);
    }

    let mut bundle = DatasetBundle::new(vocab.clone());
    for img in file.images {
        if img.width == 0 || img.height == 0 {
            return Err(DecorrError::Validation(format!(
                "image {} has zero size",
                img.id
            )));
        }
        let split = match img.split.as_deref() {
            Some(s) => s.parse()?,
            None => default_split,
        };
        let mut record = ImageRecord::new(img.id, img.width, img.height);
        record.file_name = img.file_name;
        record.split = split;
        if bundle.images.insert(img.id, record).is_some() {
            return Err(DecorrError::Validation(format!(
                "duplicate image id {}",
                img.id
            )));
        }
    }

    for ann in file.annotations {
        let class_id = *categories
            .get(&ann.category_id)
            .ok_or_else(|| DecorrError::UnknownClass(format!("category id {}", ann.category_id)))?;
        let image = bundle.images.get_mut(&ann.image_id).ok_or_else(|| {
            DecorrError::Validation(format!(
                "annotation {} references unknown image {}",
                ann.id, ann.image_id
            ))
        })?;
        let (bbox, clamped) = clamp_box(ann.bbox, ann.id, ann.image_id, image.width, image.height)?;
        if clamped {
            report.push(
                super::Severity::Info,
                "bbox_clamped",
                ann.id.to_string(),
                format!("box {:?} clamped to {:?}", ann.bbox, bbox.as_array()),
            );
        }
        image.objects.push(ObjectAnnotation { bbox, class_id });
    }
    Ok(bundle)
}

/// Reads a COCO captions file into `bundle`, tokenizing each caption.
pub fn load_captions(
    path: &Path,
    bundle: &mut DatasetBundle,
    report: &mut ValidationReport,
) -> Result<()> {
    let file: CaptionsFile = read_json(path)?;
    for ann in file.annotations {
        let record = CaptionRecord::new(ann.id, ann.image_id, ann.caption);
        if record.tokens.is_empty() {
            report.warn("empty_caption", ann.id.to_string(), "caption has no tokens");
        }
        bundle.insert_caption(record)?;
    }
    Ok(())
}

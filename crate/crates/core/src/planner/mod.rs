//! Object-removal planning.
//!
//! For every image with objects from at least two classes and every class
//! present in it (the trigger), [`plan_for_class`] decides whether the
//! trigger's objects can be removed on their own, must be removed together
//! with classes they largely cover, or cannot be removed at all:
//!
//! 1. the trigger mask may cover at most `alpha3` of the image;
//! 2. if it overlaps every other class's mask by less than `alpha1` of that
//!    class's area, only the trigger is removed;
//! 3. otherwise every class overlapped by more than `alpha2` is removed along
//!    with it, provided at least one class is kept.
//!
//! All comparisons are strict and all areas are rasterized pixel counts.

pub mod export;
pub mod fill;
pub mod mask;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{ClassId, DatasetBundle, ImageId, ImageRecord};
use crate::error::{DecorrError, Result};

pub use export::{export_masks, ExportOptions, ManifestEntry, MaskFormat};
pub use fill::{apply_fill, FillMode, DEFAULT_BLUR_SIGMA};
pub use mask::{overlap_ratio, union_mask, MaskRaster, Rle};

/// Planner thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanConfig {
    /// Every kept class must be overlapped by the trigger mask by less than this.
    pub alpha1: f64,
    /// Classes overlapped by more than this are removed with the trigger.
    pub alpha2: f64,
    /// Upper bound on the fraction of the image a removal may cover.
    pub alpha3: f64,
    /// Apply the size bound to the final multi-class removal region as well
    /// as to the trigger mask.
    pub limit_union_size: bool,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            alpha1: 0.4,
            alpha2: 0.8,
            alpha3: 0.7,
            limit_union_size: false,
        }
    }
}

impl PlanConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v <= 1.0;
        if !(ok(self.alpha1) && ok(self.alpha2) && ok(self.alpha3)) {
            return Err(DecorrError::Config(
                "alpha1, alpha2, alpha3 must lie in (0, 1]".into(),
            ));
        }
        if self.alpha1 > self.alpha2 {
            return Err(DecorrError::Config("alpha1 must not exceed alpha2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanKind {
    SingleClass,
    MultiClass,
}

/// A decision to remove `removed_classes` from one image.
#[derive(Debug, Clone, PartialEq)]
pub struct RemovalPlan {
    pub image_id: ImageId,
    pub trigger_class: ClassId,
    pub removed_classes: BTreeSet<ClassId>,
    pub kept_classes: BTreeSet<ClassId>,
    pub mask: MaskRaster,
    pub kind: PlanKind,
}

impl RemovalPlan {
    /// Serializable summary without the raster.
    pub fn record(&self, mask_path: Option<String>) -> PlanRecord {
        PlanRecord {
            image_id: self.image_id,
            trigger_class: self.trigger_class,
            kind: self.kind,
            removed_classes: self.removed_classes.clone(),
            kept_classes: self.kept_classes.clone(),
            mask_area: self.mask.area(),
            mask_path,
        }
    }

    /// File stem shared by every artifact derived from this plan.
    pub fn stem(&self) -> String {
        format!("{}_{}", self.image_id, self.trigger_class)
    }
}

/// One line of the plans JSONL file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub image_id: ImageId,
    pub trigger_class: ClassId,
    pub kind: PlanKind,
    pub removed_classes: BTreeSet<ClassId>,
    pub kept_classes: BTreeSet<ClassId>,
    pub mask_area: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_path: Option<String>,
}

fn class_masks(image: &ImageRecord) -> BTreeMap<ClassId, MaskRaster> {
    image
        .classes()
        .into_iter()
        .map(|c| {
            let mask = union_mask(
                &image.objects,
                &BTreeSet::from([c]),
                image.width,
                image.height,
            );
            (c, mask)
        })
        .collect()
}

fn exceeds_size(mask: &MaskRaster, cfg: &PlanConfig) -> bool {
    mask.coverage() > cfg.alpha3
}

/// Plans the removal of `trigger` from `image`; `None` when no valid plan exists.
///
/// A class whose boxes rasterize to no pixels has an undefined overlap
/// ratio; it then satisfies neither threshold, so it blocks a single-class
/// plan and is never co-removed.
pub fn plan_for_class(
    image: &ImageRecord,
    trigger: ClassId,
    cfg: &PlanConfig,
) -> Result<Option<RemovalPlan>> {
    let masks = class_masks(image);
    if masks.len() < 2 {
        return Err(DecorrError::PreconditionViolated(format!(
            "image {} has fewer than two classes",
            image.image_id
        )));
    }
    plan_with_masks(image.image_id, &masks, trigger, cfg)
}

fn plan_with_masks(
    image_id: ImageId,
    masks: &BTreeMap<ClassId, MaskRaster>,
    trigger: ClassId,
    cfg: &PlanConfig,
) -> Result<Option<RemovalPlan>> {
    let mask_q = masks.get(&trigger).ok_or_else(|| {
        DecorrError::PreconditionViolated(format!(
            "class {trigger} is not present in image {image_id}"
        ))
    })?;
    if mask_q.is_empty() || exceeds_size(mask_q, cfg) {
        return Ok(None);
    }

    let others: Vec<(ClassId, Option<f64>)> = masks
        .iter()
        .filter(|(c, _)| **c != trigger)
        .map(|(c, m)| (*c, overlap_ratio(mask_q, m).ok()))
        .collect();

    if others
        .iter()
        .all(|(_, r)| matches!(r, Some(r) if *r < cfg.alpha1))
    {
        return Ok(Some(RemovalPlan {
            image_id,
            trigger_class: trigger,
            removed_classes: BTreeSet::from([trigger]),
            kept_classes: others.iter().map(|(c, _)| *c).collect(),
            mask: mask_q.clone(),
            kind: PlanKind::SingleClass,
        }));
    }

    let co_removed = |r: &Option<f64>| matches!(r, Some(r) if *r > cfg.alpha2);
    if !others.iter().any(|(_, r)| co_removed(r)) {
        return Ok(None);
    }
    let mut removed = BTreeSet::from([trigger]);
    let mut kept = BTreeSet::new();
    let mut mask = mask_q.clone();
    for (class, ratio) in &others {
        if co_removed(ratio) {
            removed.insert(*class);
            mask.union_with(&masks[class])?;
        } else {
            kept.insert(*class);
        }
    }
    if kept.is_empty() || (cfg.limit_union_size && exceeds_size(&mask, cfg)) {
        return Ok(None);
    }
    Ok(Some(RemovalPlan {
        image_id,
        trigger_class: trigger,
        removed_classes: removed,
        kept_classes: kept,
        mask,
        kind: PlanKind::MultiClass,
    }))
}

/// Plans for every image and every trigger class, ordered by image id then
/// trigger class id. Images with fewer than two classes are skipped.
pub fn plan_all(bundle: &DatasetBundle, cfg: &PlanConfig) -> Vec<RemovalPlan> {
    let images: Vec<&ImageRecord> = bundle.images.values().collect();
    images
        .par_iter()
        .flat_map_iter(|image| plan_image(image, cfg))
        .collect()
}

/// All plans for one image, ascending trigger class.
pub fn plan_image(image: &ImageRecord, cfg: &PlanConfig) -> Vec<RemovalPlan> {
    let masks = class_masks(image);
    if masks.len() < 2 {
        return Vec::new();
    }
    masks
        .keys()
        .filter_map(|&trigger| {
            plan_with_masks(image.image_id, &masks, trigger, cfg)
                .expect("trigger is present and masks share dimensions")
        })
        .collect()
}

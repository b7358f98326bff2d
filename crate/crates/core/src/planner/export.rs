//! Mask files and the inpainting manifest.
//!
//! Masks are written to `<out_dir>/masks/{image_id}_{trigger_class}.{png,json}`
//! and the manifest to `<out_dir>/manifest.jsonl`, one [`ManifestEntry`] per
//! plan in plan order. Paths inside the manifest are relative to `out_dir`
//! unless they were supplied as absolute paths.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mask::{MaskRaster, Rle};
use super::RemovalPlan;
use crate::dataset::{ClassId, ImageId};
use crate::error::{DecorrError, Result};

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const MASK_DIR: &str = "masks";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskFormat {
    #[default]
    Png,
    Rle,
}

impl MaskFormat {
    pub fn extension(self) -> &'static str {
        match self {
            MaskFormat::Png => "png",
            MaskFormat::Rle => "json",
        }
    }
}

impl fmt::Display for MaskFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MaskFormat::Png => "png",
            MaskFormat::Rle => "rle",
        })
    }
}

impl FromStr for MaskFormat {
    type Err = DecorrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "png" => Ok(MaskFormat::Png),
            "rle" => Ok(MaskFormat::Rle),
            other => Err(DecorrError::Config(format!(
                "unknown mask format `{other}`"
            ))),
        }
    }
}

/// One line of the manifest consumed by the inpainting driver.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image_id: ImageId,
    pub trigger_class: ClassId,
    pub removed_classes: Vec<ClassId>,
    pub kept_classes: Vec<ClassId>,
    pub mask_path: String,
    pub source_image_path: Option<String>,
    #[serde(default)]
    pub fill_outputs: BTreeMap<String, String>,
    #[serde(default)]
    pub synthetic_caption_ids: Vec<String>,
}

/// Per-plan extras recorded in the manifest.
#[derive(Debug, Clone, Default)]
pub struct ExportOptions {
    pub format: MaskFormat,
    pub source_paths: HashMap<ImageId, String>,
    /// Keyed by `(image_id, trigger_class)`, then fill mode name.
    pub fill_outputs: HashMap<(ImageId, ClassId), BTreeMap<String, String>>,
}

pub fn mask_file_name(plan: &RemovalPlan, format: MaskFormat) -> String {
    format!("{}.{}", plan.stem(), format.extension())
}

pub fn write_rle(mask: &MaskRaster, path: &Path) -> Result<()> {
    let json = serde_json::to_vec(&mask.to_rle()).expect("RLE serializes");
    fs::write(path, json).map_err(|e| DecorrError::io(path, e))
}

pub fn read_rle(path: &Path) -> Result<MaskRaster> {
    let bytes = fs::read(path).map_err(|e| DecorrError::io(path, e))?;
    let rle: Rle = serde_json::from_slice(&bytes)
        .map_err(|e| DecorrError::parse(path.display().to_string(), e))?;
    MaskRaster::from_rle(&rle)
}

/// Reads a mask written by [`export_masks`], choosing the codec by extension.
pub fn read_mask(path: &Path) -> Result<MaskRaster> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => read_rle(path),
        _ => MaskRaster::read_png(path),
    }
}

/// Writes one mask per plan, then the manifest. Returns the manifest path.
pub fn export_masks(
    plans: &[RemovalPlan],
    out_dir: &Path,
    options: &ExportOptions,
) -> Result<PathBuf> {
    let mask_dir = out_dir.join(MASK_DIR);
    fs::create_dir_all(&mask_dir).map_err(|e| DecorrError::io(&mask_dir, e))?;

    let entries: Vec<ManifestEntry> = plans
        .par_iter()
        .map(|plan| {
            let name = mask_file_name(plan, options.format);
            let path = mask_dir.join(&name);
            match options.format {
                MaskFormat::Png => plan.mask.write_png(&path)?,
                MaskFormat::Rle => write_rle(&plan.mask, &path)?,
            }
            Ok(ManifestEntry {
                image_id: plan.image_id,
                trigger_class: plan.trigger_class,
                removed_classes: plan.removed_classes.iter().copied().collect(),
                kept_classes: plan.kept_classes.iter().copied().collect(),
                mask_path: format!("{MASK_DIR}/{name}"),
                source_image_path: options.source_paths.get(&plan.image_id).cloned(),
                fill_outputs: options
                    .fill_outputs
                    .get(&(plan.image_id, plan.trigger_class))
                    .cloned()
                    .unwrap_or_default(),
                synthetic_caption_ids: Vec::new(),
            })
        })
        .collect::<Result<_>>()?;

    let manifest = out_dir.join(MANIFEST_FILE);
    write_manifest(&entries, &manifest)?;
    Ok(manifest)
}

pub fn write_manifest(entries: &[ManifestEntry], path: &Path) -> Result<()> {
    crate::io::write_jsonl(path, entries)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    crate::io::read_jsonl(path)
}

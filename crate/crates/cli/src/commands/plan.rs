use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use decorr_core::io::write_jsonl;
use decorr_core::planner::export::{mask_file_name, MANIFEST_FILE, MASK_DIR};
use decorr_core::planner::ExportOptions;
use decorr_core::{
    apply_fill, export_masks, plan_all, ClassId, DecorrError, ImageId, PlanKind, RemovalPlan,
    Result,
};
use image::RgbImage;
use rayon::prelude::*;

use super::{create_dir, write_config_echo, Outcome};
use crate::config::RunConfig;
use crate::inputs::{image_path, load_dataset};

pub const PLANS_FILE: &str = "plans.jsonl";
pub const FILL_DIR: &str = "fill";
pub const VALIDATION_FILE: &str = "validation.jsonl";

type FillOutputs = HashMap<(ImageId, ClassId), BTreeMap<String, String>>;

fn open_rgb(path: &Path) -> Result<RgbImage> {
    image::open(path)
        .map(|img| img.to_rgb8())
        .map_err(|source| DecorrError::Image {
            path: path.to_path_buf(),
            source,
        })
}

/// Applies every configured fill to every plan, one source image read per image.
fn write_fills(
    plans: &[RemovalPlan],
    sources: &HashMap<ImageId, std::path::PathBuf>,
    config: &RunConfig,
    out_dir: &Path,
) -> Result<FillOutputs> {
    for mode in &config.fill_modes {
        create_dir(&out_dir.join(FILL_DIR).join(mode.as_str()))?;
    }
    let mut by_image: BTreeMap<ImageId, Vec<&RemovalPlan>> = BTreeMap::new();
    for plan in plans {
        by_image.entry(plan.image_id).or_default().push(plan);
    }
    let groups: Vec<_> = by_image.into_iter().collect();
    let written: Vec<FillOutputs> = groups
        .par_iter()
        .map(|(image_id, plans)| {
            let source = sources.get(image_id).ok_or_else(|| {
                DecorrError::PreconditionViolated(format!(
                    "fills need a source image for image {image_id}; set images_dir and file_name"
                ))
            })?;
            let image = open_rgb(source)?;
            plans
                .iter()
                .map(|plan| {
                    let mut outputs = BTreeMap::new();
                    for &mode in &config.fill_modes {
                        let filled = apply_fill(&image, &plan.mask, mode, config.blur_sigma)?;
                        let rel = format!("{FILL_DIR}/{mode}/{}.png", plan.stem());
                        let path = out_dir.join(&rel);
                        filled.save(&path).map_err(|source| DecorrError::Image {
                            path: path.clone(),
                            source,
                        })?;
                        outputs.insert(mode.to_string(), rel);
                    }
                    Ok(((plan.image_id, plan.trigger_class), outputs))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(written.into_iter().flatten().collect())
}

/// Plans removals for the configured dataset and writes masks, fills,
/// `plans.jsonl` and `manifest.jsonl`.
pub fn cmd_plan(config: &RunConfig, dry_run: bool) -> Result<Outcome> {
    let data = load_dataset(config)?;
    let plans = plan_all(&data.bundle, &config.plan_config());
    let out_dir = config.out_dir();
    let multi = plans
        .iter()
        .filter(|p| p.kind == PlanKind::MultiClass)
        .count();

    let mut outcome = Outcome::default();
    outcome.line(format!(
        "images: {}, captions: {}, plans: {} ({} single-class, {} multi-class)",
        data.bundle.images.len(),
        data.bundle.captions.len(),
        plans.len(),
        plans.len() - multi,
        multi
    ));

    let sources: HashMap<ImageId, std::path::PathBuf> = data
        .bundle
        .images
        .values()
        .filter_map(|img| Some((img.image_id, image_path(config, img.file_name.as_deref())?)))
        .collect();

    if dry_run {
        let masks = out_dir.join(MASK_DIR);
        outcome.line(format!(
            "would write {} masks under {}",
            plans.len(),
            masks.display()
        ));
        for mode in &config.fill_modes {
            outcome.line(format!(
                "would write {} {mode} fills under {}",
                plans.len(),
                out_dir.join(FILL_DIR).join(mode.as_str()).display()
            ));
        }
        for file in [PLANS_FILE, MANIFEST_FILE] {
            outcome.line(format!("would write {}", out_dir.join(file).display()));
        }
        return Ok(outcome);
    }

    create_dir(&out_dir)?;
    let fill_outputs = if config.fill_modes.is_empty() {
        HashMap::new()
    } else {
        write_fills(&plans, &sources, config, &out_dir)?
    };
    let options = ExportOptions {
        format: config.mask_format,
        source_paths: sources
            .iter()
            .map(|(id, p)| (*id, p.display().to_string()))
            .collect(),
        fill_outputs,
    };
    let manifest = export_masks(&plans, &out_dir, &options)?;

    let records: Vec<_> = plans
        .iter()
        .map(|p| {
            p.record(Some(format!(
                "{MASK_DIR}/{}",
                mask_file_name(p, config.mask_format)
            )))
        })
        .collect();
    let plans_path = out_dir.join(PLANS_FILE);
    write_jsonl(&plans_path, &records)?;
    if !data.report.is_empty() {
        write_jsonl(&out_dir.join(VALIDATION_FILE), &data.report.issues)?;
    }
    write_config_echo(&out_dir, "plan", config)?;

    outcome.line(format!("wrote {}", plans_path.display()));
    outcome.line(format!("wrote {}", manifest.display()));
    Ok(outcome)
}

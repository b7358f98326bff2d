use std::collections::HashMap;

use decorr_core::io::{read_jsonl, write_jsonl};
use decorr_core::planner::export::{read_manifest, write_manifest, MANIFEST_FILE};
use decorr_core::{
    assemble_pairs, CaptionContext, CaptionMethod, ClassId, ImageId, PlanRecord, PromptSet, Result,
};

use super::{write_config_echo, Outcome, PAIRS_FILE};
use crate::args::CaptionsArgs;
use crate::config::RunConfig;
use crate::inputs::{load_dataset, match_mode, prompts};

/// Builds `pairs.jsonl` from a plans file and records the pair ids in the
/// manifest, when one sits in the output directory.
pub fn cmd_captions(config: &RunConfig, args: &CaptionsArgs, dry_run: bool) -> Result<Outcome> {
    let out_dir = config.out_dir();
    let plans_path = args
        .plans
        .clone()
        .unwrap_or_else(|| out_dir.join(super::PLANS_FILE));
    let options = config.caption_options()?;
    let plans: Vec<PlanRecord> = read_jsonl(&plans_path)?;
    let data = load_dataset(config)?;
    let mode = match_mode(config, &data.bundle.vocabulary)?;
    let prompt_set = match options.method {
        CaptionMethod::Prompt => prompts(config)?,
        _ => PromptSet::bundled(),
    };
    let ctx = CaptionContext {
        bundle: &data.bundle,
        mode: &mode,
        prompts: &prompt_set,
    };
    let pairs = assemble_pairs(&plans, &ctx, &options)?;

    let mut outcome = Outcome::default();
    outcome.line(format!(
        "plans: {}, synthetic pairs: {} ({:?})",
        plans.len(),
        pairs.len(),
        options.method
    ));
    let pairs_path = out_dir.join(PAIRS_FILE);
    let manifest_path = out_dir.join(MANIFEST_FILE);
    if dry_run {
        outcome.line(format!("would write {}", pairs_path.display()));
        if manifest_path.is_file() {
            outcome.line(format!("would update {}", manifest_path.display()));
        }
        return Ok(outcome);
    }

    write_jsonl(&pairs_path, &pairs)?;
    outcome.line(format!("wrote {}", pairs_path.display()));
    if manifest_path.is_file() {
        let mut by_plan: HashMap<(ImageId, ClassId), Vec<String>> = HashMap::new();
        for pair in &pairs {
            by_plan
                .entry((pair.image_id, pair.trigger_class))
                .or_default()
                .push(pair.pair_id.clone());
        }
        let mut entries = read_manifest(&manifest_path)?;
        for entry in &mut entries {
            entry.synthetic_caption_ids = by_plan
                .remove(&(entry.image_id, entry.trigger_class))
                .unwrap_or_default();
        }
        write_manifest(&entries, &manifest_path)?;
        outcome.line(format!("updated {}", manifest_path.display()));
    }
    write_config_echo(&out_dir, "captions", config)?;
    Ok(outcome)
}

use std::collections::BTreeMap;

use decorr_core::io::read_jsonl;
use decorr_core::metrics::{read_embd, read_simm};
use decorr_core::{
    build_gallery, cosine_sim, odmap_at_k, DecorrError, GalleryMeta, QueryMeta, Result,
};
use serde_json::json;

use super::{write_config_echo, write_text, Outcome};
use crate::args::EvalArgs;
use crate::config::RunConfig;
use crate::inputs::{load_dataset, match_mode};

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";

/// Scores a similarity matrix (given, or computed from embeddings) and
/// writes `report.json` and `report.csv`.
pub fn cmd_eval(config: &RunConfig, args: &EvalArgs, dry_run: bool) -> Result<Outcome> {
    let mut settings = BTreeMap::new();
    let sim = match (&args.simm, &args.query_embd, &args.gallery_embd) {
        (Some(simm), None, None) => {
            settings.insert("similarity".to_owned(), json!("matrix"));
            read_simm(simm)?
        }
        (None, Some(q), Some(g)) => {
            settings.insert("similarity".to_owned(), json!("cosine"));
            cosine_sim(&read_embd(q)?, &read_embd(g)?)?
        }
        _ => {
            return Err(DecorrError::Config(
                "eval needs --simm, or both --query-embd and --gallery-embd".into(),
            ))
        }
    };
    let queries: Vec<QueryMeta> = read_jsonl(&args.query_meta)?;
    let gallery: Vec<GalleryMeta> = match &args.gallery_meta {
        Some(path) => {
            settings.insert("gallery".to_owned(), json!("metadata"));
            read_jsonl(path)?
        }
        None => {
            let data = load_dataset(config)?;
            let mode = match_mode(config, &data.bundle.vocabulary)?;
            settings.insert("gallery".to_owned(), json!("dataset"));
            settings.insert("match_mode".to_owned(), json!(config.match_mode));
            settings.insert("splits".to_owned(), json!(config.splits));
            build_gallery(&data.bundle, &config.splits, &mode)?
        }
    };
    let mut report = odmap_at_k(&sim, &queries, &gallery, &config.eval_config())?;
    report.settings = settings;

    let mut outcome = Outcome::default();
    outcome.line(format!(
        "queries: {}, gallery: {}",
        report.n_queries, report.n_gallery
    ));
    for (name, values) in [
        ("R", &report.recall),
        ("mAP", &report.map),
        ("ODmAP", &report.odmap),
    ] {
        for (k, v) in values {
            outcome.line(format!("{name}@{k} = {v:.4}"));
        }
    }
    let out_dir = config.out_dir();
    let json_path = out_dir.join(REPORT_JSON);
    let csv_path = out_dir.join(REPORT_CSV);
    if dry_run {
        outcome.line(format!("would write {}", json_path.display()));
        outcome.line(format!("would write {}", csv_path.display()));
        return Ok(outcome);
    }
    write_text(&json_path, &report.to_json())?;
    write_text(&csv_path, &report.to_csv())?;
    write_config_echo(&out_dir, "eval", config)?;
    outcome.line(format!("wrote {}", json_path.display()));
    Ok(outcome)
}

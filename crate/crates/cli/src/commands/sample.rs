use std::io::{BufRead, BufReader};

use decorr_core::sampling::sample_indices;
use decorr_core::{DecorrError, Result};

use super::{write_config_echo, write_text, Outcome, PAIRS_FILE};
use crate::args::SampleArgs;
use crate::config::RunConfig;

pub const SAMPLED_FILE: &str = "pairs_sampled.jsonl";

/// Non-blank lines of a JSONL file, each checked to be valid JSON.
fn read_lines(path: &std::path::Path) -> Result<Vec<String>> {
    let io_err = |source| DecorrError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::open(path).map_err(io_err)?;
    let mut lines = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        serde_json::from_str::<serde_json::Value>(&line).map_err(|e| DecorrError::Parse {
            context: format!("{}:{}", path.display(), i + 1),
            message: e.to_string(),
        })?;
        lines.push(line);
    }
    Ok(lines)
}

/// Keeps a seeded uniform subset of `ceil(ratio * N)` pairs, copying the
/// chosen lines verbatim and in their original order.
pub fn cmd_sample(config: &RunConfig, args: &SampleArgs, dry_run: bool) -> Result<Outcome> {
    let ratio = args
        .ratio
        .or(config.synthetic_ratio)
        .ok_or_else(|| DecorrError::Config("sampling needs --ratio or synthetic_ratio".into()))?;
    let seed = config
        .seed
        .ok_or_else(|| DecorrError::Config("sampling needs a seed".into()))?;
    let out_dir = config.out_dir();
    let input = args
        .pairs
        .clone()
        .unwrap_or_else(|| out_dir.join(PAIRS_FILE));
    let lines = read_lines(&input)?;
    let picked = sample_indices(lines.len(), ratio, seed)?;

    let mut outcome = Outcome::default();
    outcome.line(format!(
        "pairs: {}, ratio: {ratio}, seed: {seed}, kept: {}",
        lines.len(),
        picked.len()
    ));
    let output = args
        .output
        .clone()
        .unwrap_or_else(|| out_dir.join(SAMPLED_FILE));
    if dry_run {
        outcome.line(format!("would write {}", output.display()));
        return Ok(outcome);
    }
    let mut text = String::new();
    for i in picked {
        text.push_str(&lines[i]);
        text.push('\n');
    }
    write_text(&output, &text)?;
    let echo_dir = output.parent().map(|p| p.to_path_buf()).unwrap_or_default();
    write_config_echo(&echo_dir, "sample", config)?;
    outcome.line(format!("wrote {}", output.display()));
    Ok(outcome)
}

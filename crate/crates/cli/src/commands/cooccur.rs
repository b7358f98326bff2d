use decorr_core::{cooccurrence_stats, Result};

use super::{write_config_echo, write_text, Outcome};
use crate::config::RunConfig;
use crate::inputs::load_dataset;

pub const COOCCURRENCE_FILE: &str = "cooccurrence.json";

/// Writes class co-occurrence counts and lift to `cooccurrence.json`.
pub fn cmd_cooccur(config: &RunConfig, dry_run: bool) -> Result<Outcome> {
    let data = load_dataset(config)?;
    let stats = cooccurrence_stats(&data.bundle);
    let n = stats.classes.len();
    let mut pairs: Vec<(u64, usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .map(|(a, b)| (stats.counts[a][b], a, b))
        .filter(|&(c, _, _)| c > 0)
        .collect();
    pairs.sort_by(|x, y| y.0.cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));

    let mut outcome = Outcome::default();
    outcome.line(format!(
        "images: {}, co-occurring class pairs: {}",
        stats.n_images,
        pairs.len()
    ));
    for &(count, a, b) in pairs.iter().take(5) {
        outcome.line(format!(
            "{} + {}: {count} images, lift {:.3}",
            stats.classes[a], stats.classes[b], stats.lift[a][b]
        ));
    }
    let out_dir = config.out_dir();
    let path = out_dir.join(COOCCURRENCE_FILE);
    if dry_run {
        outcome.line(format!("would write {}", path.display()));
        return Ok(outcome);
    }
    let mut text = serde_json::to_string_pretty(&stats).expect("stats serialize");
    text.push('\n');
    write_text(&path, &text)?;
    write_config_echo(&out_dir, "cooccur", config)?;
    outcome.line(format!("wrote {}", path.display()));
    Ok(outcome)
}

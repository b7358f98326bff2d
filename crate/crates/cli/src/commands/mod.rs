//! One function per subcommand. Each is a pure function of its
//! configuration and input files; under `dry_run` nothing is written.

mod captions;
mod cooccur;
mod eval;
mod plan;
mod sample;

use std::fs;
use std::path::{Path, PathBuf};

use decorr_core::{DecorrError, Result};

pub use captions::cmd_captions;
pub use cooccur::{cmd_cooccur, COOCCURRENCE_FILE};
pub use eval::{cmd_eval, REPORT_CSV, REPORT_JSON};
pub use plan::{cmd_plan, FILL_DIR, PLANS_FILE, VALIDATION_FILE};
pub use sample::{cmd_sample, SAMPLED_FILE};

use crate::config::RunConfig;

pub const PAIRS_FILE: &str = "pairs.jsonl";

/// Human-readable summary printed on stdout.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Outcome {
    pub lines: Vec<String>,
}

impl Outcome {
    fn line(&mut self, text: impl Into<String>) {
        self.lines.push(text.into());
    }
}

pub(crate) fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| DecorrError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        create_dir(parent)?;
    }
    fs::write(path, text).map_err(|e| DecorrError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Writes the effective configuration next to the command's outputs.
pub(crate) fn write_config_echo(
    out_dir: &Path,
    command: &str,
    config: &RunConfig,
) -> Result<PathBuf> {
    let path = out_dir.join(format!("{command}.config.json"));
    write_text(&path, &config.to_json())?;
    Ok(path)
}

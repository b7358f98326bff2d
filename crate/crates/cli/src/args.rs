//! Command-line argument definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Clone, Parser)]
#[command(
    name = "decorr",
    version,
    about = "Plan object removals, synthesize captions and score ODmAP@k",
    after_help = "Exit codes: 0 ok, 2 parse error, 3 bounds or validation error, \
                  4 I/O error, 5 precondition violated."
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// JSON run configuration; relative paths inside it resolve against its directory.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Seed for every random choice; overrides the config value.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; overrides the config value.
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Validate inputs and print the execution plan without writing anything.
    #[arg(long, global = true)]
    pub dry_run: bool,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Compute removal plans, masks, optional fills and the inpainting manifest.
    Plan,
    /// Build synthetic captions for previously computed plans.
    Captions(CaptionsArgs),
    /// Score a similarity matrix or embeddings with R@k, mAP@k and ODmAP@k.
    Eval(EvalArgs),
    /// Report class co-occurrence counts and lift.
    Cooccur,
    /// Draw a seeded subset of synthetic pairs.
    Sample(SampleArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CaptionsArgs {
    /// Plans file; defaults to `<out-dir>/plans.jsonl`.
    #[arg(long, value_name = "FILE")]
    pub plans: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EvalArgs {
    /// Precomputed query x gallery similarity matrix.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["query_embd", "gallery_embd"])]
    pub simm: Option<PathBuf>,
    /// Query embeddings, scored against `--gallery-embd` by cosine similarity.
    #[arg(long, value_name = "FILE", requires = "gallery_embd")]
    pub query_embd: Option<PathBuf>,
    #[arg(long, value_name = "FILE", requires = "query_embd")]
    pub gallery_embd: Option<PathBuf>,
    /// Query metadata JSONL (a pairs file works as is).
    #[arg(long, value_name = "FILE")]
    pub query_meta: PathBuf,
    /// Gallery metadata JSONL; built from the configured dataset when absent.
    #[arg(long, value_name = "FILE")]
    pub gallery_meta: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SampleArgs {
    /// Pairs file; defaults to `<out-dir>/pairs.jsonl`.
    #[arg(long, value_name = "FILE")]
    pub pairs: Option<PathBuf>,
    /// Fraction of pairs to keep, in (0, 1]; overrides `synthetic_ratio`.
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Output file; defaults to `<out-dir>/pairs_sampled.jsonl`.
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

//! The JSON run configuration.
//!
//! Every field is optional. Paths are resolved against the directory of the
//! configuration file; paths given on the command line resolve against the
//! working directory.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use decorr_core::captions::CaptionOptions;
use decorr_core::planner::DEFAULT_BLUR_SIGMA;
use decorr_core::{
    ApNorm, CaptionMethod, DecorrError, EvalConfig, FillMode, MaskFormat, PlanConfig,
    RelevanceMode, Result, Split,
};
use serde::{Deserialize, Serialize};

use crate::args::GlobalArgs;

pub const DEFAULT_OUT_DIR: &str = "out";

/// An instances file, optionally pinned to a split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstancesSource {
    Path(PathBuf),
    WithSplit { path: PathBuf, split: Split },
}

impl InstancesSource {
    pub fn path(&self) -> &Path {
        match self {
            InstancesSource::Path(p) | InstancesSource::WithSplit { path: p, .. } => p,
        }
    }

    /// Split applied to images that carry no `split` field of their own.
    pub fn split(&self) -> Split {
        match self {
            InstancesSource::Path(_) => Split::Train,
            InstancesSource::WithSplit { split, .. } => *split,
        }
    }

    fn with_path(&self, path: PathBuf) -> Self {
        match self {
            InstancesSource::Path(_) => InstancesSource::Path(path),
            InstancesSource::WithSplit { split, .. } => InstancesSource::WithSplit {
                path,
                split: *split,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

fn one_or_many<'de, D, T>(d: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: serde::Deserializer<'de>,
    T: Deserialize<'de>,
{
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchModeName {
    #[default]
    WordList,
    AnnotatedPairs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Class list, one name per line; the 80 MS-COCO classes when absent.
    pub vocabulary: Option<PathBuf>,
    #[serde(deserialize_with = "one_or_many")]
    pub instances: Vec<InstancesSource>,
    #[serde(deserialize_with = "one_or_many")]
    pub captions: Vec<PathBuf>,
    /// Noun-phrase chunks JSONL; captions are chunked with the lexicon when absent.
    pub np_chunks: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub match_table: Option<PathBuf>,
    pub match_mode: MatchModeName,
    pub prompts: Option<PathBuf>,
    pub images_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,

    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub limit_union_size: bool,
    pub blur_sigma: f64,
    pub fill_modes: Vec<FillMode>,
    pub mask_format: MaskFormat,

    pub caption_method: CaptionMethod,
    pub captions_per_image: usize,
    pub caption_offset: usize,

    pub relevance_mode: RelevanceMode,
    pub ap_norm: ApNorm,
    pub k_list: Vec<usize>,
    pub splits: BTreeSet<Split>,

    pub seed: Option<u64>,
    pub synthetic_ratio: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let plan = PlanConfig::default();
        let captions = CaptionOptions::default();
        let eval = EvalConfig::default();
        Self {
            vocabulary: None,
            instances: Vec::new(),
            captions: Vec::new(),
            np_chunks: None,
            lexicon: None,
            match_table: None,
            match_mode: MatchModeName::default(),
            prompts: None,
            images_dir: None,
            out_dir: None,
            alpha1: plan.alpha1,
            alpha2: plan.alpha2,
            alpha3: plan.alpha3,
            limit_union_size: plan.limit_union_size,
            blur_sigma: DEFAULT_BLUR_SIGMA,
            fill_modes: Vec::new(),
            mask_format: MaskFormat::default(),
            caption_method: captions.method,
            captions_per_image: captions.captions_per_image,
            caption_offset: captions.caption_offset,
            relevance_mode: eval.relevance_mode,
            ap_norm: eval.ap_norm,
            k_list: eval.k_list,
            splits: Split::ALL.into_iter().collect(),
            seed: None,
            synthetic_ratio: None,
        }
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl RunConfig {
    pub fn from_json(text: &str, context: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| DecorrError::Parse {
            context: context.to_owned(),
            message: e.to_string(),
        })
    }

    /// Reads a config file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| DecorrError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let config = Self::from_json(&text, &path.display().to_string())?;
        let base = path.parent().unwrap_or(Path::new(""));
        Ok(config.resolved_against(base))
    }

    pub fn resolved_against(mut self, base: &Path) -> Self {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(inner) = p.as_mut() {
                *inner = resolve(base, inner);
            }
        };
        fix(&mut self.vocabulary);
        fix(&mut self.np_chunks);
        fix(&mut self.lexicon);
        fix(&mut self.match_table);
        fix(&mut self.prompts);
        fix(&mut self.images_dir);
        fix(&mut self.out_dir);
        self.instances = self
            .instances
            .iter()
            .map(|s| s.with_path(resolve(base, s.path())))
            .collect();
        self.captions = self.captions.iter().map(|p| resolve(base, p)).collect();
        self
    }

    /// Loads the configured file, if any, and applies command-line overrides.
    pub fn from_args(global: &GlobalArgs) -> Result<Self> {
        let mut config = match &global.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        if let Some(seed) = global.seed {
            config.seed = Some(seed);
        }
        if let Some(dir) = &global.out_dir {
            config.out_dir = Some(dir.clone());
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.plan_config().validate()?;
        self.eval_config().validate()?;
        if !(self.blur_sigma.is_finite() && self.blur_sigma > 0.0) {
            return Err(DecorrError::Config(format!(
                "blur_sigma must be positive, got {}",
                self.blur_sigma
            )));
        }
        if !(1..=5).contains(&self.captions_per_image) {
            return Err(DecorrError::Config(format!(
                "captions_per_image must be in [1, 5], got {}",
                self.captions_per_image
            )));
        }
        if let Some(r) = self.synthetic_ratio {
            if !(r > 0.0 && r <= 1.0) {
                return Err(DecorrError::RatioOutOfRange(r));
            }
        }
        Ok(())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    pub fn plan_config(&self) -> PlanConfig {
        PlanConfig {
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            alpha3: self.alpha3,
            limit_union_size: self.limit_union_size,
        }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            k_list: self.k_list.clone(),
            relevance_mode: self.relevance_mode,
            ap_norm: self.ap_norm,
        }
    }

    /// Caption options; the prompt method needs a seed.
    pub fn caption_options(&self) -> Result<CaptionOptions> {
        let seed = match (self.caption_method, self.seed) {
            (CaptionMethod::Prompt, None) => {
                return Err(DecorrError::Config(
                    "the prompt caption method needs a seed".into(),
                ))
            }
            (_, seed) => seed.unwrap_or(0),
        };
        Ok(CaptionOptions {
            method: self.caption_method,
            captions_per_image: self.captions_per_image,
            caption_offset: self.caption_offset,
            seed,
        })
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("config serializes");
        text.push('\n');
        text
    }
}

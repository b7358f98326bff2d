//! Synthetic captions for removal plans.
//!
//! The default method deletes every noun phrase that mentions a removed
//! class from an original caption of the image. The prompt method fills a
//! template such as `a photo of {classes}.` with the kept class names.

use std::collections::BTreeSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    CaptionId, CaptionRecord, ClassId, ClassVocabulary, DatasetBundle, ImageId, NounPhraseSpan,
};
use crate::error::{DecorrError, Result};
use crate::matching::MatchMode;
use crate::planner::PlanRecord;

const PLACEHOLDER: &str = "{classes}";
const DEFAULT_PROMPTS: &str = include_str!("../../../data/prompts.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaptionMethod {
    #[default]
    NpRemoval,
    Prompt,
    /// Filled in by an external captioning model; never produced here.
    ExternalCaption,
}

/// One line of the synthetic pairs JSONL file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticPair {
    pub pair_id: String,
    pub image_id: ImageId,
    pub trigger_class: ClassId,
    pub removed_classes: BTreeSet<ClassId>,
    pub kept_classes: BTreeSet<ClassId>,
    pub method: CaptionMethod,
    pub caption: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_caption_id: Option<CaptionId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_index: Option<usize>,
    #[serde(default)]
    pub mask_path: Option<String>,
}

/// Caption tokens left after noun-phrase removal, with the surviving spans
/// re-indexed onto them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticCaption {
    pub tokens: Vec<String>,
    pub spans: Vec<NounPhraseSpan>,
}

impl SyntheticCaption {
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }

    /// The synthetic caption as a record over `caption_id`/`image_id`.
    pub fn to_record(&self, caption_id: CaptionId, image_id: ImageId) -> CaptionRecord {
        CaptionRecord {
            caption_id,
            image_id,
            text: self.text(),
            tokens: self.tokens.clone(),
            np_spans: self
                .spans
                .iter()
                .map(|s| NounPhraseSpan {
                    caption_id,
                    ..s.clone()
                })
                .collect(),
        }
    }
}

/// Deletes every noun phrase mentioning a class in `removed`. Returns `None`
/// when nothing was removed or nothing is left.
pub fn remove_matched_nps(
    caption: &CaptionRecord,
    removed: &BTreeSet<ClassId>,
    mode: &MatchMode,
) -> Result<Option<SyntheticCaption>> {
    let mut drop = vec![false; caption.tokens.len()];
    let mut kept_spans = Vec::new();
    let mut any_removed = false;
    for span in &caption.np_spans {
        if mode.matches_any(removed, span)? {
            drop[span.token_start..span.token_end].fill(true);
            any_removed = true;
        } else {
            kept_spans.push(span);
        }
    }
    if !any_removed {
        return Ok(None);
    }

    // new_index[i] = number of surviving tokens before i
    let mut new_index = Vec::with_capacity(caption.tokens.len() + 1);
    let mut tokens = Vec::new();
    for (token, dropped) in caption.tokens.iter().zip(&drop) {
        new_index.push(tokens.len());
        if !dropped {
            tokens.push(token.clone());
        }
    }
    new_index.push(tokens.len());
    if tokens.is_empty() {
        return Ok(None);
    }
    let spans = kept_spans
        .into_iter()
        .map(|s| NounPhraseSpan {
            token_start: new_index[s.token_start],
            token_end: new_index[s.token_end],
            ..s.clone()
        })
        .collect();
    Ok(Some(SyntheticCaption { tokens, spans }))
}

/// Ordered prompt templates, each with exactly one `{classes}` placeholder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    templates: Vec<String>,
}

impl PromptSet {
    pub fn new(templates: Vec<String>) -> Result<Self> {
        if templates.is_empty() {
            return Err(DecorrError::EmptyPromptSet);
        }
        for t in &templates {
            if t.matches(PLACEHOLDER).count() != 1 {
                return Err(DecorrError::Validation(format!(
                    "prompt `{t}` must contain exactly one {PLACEHOLDER}"
                )));
            }
        }
        Ok(Self { templates })
    }

    /// One template per non-blank line.
    pub fn from_lines(text: &str) -> Result<Self> {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_owned)
                .collect(),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| DecorrError::io(path, e))?;
        Self::from_lines(&text)
    }

    /// The 80 photo templates shipped in `data/prompts.txt`.
    pub fn bundled() -> Self {
        Self::from_lines(DEFAULT_PROMPTS).expect("bundled prompts are valid")
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&str> {
        self.templates.get(index).map(String::as_str)
    }
}

/// "a", "a and b", "a, b and c".
pub fn join_class_names(names: &[&str]) -> String {
    match names {
        [] => String::new(),
        [one] => (*one).to_owned(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

/// Index of the template used for `pair_index` under `seed`.
pub fn prompt_choice(prompts: &PromptSet, seed: u64, pair_index: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(pair_index);
    rng.random_range(0..prompts.len())
}

/// Fills a seeded template choice with the kept class names in class-id order.
pub fn prompt_caption(
    kept: &BTreeSet<ClassId>,
    vocab: &ClassVocabulary,
    prompts: &PromptSet,
    seed: u64,
    pair_index: u64,
) -> Result<(String, usize)> {
    if prompts.is_empty() {
        return Err(DecorrError::EmptyPromptSet);
    }
    if kept.is_empty() {
        return Err(DecorrError::PreconditionViolated(
            "prompt captions need at least one kept class".into(),
        ));
    }
    let names = kept
        .iter()
        .map(|c| vocab.name(*c).ok_or(DecorrError::UnknownClassId(c.index())))
        .collect::<Result<Vec<_>>>()?;
    let index = prompt_choice(prompts, seed, pair_index);
    let caption = prompts.templates[index].replace(PLACEHOLDER, &join_class_names(&names));
    Ok((caption, index))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CaptionOptions {
    pub method: CaptionMethod,
    /// Captions tried per plan, in ascending caption id.
    pub captions_per_image: usize,
    /// Number of lowest-id captions skipped before selection.
    pub caption_offset: usize,
    pub seed: u64,
}

impl Default for CaptionOptions {
    fn default() -> Self {
        Self {
            method: CaptionMethod::NpRemoval,
            captions_per_image: 1,
            caption_offset: 0,
            seed: 0,
        }
    }
}

pub struct CaptionContext<'a> {
    pub bundle: &'a DatasetBundle,
    pub mode: &'a MatchMode,
    pub prompts: &'a PromptSet,
}

/// Builds synthetic pairs for every plan, in plan order then caption order.
pub fn assemble_pairs(
    plans: &[PlanRecord],
    ctx: &CaptionContext<'_>,
    options: &CaptionOptions,
) -> Result<Vec<SyntheticPair>> {
    if !(1..=5).contains(&options.captions_per_image) {
        return Err(DecorrError::Config(format!(
            "captions_per_image must be in [1, 5], got {}",
            options.captions_per_image
        )));
    }
    if options.method == CaptionMethod::ExternalCaption {
        return Err(DecorrError::Config(
            "external captions are produced by the model adapter, not here".into(),
        ));
    }
    let per_plan: Vec<Vec<SyntheticPair>> = plans
        .par_iter()
        .enumerate()
        .map(|(index, plan)| pairs_for_plan(index as u64, plan, ctx, options))
        .collect::<Result<_>>()?;
    Ok(per_plan.into_iter().flatten().collect())
}

fn pairs_for_plan(
    index: u64,
    plan: &PlanRecord,
    ctx: &CaptionContext<'_>,
    options: &CaptionOptions,
) -> Result<Vec<SyntheticPair>> {
    let base = |pair_id: String, caption: String| SyntheticPair {
        pair_id,
        image_id: plan.image_id,
        trigger_class: plan.trigger_class,
        removed_classes: plan.removed_classes.clone(),
        kept_classes: plan.kept_classes.clone(),
        method: options.method,
        caption,
        source_caption_id: None,
        prompt_index: None,
        mask_path: plan.mask_path.clone(),
    };
    match options.method {
        CaptionMethod::NpRemoval => {
            let mut out = Vec::new();
            let captions = ctx
                .bundle
                .captions_of(plan.image_id)
                .skip(options.caption_offset)
                .take(options.captions_per_image);
            for caption in captions {
                if let Some(synth) = remove_matched_nps(caption, &plan.removed_classes, ctx.mode)? {
                    let id = format!(
                        "{}_{}_c{}",
                        plan.image_id, plan.trigger_class, caption.caption_id
                    );
                    out.push(SyntheticPair {
                        source_caption_id: Some(caption.caption_id),
                        ..base(id, synth.text())
                    });
                }
            }
            Ok(out)
        }
        CaptionMethod::Prompt => {
            let (caption, prompt_index) = prompt_caption(
                &plan.kept_classes,
                &ctx.bundle.vocabulary,
                ctx.prompts,
                options.seed,
                index,
            )?;
            let id = format!("{}_{}_p", plan.image_id, plan.trigger_class);
            Ok(vec![SyntheticPair {
                prompt_index: Some(prompt_index),
                ..base(id, caption)
            }])
        }
        CaptionMethod::ExternalCaption => Ok(Vec::new()),
    }
}

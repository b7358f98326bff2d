//! Noun-phrase chunk ingestion and the lexicon-driven fallback chunker.

use std::collections::HashMap;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use super::{check_spans, CaptionId, CaptionRecord, ClassId, DatasetBundle, NounPhraseSpan};
use crate::error::{DecorrError, Result};

const DEFAULT_LEXICON: &str = include_str!("../../../../data/np_lexicon.json");

#[derive(Debug, Deserialize)]
struct ChunkRecord {
    caption_id: CaptionId,
    spans: Vec<RawSpan>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawSpan {
    Pair(usize, usize),
    Annotated(usize, usize, u32),
    Object {
        start: usize,
        end: usize,
        #[serde(default)]
        class_id: Option<u32>,
        #[serde(default)]
        class: Option<String>,
    },
}

impl RawSpan {
    fn resolve(self, bundle: &DatasetBundle) -> Result<(usize, usize, Option<ClassId>)> {
        let check = |id: u32| {
            let id = ClassId(id);
            if bundle.vocabulary.contains(id) {
                Ok(id)
            } else {
                Err(DecorrError::UnknownClassId(id.index()))
            }
        };
        Ok(match self {
            RawSpan::Pair(s, e) => (s, e, None),
            RawSpan::Annotated(s, e, c) => (s, e, Some(check(c)?)),
            RawSpan::Object {
                start,
                end,
                class_id,
                class,
            } => {
                let class = match (class_id, class) {
                    (Some(id), _) => Some(check(id)?),
                    (None, Some(name)) => Some(
                        bundle
                            .vocabulary
                            .lookup(&name)
                            .ok_or(DecorrError::UnknownClass(name))?,
                    ),
                    (None, None) => None,
                };
                (start, end, class)
            }
        })
    }
}

/// Attaches noun-phrase spans from a JSONL file, one
/// `{caption_id, spans: [[start, end(, class_id)?], ...]}` object per line.
/// Spans are sorted by start before validation; a record replaces any spans
/// previously attached to its caption.
pub fn load_np_chunks(path: &Path, bundle: &mut DatasetBundle) -> Result<usize> {
    let file = std::fs::File::open(path).map_err(|e| DecorrError::io(path, e))?;
    let mut loaded = 0;
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| DecorrError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ChunkRecord = serde_json::from_str(&line)
            .map_err(|e| DecorrError::parse(format!("{}:{}", path.display(), lineno + 1), e))?;
        let resolved = record
            .spans
            .into_iter()
            .map(|s| s.resolve(bundle))
            .collect::<Result<Vec<_>>>()?;
        attach_spans(bundle, record.caption_id, resolved)?;
        loaded += 1;
    }
    Ok(loaded)
}

/// Validates and attaches `(start, end, class)` spans to one caption.
pub fn attach_spans(
    bundle: &mut DatasetBundle,
    caption_id: CaptionId,
    mut spans: Vec<(usize, usize, Option<ClassId>)>,
) -> Result<()> {
    let caption = bundle
        .captions
        .get_mut(&caption_id)
        .ok_or(DecorrError::UnknownCaption(caption_id))?;
    spans.sort_by_key(|&(s, e, _)| (s, e));
    let spans = spans
        .into_iter()
        .map(|(s, e, c)| NounPhraseSpan::over(caption_id, &caption.tokens, s, e, c))
        .collect::<Result<Vec<_>>>()?;
    check_spans(caption_id, caption.tokens.len(), &spans)?;
    caption.np_spans = spans;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WordClass {
    Det,
    Adj,
    Noun,
    Other,
}

/// Word-class lookup for [`naive_np_chunk`]. Unknown words count as nouns.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    words: HashMap<String, WordClass>,
}

impl Lexicon {
    /// Parses `{"det": [...], "adj": [...], "noun": [...], "other": [...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let groups: HashMap<WordClass, Vec<String>> =
            serde_json::from_str(text).map_err(|e| DecorrError::parse("lexicon", e))?;
        let mut words = HashMap::new();
        for (class, list) in groups {
            for word in list {
                let word = word.to_lowercase();
                if let Some(prev) = words.insert(word.clone(), class) {
                    if prev != class {
                        return Err(DecorrError::Validation(format!(
                            "lexicon word `{word}` has conflicting classes"
                        )));
                    }
                }
            }
        }
        Ok(Self { words })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| DecorrError::io(path, e))?;
        Self::from_json(&text)
    }

    /// The lexicon bundled with the toolkit.
    pub fn bundled() -> Self {
        Self::from_json(DEFAULT_LEXICON).expect("bundled lexicon is valid")
    }

    pub fn insert(&mut self, word: &str, class: WordClass) {
        self.words.insert(word.to_lowercase(), class);
    }

    pub fn class_of(&self, word: &str) -> WordClass {
        self.words.get(word).copied().unwrap_or(WordClass::Noun)
    }
}

/// Greedy left-to-right chunker over the pattern `det? adj* noun+`, taking
/// the longest match at each position.
pub fn naive_np_chunk(caption: &CaptionRecord, lexicon: &Lexicon) -> Vec<NounPhraseSpan> {
    let classes: Vec<WordClass> = caption.tokens.iter().map(|t| lexicon.class_of(t)).collect();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < classes.len() {
        let mut j = i;
        if classes[j] == WordClass::Det {
            j += 1;
        }
        while j < classes.len() && classes[j] == WordClass::Adj {
            j += 1;
        }
        let noun_start = j;
        while j < classes.len() && classes[j] == WordClass::Noun {
            j += 1;
        }
        if j > noun_start {
            spans.push(NounPhraseSpan {
                caption_id: caption.caption_id,
                token_start: i,
                token_end: j,
                surface_text: caption.tokens[i..j].join(" "),
                class_id: None,
            });
            i = j;
        } else {
            i += 1;
        }
    }
    spans
}

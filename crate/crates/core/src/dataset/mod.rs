//! Normalized in-memory representation of detection annotations, captions
//! and noun-phrase chunks.
//!
//! Loaders live in [`coco`] (instances and captions JSON) and [`chunks`]
//! (noun-phrase JSONL plus the lexicon-driven fallback chunker). A loaded
//! [`DatasetBundle`] is immutable in practice and can be shared freely across
//! threads.

pub mod chunks;
pub mod coco;
pub mod report;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{DecorrError, Result};

pub use chunks::{load_np_chunks, naive_np_chunk, Lexicon, WordClass};
pub use coco::{load_captions, load_instances};
pub use report::{Issue, Severity, ValidationReport};

const MSCOCO_CLASSES: &str = include_str!("../../../../data/mscoco_classes.txt");

pub type ImageId = u64;
pub type CaptionId = u64;

/// Index of a class in the [`ClassVocabulary`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub u32);

impl ClassId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Axis-aligned box in pixel units, COCO `[x, y, w, h]` layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.x, self.y, self.w, self.h]
    }

    /// Integer pixel extent `(x0, y0, x1, y1)` (half-open) with corners
    /// rounded half-up and clipped to `width x height`.
    pub fn pixel_extent(&self, width: u32, height: u32) -> (u32, u32, u32, u32) {
        let round = |v: f64, hi: u32| -> u32 { (v + 0.5).floor().clamp(0.0, hi as f64) as u32 };
        (
            round(self.x, width),
            round(self.y, height),
            round(self.x + self.w, width),
            round(self.y + self.h, height),
        )
    }

    pub fn fits_in(&self, width: u32, height: u32) -> bool {
        self.x >= 0.0
            && self.y >= 0.0
            && self.w > 0.0
            && self.h > 0.0
            && self.x + self.w <= width as f64
            && self.y + self.h <= height as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectAnnotation {
    pub bbox: BBox,
    pub class_id: ClassId,
}

/// Ordered class names; a name's position is its [`ClassId`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct ClassVocabulary {
    names: Vec<String>,
    index: HashMap<String, ClassId>,
}

/// Lowercase and collapse internal whitespace.
pub fn normalize_name(name: &str) -> String {
    name.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

impl ClassVocabulary {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = ClassVocabulary::default();
        for name in names {
            let name = name.into();
            let key = normalize_name(&name);
            if key.is_empty() {
                return Err(DecorrError::Validation("empty class name".into()));
            }
            if vocab.index.contains_key(&key) {
                return Err(DecorrError::Validation(format!(
                    "duplicate class name `{name}`"
                )));
            }
            let id = ClassId(vocab.names.len() as u32);
            vocab.index.insert(key.clone(), id);
            vocab.names.push(key);
        }
        Ok(vocab)
    }

    /// One class name per line; blank lines and `#` comments are skipped.
    pub fn from_lines(text: &str) -> Result<Self> {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| DecorrError::io(path, e))?;
        Self::from_lines(&text)
    }

    /// The 80 MS-COCO detection classes in their canonical order.
    pub fn mscoco() -> Self {
        Self::from_lines(MSCOCO_CLASSES).expect("bundled class list is valid")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn lookup(&self, name: &str) -> Option<ClassId> {
        self.index.get(&normalize_name(name)).copied()
    }

    pub fn name(&self, id: ClassId) -> Option<&str> {
        self.names.get(id.index()).map(String::as_str)
    }

    pub fn contains(&self, id: ClassId) -> bool {
        id.index() < self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn ids(&self) -> impl Iterator<Item = ClassId> + '_ {
        (0..self.names.len() as u32).map(ClassId)
    }
}

impl TryFrom<Vec<String>> for ClassVocabulary {
    type Error = DecorrError;

    fn try_from(names: Vec<String>) -> Result<Self> {
        Self::new(names)
    }
}

impl From<ClassVocabulary> for Vec<String> {
    fn from(vocab: ClassVocabulary) -> Self {
        vocab.names
    }
}

/// A noun-phrase chunk as a half-open token range of its caption.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NounPhraseSpan {
    pub caption_id: CaptionId,
    pub token_start: usize,
    pub token_end: usize,
    pub surface_text: String,
    /// Annotated class, when the chunk source provides one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_id: Option<ClassId>,
}

impl NounPhraseSpan {
    /// Builds a span over `tokens[start..end]`, materializing its surface text.
    pub fn over(
        caption_id: CaptionId,
        tokens: &[String],
        start: usize,
        end: usize,
        class_id: Option<ClassId>,
    ) -> Result<Self> {
        if start >= end || end > tokens.len() {
            return Err(DecorrError::SpanOutOfRange {
                caption_id,
                start,
                end,
                len: tokens.len(),
            });
        }
        Ok(Self {
            caption_id,
            token_start: start,
            token_end: end,
            surface_text: tokens[start..end].join(" "),
            class_id,
        })
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.surface_text.split(' ')
    }

    pub fn len(&self) -> usize {
        self.token_end - self.token_start
    }

    pub fn is_empty(&self) -> bool {
        self.token_end == self.token_start
    }
}

/// Checks that spans are in range, non-empty, sorted and non-overlapping.
pub fn check_spans(caption_id: CaptionId, len: usize, spans: &[NounPhraseSpan]) -> Result<()> {
    let mut prev_end = 0;
    for (i, span) in spans.iter().enumerate() {
        if span.token_start >= span.token_end || span.token_end > len {
            return Err(DecorrError::SpanOutOfRange {
                caption_id,
                start: span.token_start,
                end: span.token_end,
                len,
            });
        }
        if i > 0 && span.token_start < prev_end {
            return Err(DecorrError::OverlappingSpans { caption_id });
        }
        prev_end = span.token_end;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionRecord {
    pub caption_id: CaptionId,
    pub image_id: ImageId,
    pub text: String,
    pub tokens: Vec<String>,
    #[serde(default)]
    pub np_spans: Vec<NounPhraseSpan>,
}

impl CaptionRecord {
    pub fn new(caption_id: CaptionId, image_id: ImageId, text: impl Into<String>) -> Self {
        let text = text.into();
        let tokens = tokenize(&text);
        Self {
            caption_id,
            image_id,
            text,
            tokens,
            np_spans: Vec::new(),
        }
    }

    /// Attaches spans given as `(start, end, class)` triples after validation.
    pub fn with_spans(
        mut self,
        spans: impl IntoIterator<Item = (usize, usize, Option<ClassId>)>,
    ) -> Result<Self> {
        let spans = spans
            .into_iter()
            .map(|(s, e, c)| NounPhraseSpan::over(self.caption_id, &self.tokens, s, e, c))
            .collect::<Result<Vec<_>>>()?;
        check_spans(self.caption_id, self.tokens.len(), &spans)?;
        self.np_spans = spans;
        Ok(self)
    }

    pub fn normalized_text(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Lowercases, splits on Unicode whitespace and trims non-alphanumeric
/// characters from both ends of every token. Tokens that are pure
/// punctuation disappear.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let token = raw
                .trim_matches(|c: char| !c.is_alphanumeric())
                .to_lowercase();
            (!token.is_empty()).then_some(token)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl FromStr for Split {
    type Err = DecorrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "train" | "restval" => Ok(Split::Train),
            "val" | "valid" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(DecorrError::Validation(format!("unknown split `{other}`"))),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub image_id: ImageId,
    pub width: u32,
    pub height: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file_name: Option<String>,
    pub split: Split,
    pub objects: Vec<ObjectAnnotation>,
    #[serde(default)]
    pub caption_ids: Vec<CaptionId>,
}

impl ImageRecord {
    pub fn new(image_id: ImageId, width: u32, height: u32) -> Self {
        Self {
            image_id,
            width,
            height,
            file_name: None,
            split: Split::Train,
            objects: Vec::new(),
            caption_ids: Vec::new(),
        }
    }

    pub fn with_object(mut self, class_id: ClassId, bbox: BBox) -> Self {
        self.objects.push(ObjectAnnotation { bbox, class_id });
        self
    }

    /// Distinct classes present, ascending.
    pub fn classes(&self) -> Vec<ClassId> {
        let mut classes: Vec<ClassId> = self.objects.iter().map(|o| o.class_id).collect();
        classes.sort_unstable();
        classes.dedup();
        classes
    }

    pub fn area(&self) -> u64 {
        self.width as u64 * self.height as u64
    }
}

/// Annotations, captions and chunk spans for one dataset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetBundle {
    pub vocabulary: ClassVocabulary,
    pub images: BTreeMap<ImageId, ImageRecord>,
    pub captions: BTreeMap<CaptionId, CaptionRecord>,
}

impl DatasetBundle {
    pub fn new(vocabulary: ClassVocabulary) -> Self {
        Self {
            vocabulary,
            images: BTreeMap::new(),
            captions: BTreeMap::new(),
        }
    }

    pub fn insert_image(&mut self, image: ImageRecord) {
        self.images.insert(image.image_id, image);
    }

    /// Inserts a caption and links it to its image.
    pub fn insert_caption(&mut self, caption: CaptionRecord) -> Result<()> {
        let image = self
            .images
            .get_mut(&caption.image_id)
            .ok_or(DecorrError::DanglingImage {
                caption_id: caption.caption_id,
                image_id: caption.image_id,
            })?;
        if self.captions.contains_key(&caption.caption_id) {
            return Err(DecorrError::Validation(format!(
                "duplicate caption id {}",
                caption.caption_id
            )));
        }
        if let Err(pos) = image.caption_ids.binary_search(&caption.caption_id) {
            image.caption_ids.insert(pos, caption.caption_id);
        }
        self.captions.insert(caption.caption_id, caption);
        Ok(())
    }

    /// Captions of an image, ascending caption id.
    pub fn captions_of(&self, image_id: ImageId) -> impl Iterator<Item = &CaptionRecord> {
        self.images
            .get(&image_id)
            .into_iter()
            .flat_map(|img| img.caption_ids.iter())
            .filter_map(|id| self.captions.get(id))
    }

    /// Merges another bundle over the same vocabulary.
    pub fn merge(&mut self, other: DatasetBundle) -> Result<()> {
        if other.vocabulary != self.vocabulary {
            return Err(DecorrError::Validation(
                "cannot merge bundles with different vocabularies".into(),
            ));
        }
        for (id, image) in other.images {
            if self.images.insert(id, image).is_some() {
                return Err(DecorrError::Validation(format!("duplicate image id {id}")));
            }
        }
        for (_, caption) in other.captions {
            self.insert_caption(caption)?;
        }
        Ok(())
    }

    /// Full structural validation. Hard violations are returned as errors;
    /// soft ones (images without captions, empty captions) land in `report`.
    pub fn validate(&self, report: &mut ValidationReport) -> Result<()> {
        for image in self.images.values() {
            if image.width == 0 || image.height == 0 {
                return Err(DecorrError::Validation(format!(
                    "image {} has zero size",
                    image.image_id
                )));
            }
            for object in &image.objects {
                if !self.vocabulary.contains(object.class_id) {
                    return Err(DecorrError::UnknownClassId(object.class_id.index()));
                }
                if !object.bbox.fits_in(image.width, image.height) {
                    return Err(DecorrError::Validation(format!(
                        "image {} has box {:?} outside its bounds",
                        image.image_id,
                        object.bbox.as_array()
                    )));
                }
            }
            for cid in &image.caption_ids {
                match self.captions.get(cid) {
                    Some(c) if c.image_id == image.image_id => {}
                    _ => return Err(DecorrError::UnknownCaption(*cid)),
                }
            }
            if image.caption_ids.is_empty() {
                report.warn(
                    "image_without_caption",
                    image.image_id.to_string(),
                    "image has no captions",
                );
            }
        }
        for caption in self.captions.values() {
            if !self.images.contains_key(&caption.image_id) {
                return Err(DecorrError::DanglingImage {
                    caption_id: caption.caption_id,
                    image_id: caption.image_id,
                });
            }
            check_spans(caption.caption_id, caption.tokens.len(), &caption.np_spans)?;
            for span in &caption.np_spans {
                if span.surface_text != caption.tokens[span.token_start..span.token_end].join(" ") {
                    return Err(DecorrError::Validation(format!(
                        "caption {} span surface text is stale",
                        caption.caption_id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| DecorrError::parse("bundle", e))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| DecorrError::parse("bundle", e))
    }
}

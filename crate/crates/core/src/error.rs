use std::path::PathBuf;

use thiserror::Error;

/// Every failure the toolkit can surface.
#[derive(Debug, Error)]
pub enum DecorrError {
    #[error("failed to parse {context}: {message}")]
    Parse { context: String, message: String },

    #[error("bbox {bbox:?} of annotation {annotation_id} exceeds image {image_id} ({width}x{height}) by more than 1 px")]
    Bounds {
        annotation_id: u64,
        image_id: u64,
        bbox: [f64; 4],
        width: u32,
        height: u32,
    },

    #[error("invalid bbox {bbox:?} on annotation {annotation_id}: {reason}")]
    InvalidBox {
        annotation_id: u64,
        bbox: [f64; 4],
        reason: &'static str,
    },

    #[error("class `{0}` is not in the vocabulary")]
    UnknownClass(String),

    #[error("class id {0} is out of range for the vocabulary")]
    UnknownClassId(usize),

    #[error("caption {caption_id} references unknown image {image_id}")]
    DanglingImage { caption_id: u64, image_id: u64 },

    #[error("unknown caption {0}")]
    UnknownCaption(u64),

    #[error("span [{start}, {end}) is out of range for caption {caption_id} with {len} tokens")]
    SpanOutOfRange {
        caption_id: u64,
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("spans of caption {caption_id} overlap or are unsorted")]
    OverlappingSpans { caption_id: u64 },

    #[error("match table is empty")]
    EmptyTable,

    #[error("span `{0}` carries no class annotation")]
    MissingAnnotation(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("overlap denominator mask is empty")]
    EmptyDenominator,

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (u32, u32),
        actual: (u32, u32),
    },

    #[error("vector {0} has zero norm")]
    ZeroNorm(String),

    #[error("embedding dimensions differ: {0} vs {1}")]
    DimMismatch(usize, usize),

    #[error("query {0} has no relevant items")]
    EmptyRelevantSet(String),

    #[error("gallery is empty")]
    EmptyGallery,

    #[error("prompt set is empty")]
    EmptyPromptSet,

    #[error("sampling ratio {0} is outside (0, 1]")]
    RatioOutOfRange(f64),

    #[error("id `{0}` does not resolve")]
    UnresolvedId(String),

    #[error("invalid value: {0}")]
    Validation(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error on {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

impl DecorrError {
    pub(crate) fn parse(context: impl Into<String>, message: impl ToString) -> Self {
        DecorrError::Parse {
            context: context.into(),
            message: message.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DecorrError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error: 2 parse, 3 bounds/validation,
    /// 4 I/O, 5 precondition.
    pub fn exit_code(&self) -> i32 {
        use DecorrError::*;
        match self {
            Parse { .. } | EmptyTable => 2,
            Bounds { .. }
            | InvalidBox { .. }
            | UnknownClass(_)
            | UnknownClassId(_)
            | DanglingImage { .. }
            | UnknownCaption(_)
            | SpanOutOfRange { .. }
            | OverlappingSpans { .. }
            | MissingAnnotation(_)
            | DimensionMismatch { .. }
            | ZeroNorm(_)
            | DimMismatch(..)
            | UnresolvedId(_)
            | Validation(_)
            | Config(_) => 3,
            Io { .. } | Image { .. } => 4,
            PreconditionViolated(_)
            | EmptyDenominator
            | EmptyRelevantSet(_)
            | EmptyGallery
            | EmptyPromptSet
            | RatioOutOfRange(_) => 5,
        }
    }
}

pub type Result<T, E = DecorrError> = std::result::Result<T, E>;

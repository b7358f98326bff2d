//! Object-decorrelation toolkit for image-text datasets.
//!
//! * [`dataset`] loads COCO-style annotations, captions and noun-phrase chunks.
//! * [`matching`] decides which classes a noun phrase mentions.
//! * [`planner`] computes object-removal plans, masks and simple fills.
//! * [`captions`] builds synthetic captions for removal plans.
//! * [`metrics`] evaluates retrieval with R@k, mAP@k and ODmAP@k.
//! * [`sampling`] draws seeded subsets of synthetic pairs.

pub mod captions;
pub mod dataset;
pub mod error;
pub mod io;
pub mod matching;
pub mod metrics;
pub mod planner;
pub mod sampling;

pub use captions::{
    assemble_pairs, remove_matched_nps, CaptionContext, CaptionMethod, CaptionOptions, PromptSet,
    SyntheticPair,
};
pub use dataset::{
    BBox, CaptionId, CaptionRecord, ClassId, ClassVocabulary, DatasetBundle, ImageId, ImageRecord,
    NounPhraseSpan, ObjectAnnotation, Split, ValidationReport,
};
pub use error::{DecorrError, Result};
pub use matching::{caption_class_set, match_class_np, MatchMode, MatchTable};
pub use metrics::{
    ap_at_k, build_gallery, cooccurrence_stats, cosine_sim, od_relevance, odmap_at_k, rank,
    recall_at_k, ApNorm, EmbeddingSet, EvalConfig, GalleryMeta, MetricReport, QueryMeta,
    RelevanceMode, SimilarityMatrix,
};
pub use planner::{
    apply_fill, export_masks, overlap_ratio, plan_all, plan_for_class, union_mask, FillMode,
    MaskFormat, MaskRaster, PlanConfig, PlanKind, PlanRecord, RemovalPlan,
};

//! Retrieval evaluation: cosine scoring, ranking, R@k, mAP@k and ODmAP@k,
//! plus gallery construction and class co-occurrence statistics.

pub mod binfmt;
pub mod cooccur;
pub mod gallery;
pub mod odmap;
pub mod ranking;
pub mod similarity;

pub use binfmt::{read_embd, read_simm, write_embd, write_simm};
pub use cooccur::{cooccurrence_stats, CooccurrenceStats};
pub use gallery::{build_gallery, GalleryMeta};
pub use odmap::{
    od_relevance, odmap_at_k, EvalConfig, MetricReport, PerQueryAp, QueryMeta, RelevanceMode,
};
pub use ranking::{ap_at_k, recall_at_k, ApNorm};
pub use similarity::{cosine_sim, rank, top_k};

use crate::error::{DecorrError, Result};

/// Row-major vectors with one id per row.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    ids: Vec<String>,
    dim: usize,
    values: Vec<f32>,
}

impl EmbeddingSet {
    pub fn new(ids: Vec<String>, dim: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != ids.len() * dim {
            return Err(DecorrError::Validation(format!(
                "embedding set holds {} values, expected {} x {}",
                values.len(),
                ids.len(),
                dim
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(DecorrError::Validation(format!(
                "embedding `{}` has a non-finite component",
                ids[pos / dim]
            )));
        }
        Ok(Self { ids, dim, values })
    }

    pub fn count(&self) -> usize {
        self.ids.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }
}

/// Query x gallery score matrix, row-major by query.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    query_ids: Vec<String>,
    gallery_ids: Vec<String>,
    scores: Vec<f32>,
}

impl SimilarityMatrix {
    pub fn new(query_ids: Vec<String>, gallery_ids: Vec<String>, scores: Vec<f32>) -> Result<Self> {
        if scores.len() != query_ids.len() * gallery_ids.len() {
            return Err(DecorrError::Validation(format!(
                "similarity matrix holds {} scores, expected {} x {}",
                scores.len(),
                query_ids.len(),
                gallery_ids.len()
            )));
        }
        if let Some(pos) = scores.iter().position(|v| v.is_nan()) {
            let ng = gallery_ids.len();
            return Err(DecorrError::Validation(format!(
                "similarity of query `{}` and gallery item `{}` is NaN",
                query_ids[pos / ng],
                gallery_ids[pos % ng]
            )));
        }
        Ok(Self {
            query_ids,
            gallery_ids,
            scores,
        })
    }

    pub fn n_queries(&self) -> usize {
        self.query_ids.len()
    }

    pub fn n_gallery(&self) -> usize {
        self.gallery_ids.len()
    }

    pub fn query_ids(&self) -> &[String] {
        &self.query_ids
    }

    pub fn gallery_ids(&self) -> &[String] {
        &self.gallery_ids
    }

    pub fn scores(&self) -> &[f32] {
        &self.scores
    }

    pub fn row(&self, q: usize) -> &[f32] {
        let ng = self.n_gallery();
        &self.scores[q * ng..(q + 1) * ng]
    }

    /// Applies `f` to every score, keeping ids.
    pub fn map_scores(&self, f: impl Fn(f32) -> f32) -> Result<Self> {
        Self::new(
            self.query_ids.clone(),
            self.gallery_ids.clone(),
            self.scores.iter().map(|&s| f(s)).collect(),
        )
    }
}

/// Accepts ids written either as JSON strings or as non-negative integers.
pub(crate) mod flexible_id {
    use serde::{Deserialize, Deserializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Text(String),
        Int(u64),
    }

    impl From<Repr> for String {
        fn from(r: Repr) -> String {
            match r {
                Repr::Text(s) => s,
                Repr::Int(n) => n.to_string(),
            }
        }
    }

    pub fn one<'de, D: Deserializer<'de>>(d: D) -> Result<String, D::Error> {
        Repr::deserialize(d).map(String::from)
    }

    pub fn many<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<String>>, D::Error> {
        let ids: Option<Vec<Repr>> = Option::deserialize(d)?;
        Ok(ids.map(|v| v.into_iter().map(String::from).collect()))
    }
}

//! Object-decorrelation relevance and the ODmAP@k report.
//!
//! A retrieved caption is relevant to a synthetic query when it mentions
//! none of the removed classes and mentions the kept classes (all of them
//! under [`RelevanceMode::Strict`], at least one under
//! [`RelevanceMode::Lenient`]).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gallery::GalleryMeta;
use super::ranking::{ap_at_k, ApNorm};
use super::similarity::top_k;
use super::SimilarityMatrix;
use crate::dataset::ClassId;
use crate::error::{DecorrError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelevanceMode {
    /// Every kept class must be mentioned.
    #[default]
    Strict,
    /// At least one kept class must be mentioned.
    Lenient,
}

impl fmt::Display for RelevanceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RelevanceMode::Strict => "strict",
            RelevanceMode::Lenient => "lenient",
        })
    }
}

impl FromStr for RelevanceMode {
    type Err = DecorrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "strict" => Ok(RelevanceMode::Strict),
            "lenient" => Ok(RelevanceMode::Lenient),
            other => Err(DecorrError::Config(format!(
                "unknown relevance mode `{other}`"
            ))),
        }
    }
}

/// Evaluation-side view of a synthetic pair.
///
/// Lines of a pairs file deserialize directly: `pair_id` is accepted for
/// `query_id` and unrelated fields are ignored. `relevant_ids`, when given
/// for every query, enables the conventional R@k and mAP@k.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryMeta {
    #[serde(alias = "pair_id", deserialize_with = "super::flexible_id::one")]
    pub query_id: String,
    pub removed_classes: BTreeSet<ClassId>,
    pub kept_classes: BTreeSet<ClassId>,
    #[serde(
        default,
        deserialize_with = "super::flexible_id::many",
        skip_serializing_if = "Option::is_none"
    )]
    pub relevant_ids: Option<Vec<String>>,
}

impl QueryMeta {
    pub fn new(
        query_id: impl Into<String>,
        removed: impl IntoIterator<Item = ClassId>,
        kept: impl IntoIterator<Item = ClassId>,
    ) -> Self {
        Self {
            query_id: query_id.into(),
            removed_classes: removed.into_iter().collect(),
            kept_classes: kept.into_iter().collect(),
            relevant_ids: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kept_classes.is_empty() {
            return Err(DecorrError::Validation(format!(
                "query `{}` keeps no class",
                self.query_id
            )));
        }
        if !self.kept_classes.is_disjoint(&self.removed_classes) {
            return Err(DecorrError::Validation(format!(
                "query `{}` both keeps and removes a class",
                self.query_id
            )));
        }
        Ok(())
    }
}

/// Whether a gallery caption counts as a correct retrieval for `query`.
pub fn od_relevance(query: &QueryMeta, item: &GalleryMeta, mode: RelevanceMode) -> bool {
    let mentions_no_removed = item.class_set.is_disjoint(&query.removed_classes);
    let mentions_kept = match mode {
        RelevanceMode::Strict => query.kept_classes.is_subset(&item.class_set),
        RelevanceMode::Lenient => !query.kept_classes.is_disjoint(&item.class_set),
    };
    mentions_no_removed && mentions_kept
}

/// Settings echoed into every report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub k_list: Vec<usize>,
    pub relevance_mode: RelevanceMode,
    pub ap_norm: ApNorm,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            k_list: vec![1, 5, 10],
            relevance_mode: RelevanceMode::Strict,
            ap_norm: ApNorm::ByK,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_list.is_empty() {
            return Err(DecorrError::Config("k_list is empty".into()));
        }
        if self.k_list.contains(&0) {
            return Err(DecorrError::Config("every k must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerQueryAp {
    pub query_id: String,
    pub odmap: BTreeMap<usize, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub map: BTreeMap<usize, f64>,
}

/// Metric values keyed by cutoff `k`.
///
/// `recall` and `map` are empty unless every query carried `relevant_ids`.
/// `settings` holds caller-supplied run settings echoed verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub config: EvalConfig,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub settings: BTreeMap<String, serde_json::Value>,
    pub n_queries: usize,
    pub n_gallery: usize,
    pub recall: BTreeMap<usize, f64>,
    pub map: BTreeMap<usize, f64>,
    pub odmap: BTreeMap<usize, f64>,
    pub per_query: Vec<PerQueryAp>,
}

impl MetricReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    /// `metric,k,value` rows: R@k, then mAP@k, then ODmAP@k.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,k,value\n");
        for (name, values) in [
            ("R", &self.recall),
            ("mAP", &self.map),
            ("ODmAP", &self.odmap),
        ] {
            for (k, v) in values {
                writeln!(out, "{name}@{k},{k},{v}").unwrap();
            }
        }
        out
    }
}

fn index_by_id<'a, T>(
    items: &'a [T],
    id: impl Fn(&T) -> &str,
    what: &str,
) -> Result<HashMap<&'a str, &'a T>> {
    let mut map = HashMap::with_capacity(items.len());
    for item in items {
        if map.insert(id(item), item).is_some() {
            return Err(DecorrError::Validation(format!(
                "duplicate {what} id `{}`",
                id(item)
            )));
        }
    }
    Ok(map)
}

fn mean(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    values.sum::<f64>() / n as f64
}

/// Computes ODmAP@k for every configured `k`, plus R@k and mAP@k when the
/// queries carry ground-truth `relevant_ids`.
///
/// Rows and columns of `sim` are matched to metadata by id.
pub fn odmap_at_k(
    sim: &SimilarityMatrix,
    queries: &[QueryMeta],
    gallery: &[GalleryMeta],
    config: &EvalConfig,
) -> Result<MetricReport> {
    config.validate()?;
    if sim.n_gallery() == 0 {
        return Err(DecorrError::EmptyGallery);
    }
    if sim.n_queries() == 0 {
        return Err(DecorrError::Validation(
            "similarity matrix has no queries".into(),
        ));
    }

    let query_by_id = index_by_id(queries, |q| q.query_id.as_str(), "query")?;
    let gallery_by_id = index_by_id(gallery, |g| g.gallery_id.as_str(), "gallery")?;
    let rows: Vec<&QueryMeta> = sim
        .query_ids()
        .iter()
        .map(|id| {
            query_by_id
                .get(id.as_str())
                .copied()
                .ok_or_else(|| DecorrError::UnresolvedId(id.clone()))
        })
        .collect::<Result<_>>()?;
    let columns: Vec<&GalleryMeta> = sim
        .gallery_ids()
        .iter()
        .map(|id| {
            gallery_by_id
                .get(id.as_str())
                .copied()
                .ok_or_else(|| DecorrError::UnresolvedId(id.clone()))
        })
        .collect::<Result<_>>()?;
    for q in &rows {
        q.validate()?;
    }

    let relevant = resolve_relevant(sim, &rows)?;
    let k_values: BTreeSet<usize> = config.k_list.iter().copied().collect();
    let k_max = *k_values.last().expect("k_list validated non-empty");
    let tops = top_k(sim, k_max);

    struct Row {
        odmap: BTreeMap<usize, f64>,
        map: BTreeMap<usize, f64>,
        hit: BTreeMap<usize, bool>,
    }

    let per_row: Vec<Row> = rows
        .par_iter()
        .zip(tops.par_iter())
        .enumerate()
        .map(|(qi, (query, top))| {
            let od_flags: Vec<bool> = top
                .iter()
                .map(|&g| od_relevance(query, columns[g as usize], config.relevance_mode))
                .collect();
            let gt_flags: Option<Vec<bool>> = relevant
                .as_ref()
                .map(|rel| top.iter().map(|g| rel[qi].contains(g)).collect());
            let mut row = Row {
                odmap: BTreeMap::new(),
                map: BTreeMap::new(),
                hit: BTreeMap::new(),
            };
            for &k in &k_values {
                let n = k.min(top.len());
                row.odmap
                    .insert(k, ap_at_k(&od_flags[..n], k, config.ap_norm));
                if let Some(flags) = &gt_flags {
                    row.map.insert(k, ap_at_k(&flags[..n], k, config.ap_norm));
                    row.hit.insert(k, flags[..n].iter().any(|&f| f));
                }
            }
            row
        })
        .collect();

    let nq = rows.len();
    let mut report = MetricReport {
        config: config.clone(),
        settings: BTreeMap::new(),
        n_queries: nq,
        n_gallery: sim.n_gallery(),
        recall: BTreeMap::new(),
        map: BTreeMap::new(),
        odmap: BTreeMap::new(),
        per_query: Vec::with_capacity(nq),
    };
    for &k in &k_values {
        report
            .odmap
            .insert(k, mean(per_row.iter().map(|r| r.odmap[&k]), nq));
        if relevant.is_some() {
            report
                .map
                .insert(k, mean(per_row.iter().map(|r| r.map[&k]), nq));
            let hits = per_row.iter().filter(|r| r.hit[&k]).count();
            report.recall.insert(k, hits as f64 / nq as f64);
        }
    }
    report.per_query = rows
        .iter()
        .zip(per_row)
        .map(|(q, r)| PerQueryAp {
            query_id: q.query_id.clone(),
            odmap: r.odmap,
            map: r.map,
        })
        .collect();
    Ok(report)
}

/// Gallery indices of each query's ground truth, or `None` when no query
/// provides one. Partial coverage is an error.
fn resolve_relevant(
    sim: &SimilarityMatrix,
    rows: &[&QueryMeta],
) -> Result<Option<Vec<BTreeSet<u32>>>> {
    if rows.iter().all(|q| q.relevant_ids.is_none()) {
        return Ok(None);
    }
    let column: HashMap<&str, u32> = sim
        .gallery_ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i as u32))
        .collect();
    rows.iter()
        .map(|q| {
            let ids = q
                .relevant_ids
                .as_ref()
                .filter(|ids| !ids.is_empty())
                .ok_or_else(|| DecorrError::EmptyRelevantSet(q.query_id.clone()))?;
            ids.iter()
                .map(|id| {
                    column
                        .get(id.as_str())
                        .copied()
                        .ok_or_else(|| DecorrError::UnresolvedId(id.clone()))
                })
                .collect()
        })
        .collect::<Result<_>>()
        .map(Some)
}

//! Recall@k and average precision over ranked relevance flags.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{DecorrError, Result};

/// Denominator used by [`ap_at_k`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApNorm {
    /// Divide by the cutoff `k`.
    #[default]
    ByK,
    /// Divide by the number of relevant items retrieved, at least one.
    ByHits,
}

impl fmt::Display for ApNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ApNorm::ByK => "by_k",
            ApNorm::ByHits => "by_hits",
        })
    }
}

impl FromStr for ApNorm {
    type Err = DecorrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "by_k" | "byk" => Ok(ApNorm::ByK),
            "by_hits" | "byhits" => Ok(ApNorm::ByHits),
            other => Err(DecorrError::Config(format!(
                "unknown AP normalization `{other}`"
            ))),
        }
    }
}

/// Average precision of the top-`k` relevance flags.
///
/// The numerator is `sum_i rel(i) * P(i)` with `P(i)` the precision of the
/// first `i` items; `flags` holds `min(k, gallery size)` entries.
pub fn ap_at_k(flags: &[bool], k: usize, norm: ApNorm) -> f64 {
    debug_assert!(k >= 1 && flags.len() <= k);
    let mut hits = 0usize;
    let mut numerator = 0.0;
    for (i, &rel) in flags.iter().enumerate() {
        if rel {
            hits += 1;
            numerator += hits as f64 / (i + 1) as f64;
        }
    }
    let denominator = match norm {
        ApNorm::ByK => k,
        ApNorm::ByHits => hits.max(1),
    };
    numerator / denominator as f64
}

/// Fraction of queries with at least one relevant item in their top `k`.
///
/// `rankings[q]` lists gallery indices best-first; `relevant[q]` holds the
/// relevant gallery indices of query `q`.
pub fn recall_at_k(rankings: &[Vec<u32>], relevant: &[BTreeSet<u32>], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(DecorrError::Config("k must be at least 1".into()));
    }
    if rankings.len() != relevant.len() {
        return Err(DecorrError::Validation(format!(
            "{} rankings but {} relevance sets",
            rankings.len(),
            relevant.len()
        )));
    }
    if rankings.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0usize;
    for (q, (ranked, rel)) in rankings.iter().zip(relevant).enumerate() {
        if rel.is_empty() {
            return Err(DecorrError::EmptyRelevantSet(format!("#{q}")));
        }
        if ranked.iter().take(k).any(|g| rel.contains(g)) {
            hits += 1;
        }
    }
    Ok(hits as f64 / rankings.len() as f64)
}

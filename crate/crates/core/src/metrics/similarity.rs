//! Exhaustive cosine scoring and deterministic ranking.

use std::cmp::Ordering;

use rayon::prelude::*;

use super::{EmbeddingSet, SimilarityMatrix};
use crate::error::{DecorrError, Result};

fn norms(set: &EmbeddingSet) -> Result<Vec<f64>> {
    (0..set.count())
        .map(|i| {
            let n = set
                .row(i)
                .iter()
                .map(|&v| v as f64 * v as f64)
                .sum::<f64>()
                .sqrt();
            if n == 0.0 {
                Err(DecorrError::ZeroNorm(set.ids()[i].clone()))
            } else {
                Ok(n)
            }
        })
        .collect()
}

/// `s[i][j] = <q_i, g_j> / (|q_i| |g_j|)`, accumulated in f64.
pub fn cosine_sim(queries: &EmbeddingSet, gallery: &EmbeddingSet) -> Result<SimilarityMatrix> {
    if queries.dim() != gallery.dim() {
        return Err(DecorrError::DimMismatch(queries.dim(), gallery.dim()));
    }
    let qn = norms(queries)?;
    let gn = norms(gallery)?;
    let ng = gallery.count();
    let mut scores = vec![0f32; queries.count() * ng];
    if ng > 0 {
        scores.par_chunks_mut(ng).enumerate().for_each(|(i, row)| {
            let q = queries.row(i);
            for (j, out) in row.iter_mut().enumerate() {
                let dot: f64 = q
                    .iter()
                    .zip(gallery.row(j))
                    .map(|(&a, &b)| a as f64 * b as f64)
                    .sum();
                *out = (dot / (qn[i] * gn[j])) as f32;
            }
        });
    }
    SimilarityMatrix::new(queries.ids().to_vec(), gallery.ids().to_vec(), scores)
}

fn by_score_then_index(row: &[f32]) -> impl Fn(&u32, &u32) -> Ordering + '_ {
    move |&a, &b| {
        row[b as usize]
            .partial_cmp(&row[a as usize])
            .expect("scores are never NaN")
            .then(a.cmp(&b))
    }
}

/// Full per-query orderings: descending score, ties by ascending gallery index.
pub fn rank(sim: &SimilarityMatrix) -> Vec<Vec<u32>> {
    top_k(sim, sim.n_gallery())
}

/// The first `min(k, n_gallery)` entries of [`rank`] for each query.
pub fn top_k(sim: &SimilarityMatrix, k: usize) -> Vec<Vec<u32>> {
    let ng = sim.n_gallery();
    let k = k.min(ng);
    (0..sim.n_queries())
        .into_par_iter()
        .map(|q| {
            let row = sim.row(q);
            let cmp = by_score_then_index(row);
            let mut idx: Vec<u32> = (0..ng as u32).collect();
            if k < ng && k > 0 {
                idx.select_nth_unstable_by(k - 1, &cmp);
                idx.truncate(k);
            }
            idx.sort_unstable_by(&cmp);
            idx.truncate(k);
            idx
        })
        .collect()
}

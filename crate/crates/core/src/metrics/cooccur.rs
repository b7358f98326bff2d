//! Image-level class co-occurrence counts and smoothed lift.

use serde::{Deserialize, Serialize};

use crate::dataset::DatasetBundle;

/// `counts[a][b]` is the number of images containing both `a` and `b`;
/// the diagonal counts images containing `a`.
///
/// `lift[a][b] = P(a,b) / (P(a) P(b))` with one added to every count and to
/// the image total, so absent classes get a finite baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CooccurrenceStats {
    pub classes: Vec<String>,
    pub n_images: u64,
    pub counts: Vec<Vec<u64>>,
    pub lift: Vec<Vec<f64>>,
}

pub fn cooccurrence_stats(bundle: &DatasetBundle) -> CooccurrenceStats {
    let n = bundle.vocabulary.len();
    let mut counts = vec![vec![0u64; n]; n];
    for image in bundle.images.values() {
        let present = image.classes();
        for &a in &present {
            for &b in &present {
                counts[a.index()][b.index()] += 1;
            }
        }
    }
    let total = bundle.images.len() as f64 + 1.0;
    let lift = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    let joint = counts[a][b] as f64 + 1.0;
                    let pa = counts[a][a] as f64 + 1.0;
                    let pb = counts[b][b] as f64 + 1.0;
                    joint * total / (pa * pb)
                })
                .collect()
        })
        .collect();
    CooccurrenceStats {
        classes: bundle.vocabulary.names().to_vec(),
        n_images: bundle.images.len() as u64,
        counts,
        lift,
    }
}

//! Seeded synthetic inputs shared by the benchmarks.

use std::collections::BTreeSet;

use decorr_core::{
    BBox, ClassId, ClassVocabulary, DatasetBundle, EmbeddingSet, GalleryMeta, ImageRecord,
    QueryMeta, SimilarityMatrix, Split,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A bundle of `n_images` images of `width x height` pixels, each holding
/// 2 to 6 classes with 1 to 4 boxes per class.
pub fn synthetic_bundle(n_images: u64, width: u32, height: u32, seed: u64) -> DatasetBundle {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bundle = DatasetBundle::new(ClassVocabulary::mscoco());
    for id in 0..n_images {
        let mut image = ImageRecord::new(id, width, height);
        let n_classes = rng.random_range(2..=6u32);
        for c in 0..n_classes {
            for _ in 0..rng.random_range(1..=4) {
                let w = rng.random_range(1.0..width as f64 * 0.6);
                let h = rng.random_range(1.0..height as f64 * 0.6);
                let x = rng.random_range(0.0..width as f64 - w);
                let y = rng.random_range(0.0..height as f64 - h);
                image = image.with_object(ClassId(c * 7), BBox::new(x, y, w, h));
            }
        }
        bundle.insert_image(image);
    }
    bundle
}

/// `count` random unit-scale embeddings of dimension `dim`.
pub fn synthetic_embeddings(prefix: &str, count: usize, dim: usize, seed: u64) -> EmbeddingSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..count * dim)
        .map(|_| rng.random_range(-1.0f32..1.0))
        .collect();
    let ids = (0..count).map(|i| format!("{prefix}{i}")).collect();
    EmbeddingSet::new(ids, dim, values).expect("shape is consistent")
}

/// A retrieval problem over `n_classes` classes: random scores, queries
/// removing one class and keeping another, and gallery class sets.
pub fn synthetic_retrieval(
    n_queries: usize,
    n_gallery: usize,
    n_classes: u32,
    seed: u64,
) -> (SimilarityMatrix, Vec<QueryMeta>, Vec<GalleryMeta>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let queries: Vec<QueryMeta> = (0..n_queries)
        .map(|i| {
            let removed = rng.random_range(0..n_classes);
            let kept = (removed + rng.random_range(1..n_classes)) % n_classes;
            QueryMeta::new(format!("q{i}"), [ClassId(removed)], [ClassId(kept)])
        })
        .collect();
    let gallery: Vec<GalleryMeta> = (0..n_gallery)
        .map(|j| GalleryMeta {
            gallery_id: format!("g{j}"),
            class_set: (0..n_classes)
                .filter(|_| rng.random_bool(0.2))
                .map(ClassId)
                .collect::<BTreeSet<_>>(),
            split: Split::Test,
        })
        .collect();
    let scores = (0..n_queries * n_gallery)
        .map(|_| rng.random_range(-1.0f32..1.0))
        .collect();
    let sim = SimilarityMatrix::new(
        queries.iter().map(|q| q.query_id.clone()).collect(),
        gallery.iter().map(|g| g.gallery_id.clone()).collect(),
        scores,
    )
    .expect("shape is consistent");
    (sim, queries, gallery)
}

//! Acceptance suite: one pass/fail line per criterion.
//!
//! Runs without the libtest harness so every line is printed whether or not
//! output capture is on. Exits non-zero if any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use common::{image_with, oracle_plans, random_image, Grid};
use decorr_cli::args::EvalArgs;
use decorr_cli::commands::{cmd_eval, REPORT_JSON};
use decorr_cli::RunConfig;
use decorr_core::metrics::top_k;
use decorr_core::planner::export::read_mask;
use decorr_core::planner::ExportOptions;
use decorr_core::{
    ap_at_k, apply_fill, caption_class_set, export_masks, odmap_at_k, overlap_ratio, plan_all,
    plan_for_class, recall_at_k, remove_matched_nps, union_mask, ApNorm, BBox, CaptionRecord,
    ClassId, ClassVocabulary, DatasetBundle, EvalConfig, FillMode, GalleryMeta, ImageRecord,
    MaskFormat, MaskRaster, MatchMode, MatchTable, MetricReport, PlanConfig, PlanKind, QueryMeta,
    RelevanceMode, RemovalPlan, SimilarityMatrix, Split,
};
use image::{Rgb, RgbImage};
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = std::result::Result<String, String>;

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn mask_to_grid(mask: &MaskRaster) -> Grid {
    (0..mask.height())
        .map(|y| (0..mask.width()).map(|x| mask.get(x, y)).collect())
        .collect()
}

fn prop_runner(cases: u32) -> TestRunner {
    TestRunner::new(PropConfig {
        cases,
        failure_persistence: None,
        ..PropConfig::default()
    })
}

fn prop_result(
    name: &str,
    r: std::result::Result<(), proptest::test_runner::TestError<impl std::fmt::Debug>>,
) {
    if let Err(e) = r {
        panic!("{name}: {e}");
    }
}

// ---------------------------------------------------------------- criterion 1

fn planner_matches_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_501);
    let cfg = PlanConfig::default();
    let mut counts = BTreeMap::<&str, usize>::new();
    for id in 0..1000u64 {
        let image = random_image(&mut rng, id);
        let expected = oracle_plans(&image, cfg.alpha1, cfg.alpha2, cfg.alpha3, false);
        for (&trigger, want) in &expected {
            let got = plan_for_class(&image, trigger, &cfg).map_err(|e| e.to_string())?;
            match (want, &got) {
                (None, None) => *counts.entry("none").or_default() += 1,
                (Some(w), Some(g)) => {
                    let label = match w.kind {
                        PlanKind::SingleClass => "single",
                        PlanKind::MultiClass => "multi",
                    };
                    *counts.entry(label).or_default() += 1;
                    if g.kind != w.kind
                        || g.removed_classes != w.removed
                        || g.kept_classes != w.kept
                        || mask_to_grid(&g.mask) != w.mask
                    {
                        return Err(format!(
                            "image {id} trigger {trigger}: planner {:?} {:?}, oracle {:?} {:?}",
                            g.kind, g.removed_classes, w.kind, w.removed
                        ));
                    }
                }
                _ => {
                    return Err(format!(
                        "image {id} trigger {trigger}: planner {}, oracle {}",
                        if got.is_some() { "plans" } else { "declines" },
                        if want.is_some() { "plans" } else { "declines" }
                    ))
                }
            }
        }
    }
    Ok(format!(
        "1000 images, {} single / {} multi / {} declined, {:.1}s",
        counts.get("single").unwrap_or(&0),
        counts.get("multi").unwrap_or(&0),
        counts.get("none").unwrap_or(&0),
        start.elapsed().as_secs_f64()
    ))
}

// ---------------------------------------------------------------- criterion 2

fn outcome_of(image: &ImageRecord, trigger: u32) -> Option<PlanKind> {
    plan_for_class(image, ClassId(trigger), &PlanConfig::default())
        .unwrap()
        .map(|p| p.kind)
}

fn threshold_boundaries() -> Outcome {
    // 100x100 images. Class 1 is a 100x1 strip; the trigger (class 0) covers
    // the first `n` pixels of it, giving an overlap ratio of exactly n/100.
    // Class 2 sits apart so a multi-class plan always keeps something.
    let mut lines = Vec::new();
    let overlap_cases = [
        (39, Some(PlanKind::SingleClass)),
        (40, None),
        (41, None),
        (79, None),
        (80, None),
        (81, Some(PlanKind::MultiClass)),
    ];
    for (n, want) in overlap_cases {
        let image = image_with(
            1,
            100,
            100,
            &[
                (0, [0.0, 0.0, n as f64, 1.0]),
                (1, [0.0, 0.0, 100.0, 1.0]),
                (2, [90.0, 90.0, 10.0, 10.0]),
            ],
        );
        let mask = |c| union_mask(&image.objects, &BTreeSet::from([ClassId(c)]), 100, 100);
        let ratio = overlap_ratio(&mask(0), &mask(1)).unwrap();
        assert_eq!(ratio, n as f64 / 100.0, "overlap ratio for n = {n}");
        let got = outcome_of(&image, 0);
        assert_eq!(got, want, "overlap ratio {ratio}");
        lines.push(format!("{ratio:.2}->{}", short(got)));
    }

    // The trigger covers `n` full rows; class 1 is disjoint from it.
    let size_cases = [(69, true), (70, true), (71, false)];
    for (n, plans) in size_cases {
        let image = image_with(
            2,
            100,
            100,
            &[
                (0, [0.0, 0.0, 100.0, n as f64]),
                (1, [0.0, 90.0, 10.0, 10.0]),
            ],
        );
        let mask = union_mask(&image.objects, &BTreeSet::from([ClassId(0)]), 100, 100);
        assert_eq!(mask.coverage(), n as f64 / 100.0);
        let got = outcome_of(&image, 0);
        assert_eq!(got.is_some(), plans, "size ratio {}", mask.coverage());
        lines.push(format!("size {:.2}->{}", mask.coverage(), short(got)));
    }
    Ok(lines.join(", "))
}

fn short(kind: Option<PlanKind>) -> &'static str {
    match kind {
        None => "none",
        Some(PlanKind::SingleClass) => "single",
        Some(PlanKind::MultiClass) => "multi",
    }
}

// ---------------------------------------------------------------- criterion 3

/// Average precision straight from its definition: the mean over the top-k
/// positions holding a relevant item of the precision at that position,
/// with the stated denominator. Rankings come from repeated arg-max.
fn brute_force_ap(scores: &[f32], relevant: &[bool], k: usize, norm: ApNorm) -> f64 {
    let mut taken = vec![false; scores.len()];
    let mut ranked = Vec::new();
    for _ in 0..k.min(scores.len()) {
        let mut best: Option<usize> = None;
        for j in 0..scores.len() {
            if taken[j] {
                continue;
            }
            best = match best {
                Some(b) if scores[b] >= scores[j] => Some(b),
                _ => Some(j),
            };
        }
        let b = best.unwrap();
        taken[b] = true;
        ranked.push(b);
    }
    let mut total = 0.0;
    let mut relevant_seen = 0;
    for pos in 1..=ranked.len() {
        if relevant[ranked[pos - 1]] {
            relevant_seen += 1;
            let hits_in_prefix = ranked[..pos].iter().filter(|&&j| relevant[j]).count();
            total += hits_in_prefix as f64 / pos as f64;
        }
    }
    let denom = match norm {
        ApNorm::ByK => k as f64,
        ApNorm::ByHits => relevant_seen.max(1) as f64,
    };
    total / denom
}

fn ap_matches_brute_force() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for norm in [ApNorm::ByK, ApNorm::ByHits] {
        for case in 0..500 {
            let n = rng.random_range(1..=40);
            let k = rng.random_range(1..=n + 5);
            // Coarse scores make ties common.
            let scores: Vec<f32> = (0..n)
                .map(|_| rng.random_range(0..20) as f32 / 20.0)
                .collect();
            let p = rng.random_range(0.0..1.0);
            let relevant: Vec<bool> = (0..n).map(|_| rng.random_bool(p)).collect();
            let sim = SimilarityMatrix::new(
                vec!["q".into()],
                (0..n).map(|j| j.to_string()).collect(),
                scores.clone(),
            )
            .unwrap();
            let ranking = &top_k(&sim, k)[0];
            let flags: Vec<bool> = ranking.iter().map(|&j| relevant[j as usize]).collect();
            let got = ap_at_k(&flags, k, norm);
            let want = brute_force_ap(&scores, &relevant, k, norm);
            let err = (got - want).abs();
            worst = worst.max(err);
            assert!(err <= 1e-12, "{norm} case {case}: {got} vs {want}");
        }
    }
    Ok(format!(
        "1000 cases (500 per norm), max |error| {worst:.1e}"
    ))
}

// ---------------------------------------------------------------- criterion 4

/// A random retrieval problem: similarity matrix, query and gallery
/// metadata, with ground-truth relevant ids on every query.
#[derive(Debug, Clone)]
struct Problem {
    scores: Vec<Vec<f32>>,
    queries: Vec<QueryMeta>,
    gallery: Vec<GalleryMeta>,
}

impl Problem {
    fn generate(seed: u64, distinct: bool) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_q = rng.random_range(1..=6);
        let n_g = rng.random_range(1..=25);
        let n_classes = 5u32;
        let random_set = |rng: &mut ChaCha8Rng| -> BTreeSet<ClassId> {
            (0..n_classes)
                .filter(|_| rng.random_bool(0.4))
                .map(ClassId)
                .collect()
        };
        let gallery: Vec<GalleryMeta> = (0..n_g)
            .map(|j| GalleryMeta {
                gallery_id: format!("g{j}"),
                class_set: random_set(&mut rng),
                split: Split::Test,
            })
            .collect();
        let queries = (0..n_q)
            .map(|i| {
                let mut classes: Vec<u32> = (0..n_classes).collect();
                classes.shuffle(&mut rng);
                let n_kept = rng.random_range(1..=2);
                let n_removed = rng.random_range(1..=2);
                let mut q = QueryMeta::new(
                    format!("q{i}"),
                    classes[n_kept..n_kept + n_removed]
                        .iter()
                        .map(|&c| ClassId(c)),
                    classes[..n_kept].iter().map(|&c| ClassId(c)),
                );
                let mut relevant: Vec<String> = gallery
                    .iter()
                    .filter(|_| rng.random_bool(0.3))
                    .map(|g| g.gallery_id.clone())
                    .collect();
                if relevant.is_empty() {
                    relevant.push(gallery[rng.random_range(0..n_g)].gallery_id.clone());
                }
                q.relevant_ids = Some(relevant);
                q
            })
            .collect();
        // Scores on a 1/64 grid in [-1, 1]: exact under the transforms below.
        let scores = if distinct {
            (0..n_q)
                .map(|_| {
                    let mut grid: Vec<i32> = (-64..=64).collect();
                    grid.shuffle(&mut rng);
                    grid[..n_g].iter().map(|&v| v as f32 / 64.0).collect()
                })
                .collect()
        } else {
            (0..n_q)
                .map(|_| {
                    (0..n_g)
                        .map(|_| rng.random_range(-64..=64) as f32 / 64.0)
                        .collect()
                })
                .collect()
        };
        Self {
            scores,
            queries,
            gallery,
        }
    }

    fn sim(&self) -> SimilarityMatrix {
        SimilarityMatrix::new(
            self.queries.iter().map(|q| q.query_id.clone()).collect(),
            self.gallery.iter().map(|g| g.gallery_id.clone()).collect(),
            self.scores.concat(),
        )
        .unwrap()
    }

    fn config(&self, norm: ApNorm, mode: RelevanceMode) -> EvalConfig {
        EvalConfig {
            k_list: (1..=self.gallery.len() + 2).collect(),
            relevance_mode: mode,
            ap_norm: norm,
        }
    }

    fn report(&self, norm: ApNorm, mode: RelevanceMode) -> MetricReport {
        odmap_at_k(
            &self.sim(),
            &self.queries,
            &self.gallery,
            &self.config(norm, mode),
        )
        .unwrap()
    }
}

fn settings() -> impl Strategy<Value = (u64, ApNorm, RelevanceMode)> {
    (
        any::<u64>(),
        prop_oneof![Just(ApNorm::ByK), Just(ApNorm::ByHits)],
        prop_oneof![Just(RelevanceMode::Strict), Just(RelevanceMode::Lenient)],
    )
}

fn all_values(r: &MetricReport) -> impl Iterator<Item = f64> + '_ {
    r.recall
        .values()
        .chain(r.map.values())
        .chain(r.odmap.values())
        .chain(
            r.per_query
                .iter()
                .flat_map(|p| p.odmap.values().chain(p.map.values())),
        )
        .copied()
}

fn close_maps(a: &BTreeMap<usize, f64>, b: &BTreeMap<usize, f64>) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|((ka, va), (kb, vb))| ka == kb && (va - vb).abs() <= 1e-12)
}

fn metric_properties() -> Outcome {
    const CASES: u32 = 256;
    let mut runner = prop_runner(CASES);

    // R@k never decreases as k grows, on the raw recall function too.
    prop_result(
        "recall monotone",
        runner.run(&settings(), |(seed, norm, mode)| {
            let p = Problem::generate(seed, false);
            let r = p.report(norm, mode);
            let values: Vec<f64> = r.recall.values().copied().collect();
            prop_assert!(values.windows(2).all(|w| w[0] <= w[1]), "{values:?}");
            let rankings = top_k(&p.sim(), p.gallery.len());
            let relevant: Vec<BTreeSet<u32>> = p
                .queries
                .iter()
                .map(|q| {
                    let ids = q.relevant_ids.as_ref().unwrap();
                    (0..p.gallery.len() as u32)
                        .filter(|&j| ids.contains(&p.gallery[j as usize].gallery_id))
                        .collect()
                })
                .collect();
            let mut prev = 0.0;
            for k in 1..=p.gallery.len() + 1 {
                let v = recall_at_k(&rankings, &relevant, k).unwrap();
                prop_assert!(v >= prev);
                prev = v;
            }
            Ok(())
        }),
    );

    // Strictly increasing score transforms leave every metric unchanged.
    prop_result(
        "rank invariance",
        runner.run(&(settings(), 0usize..3), |((seed, norm, mode), which)| {
            let p = Problem::generate(seed, false);
            let base = p.report(norm, mode);
            let transform: fn(f32) -> f32 = match which {
                0 => |x| 2.0 * x + 3.0,
                1 => |x| x * x * x,
                _ => f32::exp,
            };
            let mapped = p.sim().map_scores(transform).unwrap();
            let cfg = p.config(norm, mode);
            let got = odmap_at_k(&mapped, &p.queries, &p.gallery, &cfg).unwrap();
            prop_assert_eq!(&got.recall, &base.recall);
            prop_assert_eq!(&got.map, &base.map);
            prop_assert_eq!(&got.odmap, &base.odmap);
            prop_assert_eq!(&got.per_query, &base.per_query);
            Ok(())
        }),
    );

    // Reordering queries, gallery columns and metadata changes nothing
    // when scores are distinct.
    prop_result(
        "permutation invariance",
        runner.run(
            &(settings(), any::<u64>()),
            |((seed, norm, mode), shuffle_seed)| {
                let p = Problem::generate(seed, true);
                let base = p.report(norm, mode);
                let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
                let mut q_order: Vec<usize> = (0..p.queries.len()).collect();
                let mut g_order: Vec<usize> = (0..p.gallery.len()).collect();
                q_order.shuffle(&mut rng);
                g_order.shuffle(&mut rng);
                let scores: Vec<Vec<f32>> = q_order
                    .iter()
                    .map(|&i| g_order.iter().map(|&j| p.scores[i][j]).collect())
                    .collect();
                let mut queries: Vec<QueryMeta> =
                    q_order.iter().map(|&i| p.queries[i].clone()).collect();
                let mut gallery: Vec<GalleryMeta> =
                    g_order.iter().map(|&j| p.gallery[j].clone()).collect();
                let sim = SimilarityMatrix::new(
                    queries.iter().map(|q| q.query_id.clone()).collect(),
                    gallery.iter().map(|g| g.gallery_id.clone()).collect(),
                    scores.concat(),
                )
                .unwrap();
                // Metadata order is independent of matrix order.
                queries.reverse();
                gallery.reverse();
                let got = odmap_at_k(&sim, &queries, &gallery, &p.config(norm, mode)).unwrap();
                prop_assert!(close_maps(&got.recall, &base.recall));
                prop_assert!(close_maps(&got.map, &base.map));
                prop_assert!(close_maps(&got.odmap, &base.odmap));
                let by_id: BTreeMap<_, _> =
                    base.per_query.iter().map(|x| (&x.query_id, x)).collect();
                for pq in &got.per_query {
                    prop_assert_eq!(&pq.odmap, &by_id[&pq.query_id].odmap);
                    prop_assert_eq!(&pq.map, &by_id[&pq.query_id].map);
                }
                Ok(())
            },
        ),
    );

    // Every reported value lies in [0, 1].
    prop_result(
        "unit interval",
        runner.run(&settings(), |(seed, norm, mode)| {
            let r = Problem::generate(seed, false).report(norm, mode);
            for v in all_values(&r) {
                prop_assert!((0.0..=1.0).contains(&v), "{v}");
            }
            Ok(())
        }),
    );

    // ODmAP@1 is the fraction of queries whose first hit is od-relevant.
    prop_result(
        "top-1 fraction",
        runner.run(&settings(), |(seed, norm, mode)| {
            let p = Problem::generate(seed, false);
            let r = p.report(norm, mode);
            let mut good = 0;
            for (i, q) in p.queries.iter().enumerate() {
                let row = &p.scores[i];
                let mut best = 0;
                for j in 1..row.len() {
                    if row[j] > row[best] {
                        best = j;
                    }
                }
                let g = &p.gallery[best];
                let relevant = g.class_set.is_disjoint(&q.removed_classes)
                    && match mode {
                        RelevanceMode::Strict => q.kept_classes.is_subset(&g.class_set),
                        RelevanceMode::Lenient => !q.kept_classes.is_disjoint(&g.class_set),
                    };
                good += relevant as usize;
            }
            let want = good as f64 / p.queries.len() as f64;
            prop_assert!(
                (r.odmap[&1] - want).abs() <= 1e-12,
                "{} vs {want}",
                r.odmap[&1]
            );
            Ok(())
        }),
    );

    Ok(format!(
        "5 property suites x {CASES} cases (monotone R@k, rank invariance, permutation invariance, [0,1] range, ODmAP@1 = top-1 accuracy)"
    ))
}

// ---------------------------------------------------------------- criterion 5

const FILLER_NOUNS: [&str; 10] = [
    "field", "sky", "road", "wall", "room", "water", "grass", "shore", "hill", "corner",
];
const CONNECTORS: [&str; 9] = [
    "on", "near", "with", "beside", "under", "and", "sitting", "playing", "over",
];
const DETERMINERS: [&str; 5] = ["a", "the", "two", "some", "an"];

/// A random caption built from noun phrases with known token spans.
/// Returns the caption and the classes named by its noun phrases.
fn random_caption(
    rng: &mut ChaCha8Rng,
    vocab: &ClassVocabulary,
    id: u64,
) -> (CaptionRecord, BTreeSet<ClassId>) {
    let mut words: Vec<String> = Vec::new();
    let mut spans = Vec::new();
    let mut named = BTreeSet::new();
    let n_phrases = rng.random_range(1..=4);
    for p in 0..n_phrases {
        if p > 0 || rng.random_bool(0.3) {
            for _ in 0..rng.random_range(1..=2) {
                words.push(CONNECTORS[rng.random_range(0..CONNECTORS.len())].into());
            }
        }
        let start = words.len();
        if rng.random_bool(0.7) {
            words.push(DETERMINERS[rng.random_range(0..DETERMINERS.len())].into());
        }
        if rng.random_bool(0.65) {
            let class = ClassId(rng.random_range(0..vocab.len() as u32));
            named.insert(class);
            words.extend(vocab.name(class).unwrap().split(' ').map(String::from));
        } else {
            words.push(FILLER_NOUNS[rng.random_range(0..FILLER_NOUNS.len())].into());
        }
        spans.push((start, words.len(), None));
    }
    if rng.random_bool(0.3) {
        words.push(CONNECTORS[rng.random_range(0..CONNECTORS.len())].into());
    }
    let caption = CaptionRecord::new(id, id, words.join(" "))
        .with_spans(spans)
        .unwrap();
    (caption, named)
}

fn is_subsequence(small: &[String], big: &[String]) -> bool {
    let mut it = big.iter();
    small.iter().all(|s| it.any(|b| b == s))
}

fn caption_synthesis() -> Outcome {
    let vocab = ClassVocabulary::mscoco();
    let mode = MatchMode::word_list(&MatchTable::mscoco(), &vocab);

    let golden = CaptionRecord::new(7, 1, "Two dogs fighting over a frisbee")
        .with_spans([(0, 2, None), (4, 6, None)])
        .unwrap();
    let frisbee = BTreeSet::from([vocab.lookup("frisbee").unwrap()]);
    let synth = remove_matched_nps(&golden, &frisbee, &mode)
        .unwrap()
        .unwrap();
    assert_eq!(synth.text(), "two dogs fighting over");

    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let (mut emitted, mut declined) = (0, 0);
    for id in 0..1000u64 {
        let (caption, named) = random_caption(&mut rng, &vocab, id);
        let mut removed: BTreeSet<ClassId> = named
            .iter()
            .copied()
            .filter(|_| rng.random_bool(0.5))
            .collect();
        if removed.is_empty() || rng.random_bool(0.2) {
            removed.insert(ClassId(rng.random_range(0..vocab.len() as u32)));
        }
        match remove_matched_nps(&caption, &removed, &mode).unwrap() {
            Some(synth) => {
                emitted += 1;
                assert!(!synth.tokens.is_empty());
                assert!(
                    is_subsequence(&synth.tokens, &caption.tokens),
                    "`{}` is not a subsequence of `{}`",
                    synth.text(),
                    caption.text
                );
                assert!(synth.tokens.len() < caption.tokens.len());
                let record = synth.to_record(10_000 + id, id);
                let mentioned = caption_class_set(&record, &mode).unwrap();
                assert!(
                    mentioned.is_disjoint(&removed),
                    "`{}` still mentions a removed class",
                    synth.text()
                );
            }
            None => {
                declined += 1;
                // Nothing named a removed class, or nothing would be left.
                let own_name_present = removed.iter().any(|c| named.contains(c));
                let all_spans_removed = caption
                    .np_spans
                    .iter()
                    .all(|s| mode.matches_any(&removed, s).unwrap());
                let covers_all = all_spans_removed
                    && caption.np_spans.iter().map(|s| s.len()).sum::<usize>()
                        == caption.tokens.len();
                assert!(
                    !own_name_present || covers_all,
                    "no synthetic caption for `{}` removing {removed:?}",
                    caption.text
                );
            }
        }
    }
    Ok(format!(
        "golden \"two dogs fighting over\"; 1000 random cases ({emitted} emitted, {declined} declined) pure and order-preserving"
    ))
}

// ---------------------------------------------------------------- criterion 6

fn parse_fraction(s: &str) -> f64 {
    match s.split_once('/') {
        Some((n, d)) => n.parse::<f64>().unwrap() / d.parse::<f64>().unwrap(),
        None => s.parse().unwrap(),
    }
}

fn desk_golden_run() -> Outcome {
    let desk = fixture_dir().join("desk");
    let out = tempfile::tempdir().unwrap();
    let mut config = RunConfig::load(&desk.join("config.json")).map_err(|e| e.to_string())?;
    config.out_dir = Some(out.path().to_path_buf());
    let args = EvalArgs {
        simm: Some(desk.join("desk.simm")),
        query_embd: None,
        gallery_embd: None,
        query_meta: desk.join("queries.jsonl"),
        gallery_meta: Some(desk.join("gallery.jsonl")),
    };
    cmd_eval(&config, &args, false).map_err(|e| e.to_string())?;

    let report = std::fs::read_to_string(out.path().join(REPORT_JSON)).unwrap();
    let golden = std::fs::read_to_string(desk.join("golden_report.json")).unwrap();
    assert!(
        report == golden,
        "report.json differs from the golden report:\n{report}"
    );

    let expected: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(desk.join("expected.json")).unwrap())
            .unwrap();
    let parsed: MetricReport = serde_json::from_str(&report).unwrap();
    let mut shown = Vec::new();
    for k in [1usize, 5] {
        let exact = expected["odmap"][k.to_string()].as_str().unwrap();
        let got = parsed.odmap[&k];
        assert!(
            (got - parse_fraction(exact)).abs() <= 1e-12,
            "ODmAP@{k}: {got} vs {exact}"
        );
        shown.push(format!("ODmAP@{k} = {exact} = {got}"));
    }
    for (q, pq) in expected["queries"]
        .as_array()
        .unwrap()
        .iter()
        .zip(&parsed.per_query)
    {
        assert_eq!(q["query_id"].as_str().unwrap(), pq.query_id);
        for k in [1usize, 5] {
            let exact = parse_fraction(q["ap"][k.to_string()].as_str().unwrap());
            assert!(
                (pq.odmap[&k] - exact).abs() <= 1e-12,
                "{} AP@{k}",
                pq.query_id
            );
        }
    }
    Ok(format!(
        "8 queries x 40 captions, {}, report byte-identical",
        shown.join(", ")
    ))
}

// ---------------------------------------------------------------- criterion 7

fn random_mask(rng: &mut ChaCha8Rng, w: u32, h: u32) -> MaskRaster {
    let mut mask = MaskRaster::new(w, h);
    for _ in 0..rng.random_range(1..=3) {
        let bw = rng.random_range(1..=w);
        let bh = rng.random_range(1..=h);
        let x = rng.random_range(0..=w - bw);
        let y = rng.random_range(0..=h - bh);
        mask.fill_box(&BBox::new(x as f64, y as f64, bw as f64, bh as f64));
    }
    mask
}

fn random_rgb(rng: &mut ChaCha8Rng, w: u32, h: u32) -> RgbImage {
    RgbImage::from_fn(w, h, |_, _| Rgb([rng.random(), rng.random(), rng.random()]))
}

/// Mirror index with the edge pixel repeated: -1 -> 0, n -> n - 1.
fn mirror(mut i: i64, n: i64) -> i64 {
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i;
        }
    }
}

/// Direct 2-D Gaussian convolution at one pixel, kernel radius ceil(3 sigma).
fn convolve_at(image: &RgbImage, x: u32, y: u32, sigma: f64) -> [f64; 3] {
    let r = (3.0 * sigma).ceil() as i64;
    let (w, h) = (image.width() as i64, image.height() as i64);
    let mut acc = [0.0; 3];
    let mut total = 0.0;
    for dy in -r..=r {
        for dx in -r..=r {
            let weight = (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp();
            let sx = mirror(x as i64 + dx, w) as u32;
            let sy = mirror(y as i64 + dy, h) as u32;
            let p = image.get_pixel(sx, sy).0;
            for c in 0..3 {
                acc[c] += weight * p[c] as f64;
            }
            total += weight;
        }
    }
    acc.map(|a| a / total)
}

fn fill_modes() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let (w, h) = (rng.random_range(1..=48), rng.random_range(1..=48));
        let image = random_rgb(&mut rng, w, h);
        let mask = random_mask(&mut rng, w, h);
        for mode in [FillMode::Zero, FillMode::Mean, FillMode::Blur] {
            let filled = apply_fill(&image, &mask, mode, 8.0).unwrap();
            for (x, y, p) in filled.enumerate_pixels() {
                if !mask.get(x, y) {
                    assert_eq!(p, image.get_pixel(x, y), "{mode} touched an unmasked pixel");
                } else if mode == FillMode::Zero {
                    assert_eq!(p.0, [0, 0, 0]);
                }
            }
        }

        // Paint the masked region one colour: the mean fill is then the identity.
        let colour = Rgb([rng.random(), rng.random(), rng.random()]);
        let mut painted = image.clone();
        for (x, y) in mask.iter_set() {
            painted.put_pixel(x, y, colour);
        }
        assert_eq!(
            apply_fill(&painted, &mask, FillMode::Mean, 8.0).unwrap(),
            painted
        );
    }

    // Blur against direct convolution: a 1-pixel checkerboard (flat grey
    // expected) and an 8-pixel checkerboard (structured), 16 pixels each,
    // including pixels within the kernel radius of every border.
    let mut worst = 0.0f64;
    for cell in [1u32, 8] {
        let (w, h) = (96u32, 80u32);
        let board = RgbImage::from_fn(w, h, |x, y| {
            if (x / cell + y / cell) % 2 == 0 {
                Rgb([255, 255, 255])
            } else {
                Rgb([0, 0, 0])
            }
        });
        let mut mask = MaskRaster::new(w, h);
        mask.fill_box(&BBox::new(0.0, 0.0, w as f64, h as f64));
        let filled = apply_fill(&board, &mask, FillMode::Blur, 8.0).unwrap();
        let samples = [
            (0, 0),
            (95, 79),
            (0, 79),
            (95, 0),
            (3, 40),
            (48, 2),
            (90, 77),
            (47, 39),
            (20, 20),
            (60, 50),
            (33, 71),
            (81, 12),
            (12, 60),
            (70, 30),
            (5, 5),
            (50, 79),
        ];
        for (x, y) in samples {
            let want = convolve_at(&board, x, y, 8.0);
            let got = filled.get_pixel(x, y).0;
            for c in 0..3 {
                let err = (got[c] as f64 - want[c]).abs();
                worst = worst.max(err);
                assert!(
                    err <= 2.0,
                    "cell {cell} pixel ({x},{y}): {} vs {:.2}",
                    got[c],
                    want[c]
                );
                if cell == 1 {
                    assert!((got[c] as f64 - 127.5).abs() <= 2.0);
                }
            }
        }
    }
    Ok(format!(
        "zero/mean/blur leave unmasked pixels bit-identical on 20 random images; blur within {worst:.2} levels of direct convolution at 32 pixels"
    ))
}

// ---------------------------------------------------------------- criterion 8

fn plan_with_mask(image_id: u64, mask: MaskRaster) -> RemovalPlan {
    RemovalPlan {
        image_id,
        trigger_class: ClassId(0),
        removed_classes: BTreeSet::from([ClassId(0)]),
        kept_classes: BTreeSet::from([ClassId(1)]),
        mask,
        kind: PlanKind::SingleClass,
    }
}

fn mask_from_pixels(w: u32, h: u32, pixels: &[(u32, u32)]) -> MaskRaster {
    let mut mask = MaskRaster::new(w, h);
    for &(x, y) in pixels {
        mask.set(x, y, true);
    }
    mask
}

/// Width, height, set pixels and the expected run lengths.
type RleCase = (u32, u32, &'static [(u32, u32)], &'static [u64]);

fn mask_formats() -> Outcome {
    // Hand encodings: column-major runs, first run counts zeros.
    let cases: [RleCase; 6] = [
        (2, 2, &[(0, 0)], &[0, 1, 3]),
        (2, 2, &[(0, 0), (1, 0), (0, 1), (1, 1)], &[0, 4]),
        (2, 2, &[], &[4]),
        (2, 2, &[(1, 0)], &[2, 1, 1]),
        (3, 3, &[(1, 0), (1, 1), (1, 2)], &[3, 3, 3]),
        (3, 3, &[(0, 0), (1, 1), (2, 2)], &[0, 1, 3, 1, 3, 1]),
    ];
    let dir = tempfile::tempdir().unwrap();
    for (i, (w, h, pixels, counts)) in cases.iter().enumerate() {
        let mask = mask_from_pixels(*w, *h, pixels);
        let rle = mask.to_rle();
        assert_eq!(rle.size, [*h, *w]);
        assert_eq!(rle.counts, counts.to_vec(), "case {i}");
        assert_eq!(MaskRaster::from_rle(&rle).unwrap(), mask);
        if !pixels.is_empty() {
            let options = ExportOptions {
                format: MaskFormat::Rle,
                ..ExportOptions::default()
            };
            let plan = plan_with_mask(i as u64, mask.clone());
            export_masks(std::slice::from_ref(&plan), dir.path(), &options).unwrap();
            let path = dir.path().join(format!("masks/{}.json", plan.stem()));
            let json: serde_json::Value =
                serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
            assert_eq!(json, serde_json::json!({"size": [h, w], "counts": counts}));
        }
    }

    // Round trips through the exported files of real plans.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut bundle = DatasetBundle::new(ClassVocabulary::mscoco());
    for id in 0..40 {
        bundle.insert_image(random_image(&mut rng, id));
    }
    let mut plans = plan_all(&bundle, &PlanConfig::default());
    for i in 0..10u64 {
        let (w, h) = (rng.random_range(1..=30), rng.random_range(1..=30));
        let mut mask = random_mask(&mut rng, w, h);
        // Scatter single pixels to get many short runs.
        for _ in 0..rng.random_range(0..20) {
            mask.set(rng.random_range(0..w), rng.random_range(0..h), true);
        }
        plans.push(plan_with_mask(1_000 + i, mask));
    }
    for format in [MaskFormat::Png, MaskFormat::Rle] {
        let out = tempfile::tempdir().unwrap();
        let options = ExportOptions {
            format,
            ..ExportOptions::default()
        };
        export_masks(&plans, out.path(), &options).unwrap();
        for plan in &plans {
            let path = out
                .path()
                .join(format!("masks/{}.{}", plan.stem(), format.extension()));
            assert_eq!(
                read_mask(&path).unwrap(),
                plan.mask,
                "{format:?} {}",
                plan.stem()
            );
            if format == MaskFormat::Png {
                let png = image::open(&path).unwrap();
                assert_eq!(png.color(), image::ColorType::L8);
                for (x, y, p) in png.to_luma8().enumerate_pixels() {
                    assert_eq!(p.0[0], if plan.mask.get(x, y) { 255 } else { 0 });
                }
            }
        }
    }
    Ok(format!(
        "6 hand-encoded 2x2/3x3 RLE cases exact; {} masks round-trip through PNG and RLE",
        plans.len()
    ))
}

// ---------------------------------------------------------------- criterion 9

const PUBLISHED_PAIR_COUNT: f64 = 45_467.0;

fn non_reproducibility() -> Outcome {
    let statement = "published model scores need fine-tuned CLIP/BLIP/VSE++ on full MS-COCO/Flickr30k and are not reproduced here; criteria 1-8 stand in for them";
    match std::env::var_os("DECORR_CORPUS_CONFIG") {
        None => Ok(format!(
            "{statement}; corpus pair count skipped (set DECORR_CORPUS_CONFIG to a run config over full MS-COCO train annotations)"
        )),
        Some(path) => {
            let out = tempfile::tempdir().unwrap();
            let mut config = RunConfig::load(Path::new(&path)).map_err(|e| e.to_string())?;
            config.out_dir = Some(out.path().to_path_buf());
            config.fill_modes.clear();
            decorr_cli::commands::cmd_plan(&config, false).map_err(|e| e.to_string())?;
            let args = decorr_cli::args::CaptionsArgs { plans: None };
            decorr_cli::commands::cmd_captions(&config, &args, false).map_err(|e| e.to_string())?;
            let pairs = std::fs::read_to_string(out.path().join("pairs.jsonl")).unwrap();
            let n = pairs.lines().filter(|l| !l.trim().is_empty()).count();
            let rel = (n as f64 - PUBLISHED_PAIR_COUNT).abs() / PUBLISHED_PAIR_COUNT;
            // Informational: the noun-phrase chunker is not pinned down, so a
            // miss is reported but does not fail the suite.
            Ok(format!(
                "{statement}; corpus pair count {n} vs {PUBLISHED_PAIR_COUNT} ({:+.1}%, {} the 10% band, informational)",
                100.0 * (n as f64 - PUBLISHED_PAIR_COUNT) / PUBLISHED_PAIR_COUNT,
                if rel <= 0.10 { "within" } else { "outside" }
            ))
        }
    }
}

// ---------------------------------------------------------------- runner

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_owned()
    } else {
        "panicked".to_owned()
    }
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        (
            1,
            "planner matches the reference oracle",
            planner_matches_oracle,
        ),
        (2, "threshold boundaries are strict", threshold_boundaries),
        (3, "AP matches brute force", ap_matches_brute_force),
        (4, "metric properties", metric_properties),
        (5, "caption synthesis", caption_synthesis),
        (6, "desk-scale golden evaluation", desk_golden_run),
        (7, "fill modes", fill_modes),
        (8, "mask formats", mask_formats),
        (9, "non-reproducibility statement", non_reproducibility),
    ];
    // Failures are reported on the criterion line instead.
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, name, run) in criteria {
        let result =
            panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| Err(panic_message(p)));
        match result {
            Ok(detail) => println!("[PASS] criterion {n}: {name}: {detail}"),
            Err(message) => {
                failed += 1;
                println!("[FAIL] criterion {n}: {name}: {message}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

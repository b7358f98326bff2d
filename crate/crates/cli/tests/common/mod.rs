//! Independent oracles and fixture builders shared by the integration tests.
//!
//! The planner oracle is a line-by-line transcription of the reference
//! planning procedure over plain `Vec<Vec<bool>>` grids. It shares no code with
//! `decorr_core::planner` beyond the input record types.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use decorr_core::{BBox, ClassId, ImageRecord, PlanKind};
use rand::Rng;

pub type Grid = Vec<Vec<bool>>;

/// Rounds half-up, as the rasterizer does for box corners.
fn round_half_up(v: f64) -> i64 {
    (v + 0.5).floor() as i64
}

/// Pixel `(row, col)` is covered when `x <= col < x + w` and
/// `y <= row < y + h` after rounding both corners half-up.
pub fn rasterize(boxes: &[BBox], width: u32, height: u32) -> Grid {
    let mut grid = vec![vec![false; width as usize]; height as usize];
    for b in boxes {
        let (x0, x1) = (round_half_up(b.x), round_half_up(b.x + b.w));
        let (y0, y1) = (round_half_up(b.y), round_half_up(b.y + b.h));
        let rows = y0.max(0)..y1.min(height as i64);
        for r in rows {
            for c in x0.max(0)..x1.min(width as i64) {
                grid[r as usize][c as usize] = true;
            }
        }
    }
    grid
}

pub fn grid_sum(grid: &Grid) -> u64 {
    grid.iter().flatten().filter(|&&b| b).count() as u64
}

pub fn grid_and_sum(a: &Grid, b: &Grid) -> u64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .filter(|(x, y)| **x && **y)
        .count() as u64
}

pub fn grid_or(a: &Grid, b: &Grid) -> Grid {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| *x || *y).collect())
        .collect()
}

/// What the oracle decides for one trigger class.
#[derive(Debug, Clone, PartialEq)]
pub struct OraclePlan {
    pub kind: PlanKind,
    pub removed: BTreeSet<ClassId>,
    pub kept: BTreeSet<ClassId>,
    pub mask: Grid,
}

/// Straight-line transcription of the reference planning procedure for one image,
/// returning a decision for every class present.
///
/// Two additions beyond that procedure follow the plan invariants: a plan
/// must remove at least one pixel, and a multi-class plan must keep at
/// least one class. `limit_union_size` repeats the size check on the
/// multi-class union.
pub fn oracle_plans(
    image: &ImageRecord,
    alpha1: f64,
    alpha2: f64,
    alpha3: f64,
    limit_union_size: bool,
) -> BTreeMap<ClassId, Option<OraclePlan>> {
    let mut out = BTreeMap::new();

    // classname_set = list(set(bbox_classnames))
    let mut classname_set: Vec<ClassId> = Vec::new();
    for obj in &image.objects {
        if !classname_set.contains(&obj.class_id) {
            classname_set.push(obj.class_id);
        }
    }
    classname_set.sort();

    // mask_list: union of the boxes of each class
    let mut mask_list: Vec<Grid> = Vec::new();
    for class in &classname_set {
        let boxes: Vec<BBox> = image
            .objects
            .iter()
            .filter(|o| o.class_id == *class)
            .map(|o| o.bbox)
            .collect();
        mask_list.push(rasterize(&boxes, image.width, image.height));
    }

    if classname_set.len() < 2 {
        return out;
    }
    let total = image.width as f64 * image.height as f64;

    for (i, &classname_to_remove) in classname_set.iter().enumerate() {
        let mask_q = &mask_list[i];
        let mask_gs: Vec<&Grid> = (0..mask_list.len())
            .filter(|&j| j != i)
            .map(|j| &mask_list[j])
            .collect();
        let classname_gs: Vec<ClassId> = (0..classname_set.len())
            .filter(|&j| j != i)
            .map(|j| classname_set[j])
            .collect();

        // check size of removed region
        if grid_sum(mask_q) as f64 / total > alpha3 {
            out.insert(classname_to_remove, None);
            continue;
        }
        if grid_sum(mask_q) == 0 {
            out.insert(classname_to_remove, None);
            continue;
        }

        // overlaps = and(mask_q, mask_g).sum() / mask_g.sum(); 0/0 is NaN
        let overlaps: Vec<f64> = mask_gs
            .iter()
            .map(|g| grid_and_sum(mask_q, g) as f64 / grid_sum(g) as f64)
            .collect();

        if overlaps.iter().all(|&o| o < alpha1) {
            out.insert(
                classname_to_remove,
                Some(OraclePlan {
                    kind: PlanKind::SingleClass,
                    removed: BTreeSet::from([classname_to_remove]),
                    kept: classname_gs.iter().copied().collect(),
                    mask: mask_q.clone(),
                }),
            );
        } else if overlaps.iter().any(|&o| o > alpha2) {
            let bool_overlaps: Vec<bool> = overlaps.iter().map(|&o| o > alpha2).collect();
            let mut mask_qs = mask_q.clone();
            let mut removed = BTreeSet::from([classname_to_remove]);
            let mut kept = BTreeSet::new();
            for j in 0..mask_gs.len() {
                if bool_overlaps[j] {
                    mask_qs = grid_or(&mask_qs, mask_gs[j]);
                    removed.insert(classname_gs[j]);
                } else {
                    kept.insert(classname_gs[j]);
                }
            }
            let too_big = limit_union_size && grid_sum(&mask_qs) as f64 / total > alpha3;
            if kept.is_empty() || too_big {
                out.insert(classname_to_remove, None);
            } else {
                out.insert(
                    classname_to_remove,
                    Some(OraclePlan {
                        kind: PlanKind::MultiClass,
                        removed,
                        kept,
                        mask: mask_qs,
                    }),
                );
            }
        } else {
            out.insert(classname_to_remove, None);
        }
    }
    out
}

/// Builds an image from `(class, [x, y, w, h])` pairs.
pub fn image_with(id: u64, width: u32, height: u32, boxes: &[(u32, [f64; 4])]) -> ImageRecord {
    boxes
        .iter()
        .fold(ImageRecord::new(id, width, height), |img, (c, b)| {
            img.with_object(ClassId(*c), BBox::new(b[0], b[1], b[2], b[3]))
        })
}

/// A random coordinate, sometimes landing exactly on a half pixel so that
/// the rounding rule is exercised.
fn coord<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    match rng.random_range(0..4) {
        0 => (rng.random_range(lo..hi) * 2.0).floor() / 2.0,
        1 => rng.random_range(lo..hi).floor(),
        _ => rng.random_range(lo..hi),
    }
}

/// A random image with 2 to 6 classes and 1 to 4 boxes per class.
///
/// Some boxes are drawn inside earlier ones so that large overlaps, and
/// hence multi-class plans, are common.
pub fn random_image<R: Rng>(rng: &mut R, id: u64) -> ImageRecord {
    let width = rng.random_range(64..=640);
    let height = rng.random_range(64..=480);
    let (w, h) = (width as f64, height as f64);
    let n_classes = rng.random_range(2..=6);
    let mut classes: Vec<u32> = Vec::new();
    while classes.len() < n_classes {
        let c = rng.random_range(0..80);
        if !classes.contains(&c) {
            classes.push(c);
        }
    }
    let mut image = ImageRecord::new(id, width, height);
    let mut placed: Vec<BBox> = Vec::new();
    for &class in &classes {
        for _ in 0..rng.random_range(1..=4) {
            let bbox = if !placed.is_empty() && rng.random_bool(0.35) {
                let outer = placed[rng.random_range(0..placed.len())];
                let bw = coord(rng, 1.0, outer.w.max(1.0));
                let bh = coord(rng, 1.0, outer.h.max(1.0));
                let bx = outer.x + coord(rng, 0.0, (outer.w - bw).max(0.0));
                let by = outer.y + coord(rng, 0.0, (outer.h - bh).max(0.0));
                BBox::new(bx, by, bw, bh)
            } else {
                let bw = coord(rng, 1.0, w * 0.8);
                let bh = coord(rng, 1.0, h * 0.8);
                let bx = coord(rng, 0.0, w - bw);
                let by = coord(rng, 0.0, h - bh);
                BBox::new(bx, by, bw, bh)
            };
            placed.push(bbox);
            image = image.with_object(ClassId(class), bbox);
        }
    }
    image
}

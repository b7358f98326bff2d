//! Seeded subsampling of synthetic pairs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{DecorrError, Result};

/// `ceil(ratio * n)`, at least one when `n > 0`.
///
/// A tiny slack absorbs products such as `0.3 * 10 = 3.0000000000000004`.
pub fn sample_size(n: usize, ratio: f64) -> Result<usize> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(DecorrError::RatioOutOfRange(ratio));
    }
    if n == 0 {
        return Ok(0);
    }
    let m = (ratio * n as f64 - 1e-9).ceil() as usize;
    Ok(m.clamp(1, n))
}

/// Indices of a uniform sample without replacement, ascending.
pub fn sample_indices(n: usize, ratio: f64, seed: u64) -> Result<Vec<usize>> {
    let m = sample_size(n, ratio)?;
    if m == n {
        return Ok((0..n).collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, n, m).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// The sampled items in their original order.
pub fn sample<T: Clone>(items: &[T], ratio: f64, seed: u64) -> Result<Vec<T>> {
    Ok(sample_indices(items.len(), ratio, seed)?
        .into_iter()
        .map(|i| items[i].clone())
        .collect())
}

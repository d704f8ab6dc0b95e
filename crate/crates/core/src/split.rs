//! Seeded random index partitions for train/validation/test schemes.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Shuffle `0..n` with the given seed and cut it into parts proportional to
/// `fractions`, which must sum to 1 within 1e-9. The final part absorbs
/// rounding so every index lands in exactly one part.
pub fn random_partition(n: usize, fractions: &[f64], seed: u64) -> Result<Vec<Vec<usize>>> {
    if fractions.is_empty() {
        return Err(Error::Config("empty split fractions".into()));
    }
    if fractions.iter().any(|&f| !(0.0..=1.0).contains(&f)) {
        return Err(Error::Config("split fractions must lie in [0, 1]".into()));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "split fractions sum to {total}, expected 1"
        )));
    }

    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);

    let mut parts = Vec::with_capacity(fractions.len());
    let mut start = 0usize;
    for (i, &f) in fractions.iter().enumerate() {
        let end = if i + 1 == fractions.len() {
            n
        } else {
            (start + (f * n as f64).round() as usize).min(n)
        };
        parts.push(indices[start..end].to_vec());
        start = end;
    }
    Ok(parts)
}

/// 70/15/15-style three-way split.
pub fn three_way_split(
    n: usize,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let parts = random_partition(n, &[fractions.0, fractions.1, fractions.2], seed)?;
    let mut it = parts.into_iter();
    Ok((it.next().unwrap(), it.next().unwrap(), it.next().unwrap()))
}

/// 80/20-style two-way split.
pub fn two_way_split(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let parts = random_partition(n, &[train_fraction, 1.0 - train_fraction], seed)?;
    let mut it = parts.into_iter();
    Ok((it.next().unwrap(), it.next().unwrap()))
}

//! Seeded percentile bootstrap with a normal-approximation p-value.
//!
//! Each resample draws from an independent, seed-derived RNG stream, so the
//! result is identical regardless of execution order or parallelism degree.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{mean, std_dev};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    /// Mean of the bootstrap distribution.
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Two-sided normal-approximation p-value from z = mean/sd of the
    /// bootstrap distribution; 1.0 when the distribution is degenerate.
    pub p_value: f64,
    /// The bootstrap distribution had (numerically) zero variance.
    pub zero_variance: bool,
}

/// Percentile bootstrap of `estimator` over row resamples of `data`.
pub fn bootstrap_ci<F>(
    estimator: F,
    data: &[f64],
    n_resamples: usize,
    level: f64,
    seed: u64,
) -> Result<BootstrapSummary>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if n_resamples < 100 {
        return Err(Error::Config(format!(
            "n_resamples must be >= 100, got {n_resamples}"
        )));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(Error::Config(format!("level must be in (0, 1), got {level}")));
    }
    if data.is_empty() {
        return Err(Error::Data("cannot bootstrap an empty sample".into()));
    }
    let n = data.len();

    let mut estimates: Vec<f64> = (0..n_resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64 + 1);
            let resample: Vec<f64> = (0..n).map(|_| data[rng.random_range(0..n)]).collect();
            estimator(&resample)
        })
        .collect();

    let estimate = mean(&estimates);
    let sd = std_dev(&estimates);
    estimates.sort_by(|a, b| a.partial_cmp(b).expect("finite estimates"));

    let alpha = 1.0 - level;
    let lo_idx = ((alpha / 2.0) * n_resamples as f64).ceil() as usize;
    let hi_idx = ((1.0 - alpha / 2.0) * n_resamples as f64).ceil() as usize;
    let ci_low = estimates[lo_idx.max(1) - 1];
    let ci_high = estimates[hi_idx.max(1) - 1];

    let zero_variance = sd < 1e-15;
    let p_value = if zero_variance {
        1.0
    } else {
        normal_two_sided_p(estimate / sd)
    };

    Ok(BootstrapSummary { estimate, ci_low, ci_high, p_value, zero_variance })
}

/// Two-sided tail probability of |Z| >= |z| for standard normal Z, accurate
/// in the far tail via the asymptotic expansion; clamped into (0, 1].
pub fn normal_two_sided_p(z: f64) -> f64 {
    let x = z.abs() / std::f64::consts::SQRT_2;
    let p = erfc(x);
    p.clamp(f64::MIN_POSITIVE, 1.0)
}

fn erfc(x: f64) -> f64 {
    if x < 3.0 {
        // Abramowitz & Stegun 7.1.26, absolute error < 1.5e-7.
        let t = 1.0 / (1.0 + 0.3275911 * x);
        let poly = t
            * (0.254829592
                + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
        poly * (-x * x).exp()
    } else {
        // Asymptotic expansion for the far tail (relative accuracy).
        let x2 = x * x;
        let series = 1.0 - 1.0 / (2.0 * x2) + 3.0 / (4.0 * x2 * x2) - 15.0 / (8.0 * x2 * x2 * x2);
        (-x2).exp() / (x * std::f64::consts::PI.sqrt()) * series
    }
}

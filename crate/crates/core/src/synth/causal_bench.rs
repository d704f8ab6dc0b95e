//! Window-level causal benchmark: a confounded treatment analogue with a
//! planted constant effect.
//!
//! Covariates are standard normals. Treatment probability is a logistic
//! function of the first covariate scaled by the confounding strength; the
//! same covariate shifts the outcome through a step term, so the naive
//! treated-minus-control difference is biased while a correct adjustment
//! recovers the planted effect.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SynthConfig;
use crate::gbdt::FeatureMatrix;
use crate::stats::sigmoid;

pub const OUTCOME_NOISE_SD: f64 = 0.3;
/// Size of the confounder's step contribution to the outcome.
pub const CONFOUNDER_STEP: f64 = 0.5;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CausalDataset {
    pub covariates: FeatureMatrix,
    pub treatment: Vec<bool>,
    pub outcome: Vec<f64>,
    pub true_propensity: Vec<f64>,
    pub planted_ate: f64,
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random_range(1e-12..1.0);
    let v: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

/// Draw `n` units using `cfg.seed`, `cfg.planted_ate`, and
/// `cfg.confounding_strength`.
pub fn generate_causal(cfg: &SynthConfig, n: usize) -> CausalDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(9);

    let mut rows = Vec::with_capacity(n);
    let mut treatment = Vec::with_capacity(n);
    let mut outcome = Vec::with_capacity(n);
    let mut true_propensity = Vec::with_capacity(n);

    for _ in 0..n {
        let x0 = gaussian(&mut rng);
        let x1 = gaussian(&mut rng);
        let x2 = gaussian(&mut rng);
        let g = sigmoid(cfg.confounding_strength * x0);
        let t = rng.random_bool(g);
        let f = CONFOUNDER_STEP * f64::from(x0 > 0.0) + 0.25 * x1;
        let y = f + cfg.planted_ate * f64::from(t) + OUTCOME_NOISE_SD * gaussian(&mut rng);

        rows.push(vec![x0, x1, x2]);
        treatment.push(t);
        outcome.push(y);
        true_propensity.push(g);
    }

    CausalDataset {
        covariates: FeatureMatrix::from_rows(
            vec!["x0".into(), "x1".into(), "x2".into()],
            &rows,
        )
        .expect("rectangular rows"),
        treatment,
        outcome,
        true_propensity,
        planted_ate: cfg.planted_ate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::mean;

    #[test]
    fn confounding_biases_the_naive_difference() {
        let cfg = SynthConfig { seed: 11, planted_ate: 0.12, confounding_strength: 1.0, ..Default::default() };
        let data = generate_causal(&cfg, 30000);
        let t_mean = mean(
            &data
                .outcome
                .iter()
                .zip(&data.treatment)
                .filter(|(_, &t)| t)
                .map(|(y, _)| *y)
                .collect::<Vec<_>>(),
        );
        let c_mean = mean(
            &data
                .outcome
                .iter()
                .zip(&data.treatment)
                .filter(|(_, &t)| !t)
                .map(|(y, _)| *y)
                .collect::<Vec<_>>(),
        );
        let naive = t_mean - c_mean;
        assert!(
            (naive - cfg.planted_ate).abs() > 0.05,
            "naive {naive} is not biased away from {}",
            cfg.planted_ate
        );
    }

    #[test]
    fn zero_confounding_is_randomized() {
        let cfg = SynthConfig { seed: 12, confounding_strength: 0.0, ..Default::default() };
        let data = generate_causal(&cfg, 5000);
        for &g in &data.true_propensity {
            assert_eq!(g, 0.5);
        }
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let cfg = SynthConfig::default();
        let a = generate_causal(&cfg, 100);
        let b = generate_causal(&cfg, 100);
        assert_eq!(a.outcome, b.outcome);
        assert_eq!(a.treatment, b.treatment);
    }
}

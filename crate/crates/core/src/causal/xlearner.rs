//! X-Learner treatment-effect estimation with gradient-boosted base
//! learners, five-fold cross-fitting, and bootstrap uncertainty.

use serde::{Deserialize, Serialize};

use super::balance::{covariate_balance, CovariateBalance};
use super::bootstrap::bootstrap_ci;
use crate::error::{Error, Result};
use crate::gbdt::{fit_gbdt, ClassWeighting, FeatureMatrix, GbdtConfig, GbdtModel, Objective};
use crate::split::random_partition;
use crate::stats::{histogram, mean};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct XLearnerConfig {
    /// Cross-fitting folds; values <= 1 fit on the full sample.
    pub folds: usize,
    /// Base-learner configuration for the four internal regressions. The
    /// objective is forced to squared error, weighting and early stopping
    /// are disabled, and rows are not subsampled, keeping refits exactly
    /// deterministic and sign-symmetric.
    pub base: GbdtConfig,
    pub n_bootstrap: usize,
    pub level: f64,
    pub seed: u64,
    /// Group sizes below this threshold produce a warning.
    pub min_group: usize,
}

impl Default for XLearnerConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            base: GbdtConfig {
                max_depth: 3,
                n_rounds: 100,
                learning_rate: 0.05,
                row_subsample: 1.0,
                class_weighting: ClassWeighting::None,
                early_stop_rounds: None,
                min_leaf_weight: 1.0,
                reg_lambda: 1.0,
                objective: Objective::SquaredError,
                seed: 0,
            },
            n_bootstrap: 1000,
            level: 0.95,
            seed: 0,
            min_group: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropensityHistograms {
    pub treated: Vec<usize>,
    pub control: Vec<usize>,
}

/// Causal analysis report. The first five fields mirror the headline
/// metrics table: cross-fitted ATE, bootstrap ATE, 95% CI bounds, p-value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalReport {
    pub ate_cv: f64,
    pub ate_bootstrap: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_value: f64,
    /// Bootstrap distribution collapsed to a point.
    pub zero_variance: bool,
    /// Naive treated-minus-control outcome difference, for contrast.
    pub naive_difference: f64,
    pub per_unit_effects: Vec<f64>,
    pub propensity_histograms: PropensityHistograms,
    pub balance: Vec<CovariateBalance>,
    pub warnings: Vec<String>,
}

struct FoldModels {
    mu_treated: GbdtModel,
    mu_control: GbdtModel,
    tau_treated: GbdtModel,
    tau_control: GbdtModel,
}

fn sanitized_base(cfg: &XLearnerConfig) -> GbdtConfig {
    GbdtConfig {
        objective: Objective::SquaredError,
        class_weighting: ClassWeighting::None,
        early_stop_rounds: None,
        row_subsample: 1.0,
        ..cfg.base.clone()
    }
}

fn fit_fold(
    covariates: &FeatureMatrix,
    treatment: &[bool],
    outcome: &[f64],
    train_idx: &[usize],
    base: &GbdtConfig,
) -> Result<FoldModels> {
    let treated_idx: Vec<usize> = train_idx.iter().copied().filter(|&i| treatment[i]).collect();
    let control_idx: Vec<usize> = train_idx.iter().copied().filter(|&i| !treatment[i]).collect();
    if treated_idx.is_empty() || control_idx.is_empty() {
        return Err(Error::Data(
            "a cross-fitting fold lost all treated or all control units; reduce folds".into(),
        ));
    }

    let x_treated = covariates.select_rows(&treated_idx);
    let x_control = covariates.select_rows(&control_idx);
    let y_treated: Vec<f64> = treated_idx.iter().map(|&i| outcome[i]).collect();
    let y_control: Vec<f64> = control_idx.iter().map(|&i| outcome[i]).collect();

    // Stage 1: outcome models per group.
    let (mu_treated, _) = fit_gbdt(&x_treated, &y_treated, None, base)?;
    let (mu_control, _) = fit_gbdt(&x_control, &y_control, None, base)?;

    // Stage 2: imputed effects and effect models.
    let mu0_on_treated = mu_control.predict(&x_treated)?;
    let d_treated: Vec<f64> = y_treated
        .iter()
        .zip(&mu0_on_treated)
        .map(|(y, m0)| y - m0)
        .collect();
    let mu1_on_control = mu_treated.predict(&x_control)?;
    let d_control: Vec<f64> = mu1_on_control
        .iter()
        .zip(&y_control)
        .map(|(m1, y)| m1 - y)
        .collect();

    let (tau_treated, _) = fit_gbdt(&x_treated, &d_treated, None, base)?;
    let (tau_control, _) = fit_gbdt(&x_control, &d_control, None, base)?;

    Ok(FoldModels { mu_treated, mu_control, tau_treated, tau_control })
}

/// X-Learner ATE of `outcome` under `treatment`, blending group-specific
/// effect models by the supplied propensities.
///
/// Per-unit effects come from cross-fitted models (`cfg.folds`). The
/// bootstrap resamples doubly-robust pseudo-effects (the blended effect
/// plus propensity-weighted outcome residuals), which carries the outcome
/// noise that the smoothed effects average away; refitting the learners
/// inside every resample would be computationally infeasible.
pub fn x_learner_ate(
    covariates: &FeatureMatrix,
    treatment: &[bool],
    outcome: &[f64],
    propensity: &[f64],
    cfg: &XLearnerConfig,
) -> Result<CausalReport> {
    let n = covariates.n_rows();
    if n != treatment.len() || n != outcome.len() || n != propensity.len() {
        return Err(Error::Data("causal input length mismatch".into()));
    }
    let n_treated = treatment.iter().filter(|&&t| t).count();
    let n_control = n - n_treated;
    if n_treated == 0 || n_control == 0 {
        return Err(Error::SingleClass(format!(
            "{n_treated} treated, {n_control} control"
        )));
    }

    // Overlap: the groups' propensity ranges must intersect.
    let range = |want: bool| {
        propensity
            .iter()
            .zip(treatment)
            .filter(|(_, &t)| t == want)
            .map(|(p, _)| *p)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p), hi.max(p)))
    };
    let (t_lo, t_hi) = range(true);
    let (c_lo, c_hi) = range(false);
    if t_lo > c_hi || c_lo > t_hi {
        return Err(Error::Data(
            "no overlap: treated and control propensity supports are disjoint".into(),
        ));
    }

    let mut warnings = Vec::new();
    if n_treated < cfg.min_group {
        warnings.push(format!("treated group has only {n_treated} units"));
    }
    if n_control < cfg.min_group {
        warnings.push(format!("control group has only {n_control} units"));
    }

    let base = sanitized_base(cfg);

    // Cross-fitted per-unit effects and pseudo-effects.
    let mut tau_hat = vec![0.0; n];
    let mut pseudo = vec![0.0; n];
    let folds: Vec<Vec<usize>> = if cfg.folds <= 1 {
        vec![(0..n).collect()]
    } else {
        random_partition(n, &vec![1.0 / cfg.folds as f64; cfg.folds], cfg.seed)?
    };

    for (f, test_idx) in folds.iter().enumerate() {
        let train_idx: Vec<usize> = if cfg.folds <= 1 {
            (0..n).collect()
        } else {
            folds
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != f)
                .flat_map(|(_, idx)| idx.iter().copied())
                .collect()
        };
        let models = fit_fold(covariates, treatment, outcome, &train_idx, &base)?;

        let x_test = covariates.select_rows(test_idx);
        let tau0 = models.tau_control.predict(&x_test)?;
        let tau1 = models.tau_treated.predict(&x_test)?;
        let mu1 = models.mu_treated.predict(&x_test)?;
        let mu0 = models.mu_control.predict(&x_test)?;

        for (pos, &i) in test_idx.iter().enumerate() {
            let g = propensity[i];
            let t = g * tau0[pos] + (1.0 - g) * tau1[pos];
            tau_hat[i] = t;
            pseudo[i] = if treatment[i] {
                t + (outcome[i] - mu1[pos]) / g
            } else {
                t - (outcome[i] - mu0[pos]) / (1.0 - g)
            };
        }
    }

    let ate_cv = mean(&tau_hat);
    let boot = bootstrap_ci(mean, &pseudo, cfg.n_bootstrap, cfg.level, cfg.seed)?;

    let naive_difference = {
        let t_mean = outcome
            .iter()
            .zip(treatment)
            .filter(|(_, &t)| t)
            .map(|(y, _)| y)
            .sum::<f64>()
            / n_treated as f64;
        let c_mean = outcome
            .iter()
            .zip(treatment)
            .filter(|(_, &t)| !t)
            .map(|(y, _)| y)
            .sum::<f64>()
            / n_control as f64;
        t_mean - c_mean
    };

    let treated_p: Vec<f64> = propensity
        .iter()
        .zip(treatment)
        .filter(|(_, &t)| t)
        .map(|(p, _)| *p)
        .collect();
    let control_p: Vec<f64> = propensity
        .iter()
        .zip(treatment)
        .filter(|(_, &t)| !t)
        .map(|(p, _)| *p)
        .collect();

    Ok(CausalReport {
        ate_cv,
        ate_bootstrap: boot.estimate,
        ci_low: boot.ci_low,
        ci_high: boot.ci_high,
        p_value: boot.p_value,
        zero_variance: boot.zero_variance,
        naive_difference,
        per_unit_effects: tau_hat,
        propensity_histograms: PropensityHistograms {
            treated: histogram(&treated_p, 0.0, 1.0, super::propensity::OVERLAP_HIST_BINS),
            control: histogram(&control_p, 0.0, 1.0, super::propensity::OVERLAP_HIST_BINS),
        },
        balance: covariate_balance(covariates, treatment, propensity)?,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
        let u: f64 = rng.random_range(1e-12..1.0);
        let v: f64 = rng.random_range(0.0..1.0);
        (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
    }

    /// Randomized assignment, constant effect tau.
    fn randomized_data(n: usize, tau: f64, seed: u64) -> (FeatureMatrix, Vec<bool>, Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::with_capacity(n);
        let mut treatment = Vec::with_capacity(n);
        let mut outcome = Vec::with_capacity(n);
        for _ in 0..n {
            let x0 = gaussian(&mut rng);
            let x1 = gaussian(&mut rng);
            let t = rng.random_bool(0.5);
            let y = 0.5 * x0 + tau * (t as u8 as f64) + 0.3 * gaussian(&mut rng);
            rows.push(vec![x0, x1]);
            treatment.push(t);
            outcome.push(y);
        }
        let m = FeatureMatrix::from_rows(vec!["x0".into(), "x1".into()], &rows).unwrap();
        let propensity = vec![0.5; n];
        (m, treatment, outcome, propensity)
    }

    fn small_cfg() -> XLearnerConfig {
        let mut cfg = XLearnerConfig::default();
        cfg.base.n_rounds = 40;
        cfg.n_bootstrap = 200;
        cfg
    }

    #[test]
    fn randomized_null_effect_is_near_zero() {
        let (x, t, y, g) = randomized_data(3000, 0.0, 1);
        let report = x_learner_ate(&x, &t, &y, &g, &small_cfg()).unwrap();
        assert!(report.ate_cv.abs() < 0.05, "ate {}", report.ate_cv);
    }

    #[test]
    fn randomized_constant_effect_is_recovered() {
        let (x, t, y, g) = randomized_data(3000, 0.5, 2);
        let report = x_learner_ate(&x, &t, &y, &g, &small_cfg()).unwrap();
        assert!((report.ate_cv - 0.5).abs() < 0.06, "ate {}", report.ate_cv);
        // under randomization the X-Learner tracks the naive difference
        assert!((report.ate_cv - report.naive_difference).abs() < 0.06);
    }

    #[test]
    fn outcome_shift_invariance() {
        let (x, t, y, g) = randomized_data(1200, 0.3, 3);
        let cfg = small_cfg();
        let a = x_learner_ate(&x, &t, &y, &g, &cfg).unwrap();
        let shifted: Vec<f64> = y.iter().map(|v| v + 50.0).collect();
        let b = x_learner_ate(&x, &t, &shifted, &g, &cfg).unwrap();
        assert!((a.ate_cv - b.ate_cv).abs() < 1e-9, "{} vs {}", a.ate_cv, b.ate_cv);
    }

    #[test]
    fn label_swap_negates_the_estimate() {
        let (x, t, y, g) = randomized_data(1200, 0.3, 4);
        let cfg = small_cfg();
        let a = x_learner_ate(&x, &t, &y, &g, &cfg).unwrap();
        let swapped: Vec<bool> = t.iter().map(|&v| !v).collect();
        let g_swapped: Vec<f64> = g.iter().map(|&v| 1.0 - v).collect();
        let b = x_learner_ate(&x, &swapped, &y, &g_swapped, &cfg).unwrap();
        assert!((a.ate_cv + b.ate_cv).abs() < 1e-9, "{} vs {}", a.ate_cv, b.ate_cv);
    }

    #[test]
    fn disjoint_propensity_supports_are_rejected() {
        let (x, t, y, _) = randomized_data(200, 0.0, 5);
        let g: Vec<f64> = t.iter().map(|&v| if v { 0.9 } else { 0.1 }).collect();
        assert!(matches!(
            x_learner_ate(&x, &t, &y, &g, &small_cfg()),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn tiny_groups_warn() {
        let (x, mut t, y, g) = randomized_data(300, 0.0, 6);
        for (i, flag) in t.iter_mut().enumerate() {
            *flag = i < 30; // 30 treated
        }
        let report = x_learner_ate(&x, &t, &y, &g, &small_cfg()).unwrap();
        assert!(!report.warnings.is_empty());
    }
}

//! Slower causal invariants that need desk-scale samples.

use rinkpulse::causal::{estimate_propensity, x_learner_ate, XLearnerConfig};
use rinkpulse::synth::{generate_causal, SynthConfig};

fn xl(folds: usize) -> XLearnerConfig {
    let mut cfg = XLearnerConfig { folds, seed: 17, n_bootstrap: 300, ..Default::default() };
    cfg.base.n_rounds = 60;
    cfg.base.learning_rate = 0.1;
    cfg
}

/// Cross-fitted and full-sample ATE agree on the planted-effect generator.
#[test]
fn cross_fitted_and_full_sample_ate_agree() {
    let cfg = SynthConfig {
        seed: 21,
        planted_ate: 0.12,
        confounding_strength: 1.0,
        ..Default::default()
    };
    let data = generate_causal(&cfg, 20_000);
    let prop = estimate_propensity(&data.covariates, &data.treatment).unwrap();

    let cross = x_learner_ate(
        &data.covariates,
        &data.treatment,
        &data.outcome,
        &prop.propensities,
        &xl(5),
    )
    .unwrap();
    let full = x_learner_ate(
        &data.covariates,
        &data.treatment,
        &data.outcome,
        &prop.propensities,
        &xl(1),
    )
    .unwrap();
    assert!(
        (cross.ate_cv - full.ate_cv).abs() <= 0.03,
        "cross-fitted {:.5} vs full-sample {:.5}",
        cross.ate_cv,
        full.ate_cv
    );
}

/// Under randomized assignment the X-Learner ATE sits within two bootstrap
/// standard errors of the difference-in-means.
#[test]
fn randomized_assignment_matches_difference_in_means() {
    let cfg = SynthConfig {
        seed: 22,
        planted_ate: 0.12,
        confounding_strength: 0.0,
        ..Default::default()
    };
    let data = generate_causal(&cfg, 10_000);
    let prop = estimate_propensity(&data.covariates, &data.treatment).unwrap();
    let report = x_learner_ate(
        &data.covariates,
        &data.treatment,
        &data.outcome,
        &prop.propensities,
        &xl(5),
    )
    .unwrap();
    // Bootstrap SE from the normal-approximation relationship between the
    // percentile CI and the distribution spread.
    let se = (report.ci_high - report.ci_low) / (2.0 * 1.96);
    assert!(
        (report.ate_cv - report.naive_difference).abs() <= 2.0 * se,
        "ate {:.5} vs naive {:.5} (2 se = {:.5})",
        report.ate_cv,
        report.naive_difference,
        2.0 * se
    );
}

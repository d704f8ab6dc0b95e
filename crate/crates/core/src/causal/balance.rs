//! Covariate balance: standardized mean differences, raw and
//! inverse-propensity-weighted.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gbdt::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateBalance {
    pub name: String,
    /// (mean_t - mean_c) / pooled sd; `None` for zero-variance covariates.
    pub smd_raw: Option<f64>,
    /// The same statistic under inverse-propensity weights.
    pub smd_weighted: Option<f64>,
    pub zero_variance: bool,
}

pub fn covariate_balance(
    covariates: &FeatureMatrix,
    treatment: &[bool],
    propensity: &[f64],
) -> Result<Vec<CovariateBalance>> {
    let n = covariates.n_rows();
    if n != treatment.len() || n != propensity.len() {
        return Err(Error::Data("balance input length mismatch".into()));
    }
    if !treatment.iter().any(|&t| t) || treatment.iter().all(|&t| t) {
        return Err(Error::SingleClass("balance needs both groups".into()));
    }

    // IPW weights: 1/e for treated, 1/(1-e) for controls.
    let weights: Vec<f64> = treatment
        .iter()
        .zip(propensity)
        .map(|(&t, &e)| if t { 1.0 / e } else { 1.0 / (1.0 - e) })
        .collect();
    let unit = vec![1.0; n];

    let mut out = Vec::with_capacity(covariates.n_cols());
    for j in 0..covariates.n_cols() {
        let col = covariates.column(j);
        let raw = smd(col, treatment, &unit);
        let weighted = smd(col, treatment, &weights);
        out.push(CovariateBalance {
            name: covariates.names()[j].clone(),
            zero_variance: raw.is_none(),
            smd_raw: raw,
            smd_weighted: weighted,
        });
    }
    Ok(out)
}

fn smd(col: &[f64], treatment: &[bool], weights: &[f64]) -> Option<f64> {
    let stats = |want: bool| -> (f64, f64) {
        let mut wsum = 0.0;
        let mut mean = 0.0;
        for ((&x, &t), &w) in col.iter().zip(treatment).zip(weights) {
            if t == want {
                wsum += w;
                mean += w * x;
            }
        }
        mean /= wsum;
        let mut var = 0.0;
        for ((&x, &t), &w) in col.iter().zip(treatment).zip(weights) {
            if t == want {
                var += w * (x - mean) * (x - mean);
            }
        }
        (mean, var / wsum)
    };
    let (mean_t, var_t) = stats(true);
    let (mean_c, var_c) = stats(false);
    let pooled = ((var_t + var_c) / 2.0).sqrt();
    if pooled <= 1e-12 {
        return None;
    }
    Some((mean_t - mean_c) / pooled)
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

    #[test]
    fn identical_distributions_have_near_zero_smd() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 20000;
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![gaussian(&mut rng)]).collect();
        let treatment: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
        let propensity = vec![0.5; n];
        let m = FeatureMatrix::from_rows(vec!["x".into()], &rows).unwrap();
        let balance = covariate_balance(&m, &treatment, &propensity).unwrap();
        assert!(balance[0].smd_raw.unwrap().abs() < 0.05);
    }

    #[test]
    fn one_sigma_shift_gives_unit_smd() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 40000;
        let mut rows = Vec::with_capacity(n);
        let mut treatment = Vec::with_capacity(n);
        for i in 0..n {
            let t = i % 2 == 0;
            rows.push(vec![gaussian(&mut rng) + if t { 1.0 } else { 0.0 }]);
            treatment.push(t);
        }
        let propensity = vec![0.5; n];
        let m = FeatureMatrix::from_rows(vec!["x".into()], &rows).unwrap();
        let balance = covariate_balance(&m, &treatment, &propensity).unwrap();
        let smd = balance[0].smd_raw.unwrap();
        assert!((smd - 1.0).abs() < 0.05, "smd {smd}");
    }

    #[test]
    fn zero_variance_covariate_is_flagged() {
        let rows: Vec<Vec<f64>> = (0..10).map(|_| vec![2.0]).collect();
        let treatment: Vec<bool> = (0..10).map(|i| i % 2 == 0).collect();
        let propensity = vec![0.5; 10];
        let m = FeatureMatrix::from_rows(vec!["c".into()], &rows).unwrap();
        let balance = covariate_balance(&m, &treatment, &propensity).unwrap();
        assert!(balance[0].zero_variance);
        assert_eq!(balance[0].smd_raw, None);
    }
}

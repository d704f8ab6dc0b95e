//! Propensity-score estimation: logistic regression of treatment on
//! pre-treatment covariates, with clipping and overlap diagnostics.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gbdt::FeatureMatrix;
use crate::logistic::{self, LogisticConfig};
use crate::stats::histogram;

pub const PROPENSITY_CLIP: (f64, f64) = (0.01, 0.99);
pub const OVERLAP_HIST_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropensityReport {
    /// Estimated treatment probabilities, clipped to [0.01, 0.99].
    pub propensities: Vec<f64>,
    /// Number of values that hit the clipping bounds.
    pub clipped: usize,
    /// Raised when the raw scores separate the groups perfectly (every
    /// treated unit scores above every control unit).
    pub separation: bool,
    /// Binned counts over [0, 1] for treated and control units.
    pub treated_hist: Vec<usize>,
    pub control_hist: Vec<usize>,
}

/// Fit treatment ~ covariates by penalized logistic regression and return
/// clipped propensities plus overlap diagnostics. Covariates must be
/// pre-treatment quantities; both groups must be present.
pub fn estimate_propensity(
    covariates: &FeatureMatrix,
    treatment: &[bool],
) -> Result<PropensityReport> {
    let n = covariates.n_rows();
    if n != treatment.len() {
        return Err(Error::Data("covariates/treatment length mismatch".into()));
    }
    let n_treated = treatment.iter().filter(|&&t| t).count();
    if n_treated == 0 || n_treated == n {
        return Err(Error::SingleClass(format!(
            "{n_treated} treated of {n} units"
        )));
    }

    let p = covariates.n_cols();
    let mut x = DMatrix::zeros(n, p);
    for j in 0..p {
        let col = covariates.column(j);
        for i in 0..n {
            x[(i, j)] = col[i];
        }
    }
    let y: Vec<f64> = treatment.iter().map(|&t| if t { 1.0 } else { 0.0 }).collect();
    let fit = logistic::fit(&x, &y, &LogisticConfig::default())?;

    let raw: Vec<f64> = (0..n).map(|i| fit.predict_proba(&covariates.row(i))).collect();
    let min_treated = raw
        .iter()
        .zip(treatment)
        .filter(|(_, &t)| t)
        .map(|(v, _)| *v)
        .fold(f64::INFINITY, f64::min);
    let max_control = raw
        .iter()
        .zip(treatment)
        .filter(|(_, &t)| !t)
        .map(|(v, _)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    let separation = min_treated > max_control;

    let mut clipped = 0usize;
    let propensities: Vec<f64> = raw
        .iter()
        .map(|&v| {
            let c = v.clamp(PROPENSITY_CLIP.0, PROPENSITY_CLIP.1);
            if c != v {
                clipped += 1;
            }
            c
        })
        .collect();

    let treated_vals: Vec<f64> = propensities
        .iter()
        .zip(treatment)
        .filter(|(_, &t)| t)
        .map(|(v, _)| *v)
        .collect();
    let control_vals: Vec<f64> = propensities
        .iter()
        .zip(treatment)
        .filter(|(_, &t)| !t)
        .map(|(v, _)| *v)
        .collect();

    Ok(PropensityReport {
        propensities,
        clipped,
        separation,
        treated_hist: histogram(&treated_vals, 0.0, 1.0, OVERLAP_HIST_BINS),
        control_hist: histogram(&control_vals, 0.0, 1.0, OVERLAP_HIST_BINS),
    })
}

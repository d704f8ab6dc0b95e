//! Variance inflation factor diagnostics over window count features.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::EventType;
use crate::ingest::windows::WindowFeatures;

/// Flag threshold: VIF at or above this value indicates problematic
/// multicollinearity.
pub const VIF_FLAG_THRESHOLD: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VifEntry {
    /// `None` when the column is perfectly collinear (infinite VIF) or has
    /// zero variance (undefined).
    pub vif: Option<f64>,
    /// Perfect collinearity sentinel: R^2 = 1 against the other columns.
    pub infinite: bool,
    /// The column is constant, so its VIF is undefined.
    pub zero_variance: bool,
    /// True when VIF >= 5 or infinite.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VifReport {
    pub entries: BTreeMap<EventType, VifEntry>,
}

impl VifReport {
    pub fn any_flagged(&self) -> bool {
        self.entries.values().any(|e| e.flagged)
    }

    /// Event types safe to use as regression features: finite VIF columns.
    pub fn clean_features(&self) -> Vec<EventType> {
        self.entries
            .iter()
            .filter(|(_, v)| !v.infinite && !v.zero_variance)
            .map(|(e, _)| *e)
            .collect()
    }
}

/// VIF for every modeled event-count column: `VIF_e = 1 / (1 - R^2_e)` where
/// `R^2_e` comes from regressing column e on all other columns plus an
/// intercept. Perfectly collinear columns get the infinite sentinel instead
/// of a crash; constant columns are flagged as zero-variance.
pub fn vif_diagnostics(windows: &[WindowFeatures]) -> Result<VifReport> {
    let features: Vec<EventType> = EventType::MODELED.to_vec();
    vif_over_columns(windows, &features)
}

fn vif_over_columns(windows: &[WindowFeatures], features: &[EventType]) -> Result<VifReport> {
    let n = windows.len();
    if n < 3 {
        return Err(Error::Data(format!(
            "VIF needs at least 3 windows, got {n}"
        )));
    }

    let cols: Vec<Vec<f64>> = features
        .iter()
        .map(|&e| windows.iter().map(|w| w.count(e) as f64).collect())
        .collect();

    let variances: Vec<f64> = cols.iter().map(|c| crate::stats::variance(c)).collect();
    let active: Vec<usize> = (0..features.len())
        .filter(|&i| variances[i] > 1e-12)
        .collect();
    if active.len() < 2 {
        return Err(Error::Data(
            "VIF needs at least 2 feature columns with nonzero variance".into(),
        ));
    }

    let mut entries = BTreeMap::new();
    for (i, &event) in features.iter().enumerate() {
        if variances[i] <= 1e-12 {
            entries.insert(
                event,
                VifEntry { vif: None, infinite: false, zero_variance: true, flagged: false },
            );
            continue;
        }
        let r2 = r_squared_against_others(&cols, &active, i, n);
        let entry = if 1.0 - r2 < 1e-12 {
            VifEntry { vif: None, infinite: true, zero_variance: false, flagged: true }
        } else {
            let vif = 1.0 / (1.0 - r2);
            VifEntry { vif: Some(vif), infinite: false, zero_variance: false, flagged: vif >= VIF_FLAG_THRESHOLD }
        };
        entries.insert(event, entry);
    }
    Ok(VifReport { entries })
}

/// R^2 of OLS of column `target` on the other active columns + intercept,
/// solved by SVD so rank deficiency degrades gracefully.
fn r_squared_against_others(cols: &[Vec<f64>], active: &[usize], target: usize, n: usize) -> f64 {
    let others: Vec<usize> = active.iter().copied().filter(|&j| j != target).collect();
    let mut design = DMatrix::zeros(n, others.len() + 1);
    for r in 0..n {
        design[(r, 0)] = 1.0;
    }
    for (c, &j) in others.iter().enumerate() {
        for r in 0..n {
            design[(r, c + 1)] = cols[j][r];
        }
    }
    let y = DVector::from_iterator(n, cols[target].iter().copied());

    let svd = design.svd(true, true);
    let beta = svd.solve(&y, 1e-12).expect("SVD solve");
    let fitted = svd.recompose().expect("SVD recompose") * &beta;

    let y_mean = y.mean();
    let ss_tot: f64 = y.iter().map(|v| (v - y_mean) * (v - y_mean)).sum();
    let ss_res: f64 = y
        .iter()
        .zip(fitted.iter())
        .map(|(v, f)| (v - f) * (v - f))
        .sum();
    if ss_tot <= 0.0 {
        return 1.0;
    }
    (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
}

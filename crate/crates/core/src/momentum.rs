//! Interpretable logistic momentum model over window event counts.
//!
//! Each coefficient is the log-odds impact of one occurrence of its event on
//! the window's goal probability. The momentum score is the exponentiated
//! weighted count sum (intercept excluded), an odds-scale measure of
//! offensive pressure; a log-scale reading is exposed alongside.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::EventType;
use crate::ingest::windows::WindowFeatures;
use crate::logistic::{self, LogisticConfig};
use crate::stats::sigmoid;

/// Published reference coefficients for the twenty modeled events, shipped
/// with the crate and usable without fitting (scoring-only runs, tests).
pub const REFERENCE_FIXTURE_JSON: &str = include_str!("../fixtures/appendix_a.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub iterations: usize,
    pub converged: bool,
    pub final_log_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumModel {
    pub intercept: f64,
    pub coefficients: BTreeMap<EventType, f64>,
    pub fitted: bool,
    #[serde(rename = "meta")]
    pub train_meta: Option<TrainMeta>,
}

impl MomentumModel {
    /// Fit on all twenty modeled event-count columns.
    pub fn fit(windows: &[WindowFeatures], l2: f64) -> Result<Self> {
        Self::fit_with_features(windows, &EventType::MODELED, l2)
    }

    /// Fit on an explicit feature set (e.g. the VIF-clean columns).
    pub fn fit_with_features(
        windows: &[WindowFeatures],
        features: &[EventType],
        l2: f64,
    ) -> Result<Self> {
        if windows.is_empty() {
            return Err(Error::Data("no windows to fit on".into()));
        }
        let n = windows.len();
        let p = features.len();
        let mut x = DMatrix::zeros(n, p);
        let mut y = vec![0.0; n];
        for (i, w) in windows.iter().enumerate() {
            for (j, &e) in features.iter().enumerate() {
                x[(i, j)] = w.count(e) as f64;
            }
            y[i] = w.goal_label as f64;
        }

        let cfg = LogisticConfig { l2, ..Default::default() };
        let fit = logistic::fit(&x, &y, &cfg)?;

        let coefficients = features
            .iter()
            .zip(&fit.weights)
            .map(|(&e, &w)| (e, w))
            .collect();
        Ok(MomentumModel {
            intercept: fit.intercept,
            coefficients,
            fitted: true,
            train_meta: Some(TrainMeta {
                iterations: fit.iterations,
                converged: fit.converged,
                final_log_loss: fit.final_log_loss,
            }),
        })
    }

    /// The built-in reference model.
    pub fn reference() -> Self {
        serde_json::from_str(REFERENCE_FIXTURE_JSON).expect("embedded fixture parses")
    }

    fn require_fitted(&self) -> Result<()> {
        if !self.fitted {
            return Err(Error::Unfitted("momentum model"));
        }
        if !self.intercept.is_finite() || self.coefficients.values().any(|v| !v.is_finite()) {
            return Err(Error::Data("momentum model has non-finite parameters".into()));
        }
        Ok(())
    }

    /// Weighted count sum, intercept excluded.
    pub fn log_momentum_score(&self, window: &WindowFeatures) -> Result<f64> {
        self.require_fitted()?;
        Ok(self
            .coefficients
            .iter()
            .map(|(&e, &beta)| beta * window.count(e) as f64)
            .sum())
    }

    /// Momentum score `M = exp(sum_e beta_e x_e)`; strictly positive.
    pub fn momentum_score(&self, window: &WindowFeatures) -> Result<f64> {
        Ok(self.log_momentum_score(window)?.exp())
    }

    /// Goal probability `sigma(beta_0 + sum_e beta_e x_e)`.
    pub fn predict_goal_prob(&self, window: &WindowFeatures) -> Result<f64> {
        Ok(sigmoid(self.intercept + self.log_momentum_score(window)?))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn window_with(counts: &[(EventType, u32)]) -> WindowFeatures {
        WindowFeatures {
            window_id: "t:0".into(),
            game_id: "t".into(),
            window_start_s: 0.0,
            counts: counts.iter().copied().collect(),
            goal_label: 0,
            positions: Default::default(),
            event_token_sequence: vec![],
        }
    }

    #[test]
    fn reference_fixture_loads_with_exact_values() {
        let model = MomentumModel::reference();
        assert_eq!(model.coefficients.len(), 20);
        assert_eq!(model.coefficients[&EventType::FaceoffSuccess], 0.2242);
        assert_eq!(model.coefficients[&EventType::Penalty], -0.8414);
        assert_eq!(model.coefficients[&EventType::PenaltyDrawn], 0.7205);
        assert_eq!(model.coefficients[&EventType::Offside], -0.1184);
        assert!(model.fitted);
    }

    #[test]
    fn zero_counts_score_one() {
        let model = MomentumModel::reference();
        let w = window_with(&[]);
        assert_eq!(model.momentum_score(&w).unwrap(), 1.0);
    }

    #[test]
    fn single_event_scores_exponentiate_reference_weights() {
        let model = MomentumModel::reference();
        let w = window_with(&[(EventType::FaceoffSuccess, 1)]);
        assert_relative_eq!(model.momentum_score(&w).unwrap(), 1.2513212586553366, epsilon = 1e-12);
        let w = window_with(&[(EventType::Penalty, 1)]);
        assert_relative_eq!(model.momentum_score(&w).unwrap(), 0.43110655157522537, epsilon = 1e-12);
    }

    #[test]
    fn probability_examples() {
        let mut model = MomentumModel::reference();
        model.intercept = 0.0;
        let w = window_with(&[]);
        assert_eq!(model.predict_goal_prob(&w).unwrap(), 0.5);

        model.intercept = (0.02f64 / 0.98).ln();
        let p = model.predict_goal_prob(&w).unwrap();
        assert!((p - 0.02).abs() < 1e-6, "p = {p}");

        // Adding one penalty_drawn strictly raises the probability.
        let w2 = window_with(&[(EventType::PenaltyDrawn, 1)]);
        assert!(model.predict_goal_prob(&w2).unwrap() > p);
    }

    #[test]
    fn unfitted_model_is_a_state_error() {
        let mut model = MomentumModel::reference();
        model.fitted = false;
        let w = window_with(&[]);
        assert!(matches!(model.momentum_score(&w), Err(Error::Unfitted(_))));
        assert!(matches!(model.predict_goal_prob(&w), Err(Error::Unfitted(_))));
    }

    #[test]
    fn log_momentum_is_linear_in_counts() {
        let model = MomentumModel::reference();
        let a = window_with(&[(EventType::Pass, 2), (EventType::Shot, 1)]);
        let b = window_with(&[(EventType::Pass, 1), (EventType::Rebound, 3)]);
        let combined = window_with(&[
            (EventType::Pass, 3),
            (EventType::Shot, 1),
            (EventType::Rebound, 3),
        ]);
        let ma = model.momentum_score(&a).unwrap();
        let mb = model.momentum_score(&b).unwrap();
        let mc = model.momentum_score(&combined).unwrap();
        assert_relative_eq!(mc, ma * mb, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_uninformative_feature_gets_near_zero_weight() {
        // Feature distributed identically across classes.
        let mut windows = Vec::new();
        for i in 0..2000 {
            let mut w = window_with(&[(EventType::Check, (i % 5) as u32)]);
            w.goal_label = (i % 2) as u8;
            windows.push(w);
        }
        let model = MomentumModel::fit_with_features(&windows, &[EventType::Check], 1e-6).unwrap();
        assert!(model.coefficients[&EventType::Check].abs() < 0.02);
    }

    #[test]
    fn intercept_only_data_recovers_base_rate() {
        let mut windows = Vec::new();
        for i in 0..5000 {
            let mut w = window_with(&[]);
            w.goal_label = if i % 50 == 0 { 1 } else { 0 };
            windows.push(w);
        }
        let model = MomentumModel::fit_with_features(&windows, &[], 1e-6).unwrap();
        assert_relative_eq!(model.intercept, -3.8918202981106265, epsilon = 0.05);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let model = MomentumModel::reference();
        let json = model.to_json().unwrap();
        let back = MomentumModel::from_json(&json).unwrap();
        assert_eq!(model, back);
        for (e, v) in &model.coefficients {
            assert_eq!(back.coefficients[e].to_bits(), v.to_bits());
        }
    }
}

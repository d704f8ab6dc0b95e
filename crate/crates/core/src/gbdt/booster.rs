//! Gradient boosting on logistic or squared-error loss with inverse-frequency
//! class weights, row subsampling, and early stopping on validation loss.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::FeatureMatrix;
use super::tree::{grow_tree, GrowParams, RegressionTree};
use crate::error::{Error, Result};
use crate::stats::sigmoid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Binary logistic loss; predictions are probabilities.
    Logistic,
    /// Squared error; predictions are raw values.
    SquaredError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeighting {
    None,
    /// Per-row weights proportional to the inverse class frequency, scaled
    /// so the positive and negative weight masses are equal.
    InverseFrequency,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GbdtConfig {
    pub max_depth: usize,
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub row_subsample: f64,
    pub class_weighting: ClassWeighting,
    pub early_stop_rounds: Option<usize>,
    pub min_leaf_weight: f64,
    pub reg_lambda: f64,
    pub objective: Objective,
    pub seed: u64,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        Self {
            max_depth: 6,
            n_rounds: 200,
            learning_rate: 0.05,
            row_subsample: 0.8,
            class_weighting: ClassWeighting::InverseFrequency,
            early_stop_rounds: Some(25),
            min_leaf_weight: 1.0,
            reg_lambda: 1.0,
            objective: Objective::Logistic,
            seed: 0,
        }
    }
}

impl GbdtConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Config(format!(
                "learning_rate must be in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if !(self.row_subsample > 0.0 && self.row_subsample <= 1.0) {
            return Err(Error::Config(format!(
                "row_subsample must be in (0, 1], got {}",
                self.row_subsample
            )));
        }
        if self.n_rounds == 0 {
            return Err(Error::Config("n_rounds must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    /// Initial prediction on the link scale (log-odds for logistic).
    pub base_score: f64,
    pub learning_rate: f64,
    pub objective: Objective,
    pub trees: Vec<RegressionTree>,
    pub feature_names: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FitHistory {
    /// Weighted training loss after each kept round.
    pub train_loss: Vec<f64>,
    /// Weighted validation loss after each kept round, when a validation
    /// set was supplied.
    pub valid_loss: Vec<f64>,
    /// Rounds actually kept (early stopping rolls back to the best round).
    pub best_round: usize,
}

impl GbdtModel {
    /// Raw link-scale scores: `base_score + lr * sum_t leaf_t(row)`.
    fn raw_scores(&self, data: &FeatureMatrix) -> Vec<f64> {
        (0..data.n_rows())
            .map(|i| {
                self.base_score
                    + self.learning_rate
                        * self.trees.iter().map(|t| t.predict_row(data, i)).sum::<f64>()
            })
            .collect()
    }

    /// Predict on rows whose columns are aligned to the training schema by
    /// name; mismatches are errors naming the offending columns.
    pub fn predict(&self, rows: &FeatureMatrix) -> Result<Vec<f64>> {
        let aligned = rows.align_to(&self.feature_names)?;
        let raw = self.raw_scores(&aligned);
        Ok(match self.objective {
            Objective::Logistic => raw.into_iter().map(sigmoid).collect(),
            Objective::SquaredError => raw,
        })
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

/// Per-row weights under the configured class weighting scheme. For
/// inverse-frequency weighting the positive and negative weight masses both
/// equal n/2, so they match to machine precision.
pub fn class_weights(labels: &[f64], scheme: ClassWeighting) -> Result<Vec<f64>> {
    match scheme {
        ClassWeighting::None => Ok(vec![1.0; labels.len()]),
        ClassWeighting::InverseFrequency => {
            let n = labels.len() as f64;
            let n_pos = labels.iter().filter(|&&y| y > 0.5).count() as f64;
            let n_neg = n - n_pos;
            if n_pos == 0.0 || n_neg == 0.0 {
                return Err(Error::SingleClass(
                    "inverse-frequency weighting needs both classes".into(),
                ));
            }
            let w_pos = n / (2.0 * n_pos);
            let w_neg = n / (2.0 * n_neg);
            Ok(labels
                .iter()
                .map(|&y| if y > 0.5 { w_pos } else { w_neg })
                .collect())
        }
    }
}

pub fn fit_gbdt(
    train: &FeatureMatrix,
    train_labels: &[f64],
    valid: Option<(&FeatureMatrix, &[f64])>,
    cfg: &GbdtConfig,
) -> Result<(GbdtModel, FitHistory)> {
    cfg.validate()?;
    let n = train.n_rows();
    if n == 0 || n != train_labels.len() {
        return Err(Error::Data(format!(
            "train has {n} rows and {} labels",
            train_labels.len()
        )));
    }
    if cfg.early_stop_rounds.is_some() && valid.is_none() {
        return Err(Error::Config(
            "early stopping requires a validation set; pass one or disable early_stop_rounds"
                .into(),
        ));
    }
    if let Some((vm, vl)) = valid {
        if vm.n_rows() != vl.len() {
            return Err(Error::Data("validation rows/labels length mismatch".into()));
        }
        vm.align_to(train.names())?;
    }
    if cfg.objective == Objective::Logistic {
        let n_pos = train_labels.iter().filter(|&&y| y > 0.5).count();
        if cfg.class_weighting == ClassWeighting::InverseFrequency && (n_pos == 0 || n_pos == n) {
            return Err(Error::SingleClass(format!("{n_pos} positive of {n} train labels")));
        }
    }

    let weights = match cfg.objective {
        Objective::Logistic => class_weights(train_labels, cfg.class_weighting)?,
        Objective::SquaredError => vec![1.0; n],
    };
    let valid_weights = valid
        .map(|(_, vl)| match cfg.objective {
            Objective::Logistic => {
                // Reuse the train-derived scheme so losses are comparable;
                // fall back to unweighted when valid is single-class.
                class_weights(vl, cfg.class_weighting).unwrap_or_else(|_| vec![1.0; vl.len()])
            }
            Objective::SquaredError => vec![1.0; vl.len()],
        })
        .unwrap_or_default();

    let base_score = match cfg.objective {
        Objective::Logistic => {
            let w_pos: f64 = weights
                .iter()
                .zip(train_labels)
                .filter(|(_, &y)| y > 0.5)
                .map(|(w, _)| w)
                .sum();
            let w_tot: f64 = weights.iter().sum();
            let p = (w_pos / w_tot).clamp(0.01, 0.99);
            (p / (1.0 - p)).ln()
        }
        Objective::SquaredError => {
            train_labels.iter().zip(&weights).map(|(y, w)| y * w).sum::<f64>()
                / weights.iter().sum::<f64>()
        }
    };

    let params = GrowParams {
        max_depth: cfg.max_depth,
        reg_lambda: cfg.reg_lambda,
        min_leaf_weight: cfg.min_leaf_weight,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut raw_train = vec![base_score; n];
    let mut raw_valid = valid.map(|(vm, _)| vec![base_score; vm.n_rows()]);
    let mut trees: Vec<RegressionTree> = Vec::with_capacity(cfg.n_rounds);
    let mut history = FitHistory::default();

    let mut grads = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut best_valid = f64::INFINITY;
    let mut best_round = 0usize;
    let mut stale_rounds = 0usize;

    let valid_aligned = match valid {
        Some((vm, _)) => Some(vm.align_to(train.names())?),
        None => None,
    };

    for _round in 0..cfg.n_rounds {
        for i in 0..n {
            let (g, h) = match cfg.objective {
                Objective::Logistic => {
                    let p = sigmoid(raw_train[i]);
                    (p - train_labels[i], (p * (1.0 - p)).max(1e-16))
                }
                Objective::SquaredError => (raw_train[i] - train_labels[i], 1.0),
            };
            grads[i] = weights[i] * g;
            hess[i] = weights[i] * h;
        }

        let rows: Vec<usize> = if cfg.row_subsample < 1.0 {
            (0..n).filter(|_| rng.random_bool(cfg.row_subsample)).collect()
        } else {
            (0..n).collect()
        };
        if rows.len() < 2 {
            break;
        }

        let tree = grow_tree(train, rows, &grads, &hess, &params);
        for (i, raw) in raw_train.iter_mut().enumerate() {
            *raw += cfg.learning_rate * tree.predict_row(train, i);
        }
        if let (Some(rv), Some(vm)) = (raw_valid.as_mut(), valid_aligned.as_ref()) {
            for (i, raw) in rv.iter_mut().enumerate() {
                *raw += cfg.learning_rate * tree.predict_row(vm, i);
            }
        }
        trees.push(tree);
        history.train_loss.push(weighted_loss(cfg.objective, &raw_train, train_labels, &weights));

        if let (Some(rv), Some((_, vl))) = (raw_valid.as_ref(), valid) {
            let vloss = weighted_loss(cfg.objective, rv, vl, &valid_weights);
            history.valid_loss.push(vloss);
            if vloss < best_valid - 1e-12 {
                best_valid = vloss;
                best_round = trees.len();
                stale_rounds = 0;
            } else {
                stale_rounds += 1;
                if let Some(patience) = cfg.early_stop_rounds {
                    if stale_rounds >= patience {
                        break;
                    }
                }
            }
        } else {
            best_round = trees.len();
        }
    }

    if cfg.early_stop_rounds.is_some() {
        trees.truncate(best_round.max(1));
    }
    history.best_round = trees.len();

    Ok((
        GbdtModel {
            base_score,
            learning_rate: cfg.learning_rate,
            objective: cfg.objective,
            trees,
            feature_names: train.names().to_vec(),
        },
        history,
    ))
}

fn weighted_loss(objective: Objective, raw: &[f64], labels: &[f64], weights: &[f64]) -> f64 {
    let total_w: f64 = weights.iter().sum();
    let loss: f64 = raw
        .iter()
        .zip(labels)
        .zip(weights)
        .map(|((&z, &y), &w)| match objective {
            Objective::Logistic => {
                // log(1 + e^z) - y z, stable.
                let l = if z > 0.0 { z + (1.0 + (-z).exp()).ln() - y * z } else { (1.0 + z.exp()).ln() - y * z };
                w * l
            }
            Objective::SquaredError => w * (z - y) * (z - y),
        })
        .sum();
    loss / total_w
}

/// Grid search over depth/learning-rate/rounds combinations; returns the
/// config with the lowest validation loss (ties keep the earlier entry).
pub fn grid_search(
    train: &FeatureMatrix,
    train_labels: &[f64],
    valid: (&FeatureMatrix, &[f64]),
    base: &GbdtConfig,
    depths: &[usize],
    learning_rates: &[f64],
    rounds: &[usize],
) -> Result<(GbdtConfig, f64)> {
    let mut best: Option<(GbdtConfig, f64)> = None;
    for &d in depths {
        for &lr in learning_rates {
            for &r in rounds {
                let cfg = GbdtConfig {
                    max_depth: d,
                    learning_rate: lr,
                    n_rounds: r,
                    ..base.clone()
                };
                let (_, hist) = fit_gbdt(train, train_labels, Some(valid), &cfg)?;
                let loss = hist
                    .valid_loss
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min);
                if best.as_ref().is_none_or(|(_, b)| loss < *b) {
                    best = Some((cfg, loss));
                }
            }
        }
    }
    best.ok_or_else(|| Error::Config("empty hyperparameter grid".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gbdt::tree::Node;

    fn xor_data(n: usize, seed: u64) -> (FeatureMatrix, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let a = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
            let b = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
            rows.push(vec![a, b]);
            labels.push(if (a > 0.5) != (b > 0.5) { 1.0 } else { 0.0 });
        }
        (FeatureMatrix::from_rows(vec!["a".into(), "b".into()], &rows).unwrap(), labels)
    }

    #[test]
    fn constant_target_saturates_predictions() {
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64]).collect();
        let labels = vec![1.0; 50];
        let data = FeatureMatrix::from_rows(vec!["f".into()], &rows).unwrap();
        let cfg = GbdtConfig {
            class_weighting: ClassWeighting::None,
            early_stop_rounds: None,
            row_subsample: 1.0,
            ..Default::default()
        };
        let (model, _) = fit_gbdt(&data, &labels, None, &cfg).unwrap();
        for p in model.predict(&data).unwrap() {
            assert!(p > 0.99, "prediction {p}");
        }
    }

    #[test]
    fn single_class_with_inverse_frequency_weighting_errors() {
        let data = FeatureMatrix::from_rows(vec!["f".into()], &[vec![0.0], vec![1.0]]).unwrap();
        let cfg = GbdtConfig { early_stop_rounds: None, ..Default::default() };
        assert!(matches!(
            fit_gbdt(&data, &[1.0, 1.0], None, &cfg),
            Err(Error::SingleClass(_))
        ));
    }

    #[test]
    fn early_stopping_without_validation_is_a_config_error() {
        let data = FeatureMatrix::from_rows(vec!["f".into()], &[vec![0.0], vec![1.0]]).unwrap();
        let cfg = GbdtConfig::default();
        assert!(matches!(
            fit_gbdt(&data, &[0.0, 1.0], None, &cfg),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn xor_is_learned_to_high_training_accuracy() {
        let (data, labels) = xor_data(4000, 9);
        let cfg = GbdtConfig { early_stop_rounds: None, ..Default::default() };
        let (model, _) = fit_gbdt(&data, &labels, None, &cfg).unwrap();
        let preds = model.predict(&data).unwrap();
        let correct = preds
            .iter()
            .zip(&labels)
            .filter(|(p, y)| (**p > 0.5) == (**y > 0.5))
            .count();
        let acc = correct as f64 / labels.len() as f64;
        assert!(acc >= 0.99, "training accuracy {acc}");
    }

    #[test]
    fn zero_trees_predict_sigmoid_of_base_score() {
        let model = GbdtModel {
            base_score: 0.4,
            learning_rate: 0.05,
            objective: Objective::Logistic,
            trees: vec![],
            feature_names: vec!["f".into()],
        };
        let data = FeatureMatrix::from_rows(vec!["f".into()], &[vec![1.0], vec![-7.0]]).unwrap();
        let preds = model.predict(&data).unwrap();
        for p in preds {
            assert_eq!(p, sigmoid(0.4));
        }
    }

    #[test]
    fn hand_evaluated_single_tree() {
        let model = GbdtModel {
            base_score: 0.0,
            learning_rate: 1.0,
            objective: Objective::Logistic,
            trees: vec![RegressionTree {
                nodes: vec![
                    Node::Split { feature: 0, threshold: 0.5, left: 1, right: 2 },
                    Node::Leaf { value: -1.0 },
                    Node::Leaf { value: 1.0 },
                ],
            }],
            feature_names: vec!["f".into()],
        };
        let data = FeatureMatrix::from_rows(vec!["f".into()], &[vec![0.0], vec![1.0]]).unwrap();
        let preds = model.predict(&data).unwrap();
        assert!((preds[0] - 0.2689414213699951).abs() < 1e-12);
        assert!((preds[1] - 0.7310585786300049).abs() < 1e-12);
    }

    #[test]
    fn training_loss_is_non_increasing_without_subsampling() {
        let (data, labels) = xor_data(600, 4);
        let cfg = GbdtConfig {
            row_subsample: 1.0,
            early_stop_rounds: None,
            n_rounds: 60,
            ..Default::default()
        };
        let (_, hist) = fit_gbdt(&data, &labels, None, &cfg).unwrap();
        for w in hist.train_loss.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "loss increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn inverse_frequency_weight_masses_balance() {
        let labels: Vec<f64> = (0..1000).map(|i| if i % 37 == 0 { 1.0 } else { 0.0 }).collect();
        let w = class_weights(&labels, ClassWeighting::InverseFrequency).unwrap();
        let pos: f64 = w.iter().zip(&labels).filter(|(_, &y)| y > 0.5).map(|(w, _)| w).sum();
        let neg: f64 = w.iter().zip(&labels).filter(|(_, &y)| y <= 0.5).map(|(w, _)| w).sum();
        assert!((pos - neg).abs() / pos < 1e-9);
    }

    #[test]
    fn grid_search_returns_a_grid_member_with_finite_loss() {
        let (train, train_y) = xor_data(600, 8);
        let (valid, valid_y) = xor_data(200, 9);
        let base = GbdtConfig { early_stop_rounds: Some(10), ..Default::default() };
        let (best, loss) =
            grid_search(&train, &train_y, (&valid, &valid_y), &base, &[2, 6], &[0.1], &[40])
                .unwrap();
        assert!(loss.is_finite());
        assert!(best.max_depth == 2 || best.max_depth == 6);
        assert_eq!(best.n_rounds, 40);
    }

    #[test]
    fn fit_is_seed_deterministic() {
        let (data, labels) = xor_data(500, 3);
        let cfg = GbdtConfig { early_stop_rounds: None, n_rounds: 20, ..Default::default() };
        let (m1, _) = fit_gbdt(&data, &labels, None, &cfg).unwrap();
        let (m2, _) = fit_gbdt(&data, &labels, None, &cfg).unwrap();
        assert_eq!(m1, m2);
    }
}

//! L2-penalized logistic regression fit by full-batch Newton (IRLS) with
//! step halving. Deterministic: no stochastic state, fixed iteration order.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::stats::sigmoid;

#[derive(Debug, Clone)]
pub struct LogisticConfig {
    /// Ridge strength on the non-intercept weights.
    pub l2: f64,
    /// Iteration cap; hitting it is reported, not fatal (unless separated
    /// with l2 = 0).
    pub max_iterations: usize,
    /// Convergence: gradient max-norm below this value.
    pub tol: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self { l2: 1e-6, max_iterations: 100, tol: 1e-8 }
    }
}

#[derive(Debug, Clone)]
pub struct LogisticFit {
    pub intercept: f64,
    pub weights: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Mean penalized negative log-likelihood at the solution.
    pub final_log_loss: f64,
}

impl LogisticFit {
    pub fn linear_predictor(&self, row: &[f64]) -> f64 {
        debug_assert_eq!(row.len(), self.weights.len());
        self.intercept
            + self
                .weights
                .iter()
                .zip(row)
                .map(|(w, x)| w * x)
                .sum::<f64>()
    }

    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        sigmoid(self.linear_predictor(row))
    }
}

/// Fit on a dense design matrix (no intercept column; one is added
/// internally and left unpenalized). Labels must contain both classes.
pub fn fit(x: &DMatrix<f64>, y: &[f64], cfg: &LogisticConfig) -> Result<LogisticFit> {
    let n = x.nrows();
    let p = x.ncols();
    if n != y.len() {
        return Err(Error::Data(format!(
            "design has {n} rows but {} labels",
            y.len()
        )));
    }
    let positives = y.iter().filter(|&&v| v > 0.5).count();
    if positives == 0 || positives == n {
        return Err(Error::SingleClass(format!(
            "{positives} positive of {n} labels"
        )));
    }
    if cfg.l2 < 0.0 {
        return Err(Error::Config(format!("l2 must be >= 0, got {}", cfg.l2)));
    }

    // beta[0] = intercept, beta[1..] = weights.
    let mut beta = DVector::zeros(p + 1);
    let mut loss = penalized_loss(x, y, &beta, cfg.l2);
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..cfg.max_iterations {
        iterations = iter + 1;

        // Gradient of the penalized NLL, negated (ascent direction on LL).
        let mut grad = DVector::zeros(p + 1);
        let mut hess = DMatrix::zeros(p + 1, p + 1);
        for i in 0..n {
            let mut z = beta[0];
            for j in 0..p {
                z += beta[j + 1] * x[(i, j)];
            }
            let pi = sigmoid(z);
            let r = y[i] - pi;
            let w = (pi * (1.0 - pi)).max(1e-10);

            grad[0] += r;
            hess[(0, 0)] += w;
            for j in 0..p {
                let xij = x[(i, j)];
                grad[j + 1] += r * xij;
                hess[(0, j + 1)] += w * xij;
                for k in j..p {
                    hess[(j + 1, k + 1)] += w * xij * x[(i, k)];
                }
            }
        }
        for j in 0..p {
            grad[j + 1] -= cfg.l2 * beta[j + 1];
            hess[(j + 1, j + 1)] += cfg.l2;
        }
        // Mirror the upper triangle.
        for j in 0..p + 1 {
            for k in j + 1..p + 1 {
                hess[(k, j)] = hess[(j, k)];
            }
        }

        if grad.amax() < cfg.tol {
            converged = true;
            break;
        }

        let direction = hess
            .clone()
            .cholesky()
            .map(|ch| ch.solve(&grad))
            .unwrap_or_else(|| {
                hess.clone()
                    .lu()
                    .solve(&grad)
                    .unwrap_or_else(|| grad.clone().scale(1e-3))
            });

        // Step halving on the penalized loss. The acceptance slack scales
        // with the loss magnitude: near the optimum the true decrease sinks
        // below summation noise, and rejecting those steps stalls Newton
        // short of the gradient tolerance.
        let slack = 1e-12 * (1.0 + loss.abs());
        let mut step = 1.0;
        let mut accepted = false;
        while step > 1e-10 {
            let candidate = &beta + &direction * step;
            let cand_loss = penalized_loss(x, y, &candidate, cfg.l2);
            if cand_loss <= loss + slack {
                beta = candidate;
                loss = cand_loss;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    let max_weight = if p > 0 { beta.rows(1, p).amax() } else { 0.0 };
    if cfg.l2 == 0.0 && max_weight > 15.0 {
        return Err(Error::Separation);
    }

    Ok(LogisticFit {
        intercept: beta[0],
        weights: beta.as_slice()[1..].to_vec(),
        iterations,
        converged,
        final_log_loss: loss / n as f64,
    })
}

fn penalized_loss(x: &DMatrix<f64>, y: &[f64], beta: &DVector<f64>, l2: f64) -> f64 {
    let n = x.nrows();
    let p = x.ncols();
    // Neumaier-compensated sum: line-search comparisons need the loss
    // resolved finer than plain summation noise allows.
    let mut total = 0.0f64;
    let mut comp = 0.0f64;
    for i in 0..n {
        let mut z = beta[0];
        for j in 0..p {
            z += beta[j + 1] * x[(i, j)];
        }
        // -log-likelihood, stable form: log(1 + e^z) - y z.
        let term = if z > 0.0 {
            z + (1.0 + (-z).exp()).ln() - y[i] * z
        } else {
            (1.0 + z.exp()).ln() - y[i] * z
        };
        let t = total + term;
        comp += if total.abs() >= term.abs() { (total - t) + term } else { (term - t) + total };
        total = t;
    }
    let ridge: f64 = (0..p).map(|j| beta[j + 1] * beta[j + 1]).sum();
    total + comp + 0.5 * l2 * ridge
}

//! Binary classifier evaluation: rank-statistic AUC with midranks for ties
//! and threshold metrics at 0.5.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub auc: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    /// Mean of per-class recalls; the threshold metric that matters under
    /// inverse-frequency class weighting.
    pub balanced_accuracy: f64,
    pub n_positive: usize,
    pub n_negative: usize,
}

pub fn evaluate_classifier(scores: &[f64], labels: &[f64]) -> Result<EvalReport> {
    if scores.len() != labels.len() {
        return Err(Error::Data("scores/labels length mismatch".into()));
    }
    let n_pos = labels.iter().filter(|&&y| y > 0.5).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass(
            "AUC undefined without both classes".into(),
        ));
    }

    let auc = auc_midrank(scores, labels, n_pos, n_neg);

    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut tn = 0usize;
    for (&s, &y) in scores.iter().zip(labels) {
        match (s > 0.5, y > 0.5) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => {}
        }
    }
    let accuracy = (tp + tn) as f64 / labels.len() as f64;
    let precision = if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 };
    let recall = tp as f64 / n_pos as f64;
    let specificity = tn as f64 / n_neg as f64;

    Ok(EvalReport {
        auc,
        accuracy,
        precision,
        recall,
        balanced_accuracy: 0.5 * (recall + specificity),
        n_positive: n_pos,
        n_negative: n_neg,
    })
}

fn auc_midrank(scores: &[f64], labels: &[f64], n_pos: usize, n_neg: usize) -> f64 {
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite score"));

    // Midranks: tied scores share the average of their 1-based ranks.
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            ranks[k] = midrank;
        }
        i = j + 1;
    }

    let rank_sum_pos: f64 = ranks
        .iter()
        .zip(labels)
        .filter(|(_, &y)| y > 0.5)
        .map(|(r, _)| r)
        .sum();
    (rank_sum_pos - n_pos as f64 * (n_pos as f64 + 1.0) / 2.0) / (n_pos as f64 * n_neg as f64)
}

//! Regression trees with axis-aligned splits grown by exact greedy search
//! over sorted unique feature values.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { value: f64 },
}

/// One regression tree; node 0 is the root. Rows with feature value
/// strictly below the threshold go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn predict_row(&self, data: &FeatureMatrix, row: usize) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { value } => return *value,
                Node::Split { feature, threshold, left, right } => {
                    idx = if data.value(row, *feature) < *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], idx: usize) -> usize {
            match &nodes[idx] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Relative tolerance for gain comparisons. Gains closer than this are a
/// tie, broken by lowest feature id then lowest threshold; a strict
/// comparison would let last-ulp noise in the gradients flip the choice.
pub const GAIN_TIE_TOL: f64 = 1e-9;

/// True when `candidate` should replace `best` under the toleranced
/// comparison. Candidates must be offered in (feature asc, threshold asc)
/// order for the tie rule to hold.
pub fn candidate_improves(best: &Option<SplitCandidate>, candidate: &SplitCandidate) -> bool {
    match best {
        None => true,
        Some(b) => {
            let tol = GAIN_TIE_TOL * (1.0 + b.gain.abs().max(candidate.gain.abs()));
            candidate.gain > b.gain + tol
        }
    }
}

#[derive(Debug, Clone)]
pub struct GrowParams {
    pub max_depth: usize,
    pub reg_lambda: f64,
    pub min_leaf_weight: f64,
}

fn leaf_value(grad_sum: f64, hess_sum: f64, lambda: f64) -> f64 {
    -grad_sum / (hess_sum + lambda)
}

fn score(grad_sum: f64, hess_sum: f64, lambda: f64) -> f64 {
    grad_sum * grad_sum / (hess_sum + lambda)
}

/// Exact greedy split for one node: scan every feature's sorted unique
/// values and place candidate thresholds at midpoints between neighbors.
/// Gain ties break toward the lowest feature id, then the lowest threshold.
pub fn best_split(
    data: &FeatureMatrix,
    rows: &[usize],
    grads: &[f64],
    hess: &[f64],
    params: &GrowParams,
) -> Option<SplitCandidate> {
    let total_g: f64 = rows.iter().map(|&i| grads[i]).sum();
    let total_h: f64 = rows.iter().map(|&i| hess[i]).sum();
    let parent_score = score(total_g, total_h, params.reg_lambda);

    let per_feature: Vec<Option<SplitCandidate>> = (0..data.n_cols())
        .into_par_iter()
        .map(|feature| {
            best_split_for_feature(
                data, rows, grads, hess, params, feature, total_g, total_h, parent_score,
            )
        })
        .collect();

    // Sequential reduce in feature-id order; the toleranced comparison
    // keeps the lowest feature id on ties.
    let mut best: Option<SplitCandidate> = None;
    for cand in per_feature.into_iter().flatten() {
        if candidate_improves(&best, &cand) {
            best = Some(cand);
        }
    }
    best.filter(|b| b.gain > 0.0)
}

#[allow(clippy::too_many_arguments)]
fn best_split_for_feature(
    data: &FeatureMatrix,
    rows: &[usize],
    grads: &[f64],
    hess: &[f64],
    params: &GrowParams,
    feature: usize,
    total_g: f64,
    total_h: f64,
    parent_score: f64,
) -> Option<SplitCandidate> {
    if rows.len() < 2 {
        return None;
    }
    let col = data.column(feature);
    let mut entries: Vec<(f64, f64, f64)> =
        rows.iter().map(|&i| (col[i], grads[i], hess[i])).collect();
    entries.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite feature value"));

    let mut best: Option<SplitCandidate> = None;
    let mut left_g = 0.0;
    let mut left_h = 0.0;
    for w in 0..entries.len() - 1 {
        let (v, g, h) = entries[w];
        left_g += g;
        left_h += h;
        let next_v = entries[w + 1].0;
        if next_v <= v {
            continue;
        }
        let right_g = total_g - left_g;
        let right_h = total_h - left_h;
        if left_h < params.min_leaf_weight || right_h < params.min_leaf_weight {
            continue;
        }
        let gain = 0.5
            * (score(left_g, left_h, params.reg_lambda)
                + score(right_g, right_h, params.reg_lambda)
                - parent_score);
        let cand = SplitCandidate { feature, threshold: 0.5 * (v + next_v), gain };
        // Ascending threshold scan: ties keep the lowest threshold.
        if candidate_improves(&best, &cand) {
            best = Some(cand);
        }
    }
    best
}

/// Grow one tree on the given rows by depth-limited greedy splitting.
pub(crate) fn grow_tree(
    data: &FeatureMatrix,
    rows: Vec<usize>,
    grads: &[f64],
    hess: &[f64],
    params: &GrowParams,
) -> RegressionTree {
    let mut nodes = Vec::new();
    grow_node(data, rows, grads, hess, params, 0, &mut nodes);
    RegressionTree { nodes }
}

fn grow_node(
    data: &FeatureMatrix,
    rows: Vec<usize>,
    grads: &[f64],
    hess: &[f64],
    params: &GrowParams,
    depth: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let g: f64 = rows.iter().map(|&i| grads[i]).sum();
    let h: f64 = rows.iter().map(|&i| hess[i]).sum();

    let make_leaf = |nodes: &mut Vec<Node>| {
        let idx = nodes.len();
        nodes.push(Node::Leaf { value: leaf_value(g, h, params.reg_lambda) });
        idx
    };

    if depth >= params.max_depth || rows.len() < 2 {
        return make_leaf(nodes);
    }
    let Some(split) = best_split(data, &rows, grads, hess, params) else {
        return make_leaf(nodes);
    };

    let col = data.column(split.feature);
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
        rows.into_iter().partition(|&i| col[i] < split.threshold);

    let idx = nodes.len();
    nodes.push(Node::Split { feature: split.feature, threshold: split.threshold, left: 0, right: 0 });
    let left = grow_node(data, left_rows, grads, hess, params, depth + 1, nodes);
    let right = grow_node(data, right_rows, grads, hess, params, depth + 1, nodes);
    if let Node::Split { left: l, right: r, .. } = &mut nodes[idx] {
        *l = left;
        *r = right;
    }
    idx
}

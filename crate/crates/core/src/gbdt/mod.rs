//! From-scratch gradient-boosted decision trees for goal-probability (xG)
//! estimation, plus the composite pressure metric.

pub mod booster;
pub mod data;
pub mod metrics;
pub mod tree;

pub use booster::{
    class_weights, fit_gbdt, grid_search, ClassWeighting, FitHistory, GbdtConfig, GbdtModel,
    Objective,
};
pub use data::FeatureMatrix;
pub use metrics::{evaluate_classifier, EvalReport};
pub use tree::{best_split, candidate_improves, GrowParams, Node, RegressionTree, SplitCandidate, GAIN_TIE_TOL};

/// Composite metric `C = M + p_xg`: instantaneous pressure plus scoring
/// likelihood. `m` must be a momentum score (strictly positive).
pub fn composite_c(m: f64, p_xg: f64) -> f64 {
    debug_assert!(m > 0.0, "momentum score must be positive");
    m + p_xg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composite_is_plain_sum() {
        assert_eq!(composite_c(1.0, 0.02), 1.02);
        assert_eq!(composite_c(1.0, 0.0), 1.0);
    }

    #[test]
    fn composite_is_monotone_in_both_arguments() {
        let base = composite_c(1.1, 0.3);
        assert!(composite_c(1.2, 0.3) > base);
        assert!(composite_c(1.1, 0.4) > base);
    }
}

//! Causal analysis of formation/sequence adoption: propensity scores,
//! X-Learner effect estimation, bootstrap uncertainty, covariate balance.

pub mod balance;
pub mod bootstrap;
pub mod propensity;
pub mod xlearner;

pub use balance::{covariate_balance, CovariateBalance};
pub use bootstrap::{bootstrap_ci, normal_two_sided_p, BootstrapSummary};
pub use propensity::{estimate_propensity, PropensityReport, PROPENSITY_CLIP};
pub use xlearner::{x_learner_ate, CausalReport, PropensityHistograms, XLearnerConfig};

use serde::{Deserialize, Serialize};

/// Treatment indicator per analyzed window: member of the optimal offensive
/// cluster AND deviation in the lowest quartile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreatmentAssignment {
    pub treated: Vec<bool>,
}

impl TreatmentAssignment {
    /// Combine cluster membership with the positioning flag.
    pub fn from_flags(in_optimal_cluster: &[bool], optimally_positioned: &[bool]) -> Self {
        let treated = in_optimal_cluster
            .iter()
            .zip(optimally_positioned)
            .map(|(&a, &b)| a && b)
            .collect();
        TreatmentAssignment { treated }
    }
}

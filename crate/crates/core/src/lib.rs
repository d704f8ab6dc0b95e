//! Event-stream analytics for hockey: momentum weighting of micro-events,
//! expected-goals modeling, sequence scoring, formation discovery, and causal
//! effect estimation, plus a seeded synthetic generator for end-to-end
//! validation against planted ground truth.
//!
//! The pipeline stages map onto the top-level modules:
//!
//! 1. [`ingest`] — parse raw event streams, standardize coordinates, build
//!    overlapping 30-second windows, run collinearity diagnostics.
//! 2. [`momentum`] — interpretable logistic weighting of event counts and the
//!    per-window momentum score.
//! 3. [`gbdt`] — gradient-boosted trees for goal-probability (xG) estimation
//!    and the composite momentum + xG metric.
//! 4. [`lstm`] — token-embedding LSTM sequence classifier and the extended
//!    composite score.
//! 5. [`formation`] — PCA + K-Means formation archetypes, deviation metric,
//!    convex-hull comparison, defensive positioning.
//! 6. [`sequences`] — offensive chain mining and ranking.
//! 7. [`causal`] — propensity scores, X-Learner treatment-effect estimation,
//!    bootstrap uncertainty, covariate balance.
//! 8. [`synth`] — seeded generators with planted ground truth.

pub mod causal;
pub mod error;
pub mod events;
pub mod formation;
pub mod gbdt;
pub mod ingest;
pub mod logistic;
pub mod lstm;
pub mod momentum;
pub mod sequences;
pub mod split;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use events::{EventRecord, EventType, PlayerRole, TeamSide};
pub use ingest::windows::WindowFeatures;

//! Seeded synthetic event streams with planted ground truth.
//!
//! Window-level goal odds follow the logistic count model with the planted
//! coefficients; windows carrying the planted pattern get an extra odds
//! multiplier, and compact-formation windows get a rate tilt toward
//! positive-weight events (plus an optional log-odds boost). Player
//! positions mix a compact "wedge" mode against a diffuse mode so formation
//! clustering has a true answer. A window-level confounded treatment
//! analogue with a planted effect backs the causal benchmarks.
//!
//! The stream is built in non-overlapping 30-second blocks, so windowing the
//! output with stride = window = 30 reproduces the generator's windows
//! exactly, and every planted quantity is recorded in [`GroundTruth`].

pub mod causal_bench;

pub use causal_bench::{generate_causal, CausalDataset};

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{EventRecord, EventType, PlayerRole, TeamSide};
use crate::momentum::MomentumModel;
use crate::sequences::default_terminators;
use crate::stats::sigmoid;

pub const WINDOW_S: f64 = 30.0;

/// Role centers for the compact "wedge" mode: forward triangle in the right
/// half-space with defenders pinched high.
pub const COMPACT_CENTERS: [[f64; 2]; 5] =
    [[78.0, 4.0], [74.0, -10.0], [65.0, 12.0], [52.0, 14.0], [50.0, -16.0]];

/// Role centers for the diffuse mode, spread wide through the zone.
pub const DIFFUSE_CENTERS: [[f64; 2]; 5] =
    [[65.0, 30.0], [40.0, -32.0], [82.0, -28.0], [30.0, 30.0], [28.0, -34.0]];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_games: usize,
    pub events_per_game: usize,
    /// Log-odds weights per event count; defaults to the published
    /// reference coefficients.
    pub planted_betas: BTreeMap<EventType, f64>,
    pub base_goal_rate: f64,
    /// Token run inserted verbatim (as its own chain) into pattern windows.
    pub planted_pattern: Vec<EventType>,
    /// Goal-odds multiplier applied to pattern windows.
    pub pattern_odds_multiplier: f64,
    /// Probability that a window carries the planted pattern.
    pub pattern_rate: f64,
    /// Constant treatment effect for the causal analogue.
    pub planted_ate: f64,
    /// Slope of the covariate-driven treatment assignment in the causal
    /// analogue; 0 means randomized.
    pub confounding_strength: f64,
    /// Probability a window uses the compact formation mode.
    pub compact_rate: f64,
    /// Extra goal log-odds for compact windows (not expressible through
    /// counts; set to 0 for clean coefficient-recovery runs).
    pub compact_logit_boost: f64,
    /// Rate tilt for compact windows: positive-weight event rates scale by
    /// (1 + tilt), negative-weight rates by (1 - tilt).
    pub formation_tilt: f64,
    /// Regulation span of one game in seconds; with `events_per_game` this
    /// sets the event density per window.
    pub game_span_s: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            n_games: 50,
            events_per_game: 3000,
            planted_betas: MomentumModel::reference().coefficients,
            base_goal_rate: 0.02,
            planted_pattern: vec![EventType::PenaltyDrawn, EventType::Lpr, EventType::Shot],
            pattern_odds_multiplier: 8.0,
            pattern_rate: 0.08,
            planted_ate: 0.12,
            confounding_strength: 1.0,
            compact_rate: 0.35,
            compact_logit_boost: 0.4,
            formation_tilt: 0.35,
            game_span_s: 3000.0,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if !(0.0 < self.base_goal_rate && self.base_goal_rate < 1.0) {
            return Err(Error::Config(format!(
                "base_goal_rate must be in (0, 1), got {}",
                self.base_goal_rate
            )));
        }
        if self.n_games == 0 || self.events_per_game == 0 {
            return Err(Error::Config("n_games and events_per_game must be >= 1".into()));
        }
        if self.game_span_s < WINDOW_S || self.game_span_s.is_nan() {
            return Err(Error::Config(format!(
                "game_span_s must be >= {WINDOW_S}, got {}",
                self.game_span_s
            )));
        }
        for e in self.planted_betas.keys() {
            if !EventType::MODELED.contains(e) {
                return Err(Error::Config(format!(
                    "planted beta for non-modeled event '{e}'"
                )));
            }
        }
        if self.pattern_odds_multiplier <= 0.0 {
            return Err(Error::Config("pattern_odds_multiplier must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.pattern_rate) || !(0.0..=1.0).contains(&self.compact_rate) {
            return Err(Error::Config("pattern_rate and compact_rate must be in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn windows_per_game(&self) -> usize {
        ((self.game_span_s / WINDOW_S) as usize).max(1)
    }
}

/// Every planted quantity, sufficient to score any window with its true
/// goal probability (and hence compute the Bayes-optimal AUC).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Calibrated intercept that hits the configured base goal rate.
    pub intercept: f64,
    pub betas: BTreeMap<EventType, f64>,
    pub pattern: Vec<EventType>,
    pub pattern_odds_multiplier: f64,
    pub compact_logit_boost: f64,
    /// Window ids in generation order, matching `build_windows` output for
    /// stride = window = 30 on the emitted stream.
    pub window_ids: Vec<String>,
    /// True per-window goal probability.
    pub window_true_probs: Vec<f64>,
    pub window_has_pattern: Vec<bool>,
    pub window_is_compact: Vec<bool>,
    pub window_goal: Vec<bool>,
}

/// Base per-window Poisson rates for the modeled events. Events with
/// strong planted weights keep rates comfortably above 1 so coefficient
/// recovery is well identified at desk-scale window counts.
fn base_rates() -> BTreeMap<EventType, f64> {
    use EventType::*;
    [
        (FaceoffSuccess, 1.5),
        (Lpr, 2.0),
        (Pass, 3.6),
        (Reception, 3.2),
        (Block, 1.2),
        (PuckProtection, 1.0),
        (Carry, 1.6),
        (Check, 1.3),
        (ControlledEntryAgainst, 1.0),
        (ControlledEntry, 1.2),
        (ControlledExit, 1.4),
        (Icing, 1.4),
        (DumpOut, 1.5),
        (DumpIn, 1.5),
        (Shot, 1.6),
        (Penalty, 1.4),
        (PenaltyDrawn, 1.4),
        (Save, 1.4),
        (Rebound, 1.4),
        (Offside, 1.4),
    ]
    .into_iter()
    .collect()
}

struct WindowPlan {
    game: usize,
    block: usize,
    tokens: Vec<EventType>,
    compact: bool,
    has_pattern: bool,
    /// Linear predictor without the intercept (counts + boosts).
    partial_logit: f64,
}

/// Generate the full event stream plus ground truth.
pub fn generate(cfg: &SynthConfig) -> Result<(Vec<EventRecord>, GroundTruth)> {
    cfg.validate()?;
    let windows_per_game = cfg.windows_per_game();
    let target_window_events = cfg.events_per_game as f64 / windows_per_game as f64;
    let base = base_rates();
    let base_total: f64 = base.values().sum();
    let scale = target_window_events / base_total;
    let terminators = default_terminators();

    // Pass 1: plan every window (counts, mode, pattern, token order).
    let mut plan_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    plan_rng.set_stream(1);
    let mut plans: Vec<WindowPlan> = Vec::with_capacity(cfg.n_games * windows_per_game);
    for game in 0..cfg.n_games {
        for block in 0..windows_per_game {
            let compact = plan_rng.random_bool(cfg.compact_rate);
            let has_pattern =
                !cfg.planted_pattern.is_empty() && plan_rng.random_bool(cfg.pattern_rate);

            let mut counts: BTreeMap<EventType, u32> = BTreeMap::new();
            let mut tokens: Vec<EventType> = Vec::new();
            for (&e, &r) in &base {
                let beta = cfg.planted_betas.get(&e).copied().unwrap_or(0.0);
                let tilt = if compact {
                    if beta >= 0.0 { 1.0 + cfg.formation_tilt } else { 1.0 - cfg.formation_tilt }
                } else {
                    1.0
                };
                let lambda = (r * scale * tilt).max(1e-9);
                let k = Poisson::new(lambda).expect("positive rate").sample(&mut plan_rng) as u32;
                if k > 0 {
                    counts.insert(e, k);
                    for _ in 0..k {
                        tokens.push(e);
                    }
                }
            }
            tokens.shuffle(&mut plan_rng);

            if has_pattern {
                // The pattern must form its own chain. With a terminator in
                // the filler, rotate the unterminated tail to the front and
                // append the pattern (keeping it visible to tail-truncating
                // sequence models); without one, prepend it so the window
                // start is its chain boundary.
                match tokens.iter().rposition(|t| terminators.contains(t)) {
                    Some(last_term) => {
                        tokens.rotate_left(last_term + 1);
                        tokens.extend_from_slice(&cfg.planted_pattern);
                    }
                    None => {
                        tokens.splice(0..0, cfg.planted_pattern.iter().copied());
                    }
                }
                for &t in &cfg.planted_pattern {
                    *counts.entry(t).or_insert(0) += 1;
                }
            }

            let mut partial_logit: f64 = counts
                .iter()
                .map(|(e, &k)| cfg.planted_betas.get(e).copied().unwrap_or(0.0) * k as f64)
                .sum();
            if has_pattern {
                partial_logit += cfg.pattern_odds_multiplier.ln();
            }
            if compact {
                partial_logit += cfg.compact_logit_boost;
            }

            plans.push(WindowPlan { game, block, tokens, compact, has_pattern, partial_logit });
        }
    }

    // Calibrate the intercept so the mean goal probability hits the target.
    let partials: Vec<f64> = plans.iter().map(|p| p.partial_logit).collect();
    let intercept = calibrate_intercept(&partials, cfg.base_goal_rate);

    // Pass 2: draw labels and materialize events.
    let mut label_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    label_rng.set_stream(2);
    let mut emit_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    emit_rng.set_stream(3);
    let window_noise = Normal::new(0.0, 3.0).expect("valid sigma");
    let event_noise = Normal::new(0.0, 4.0).expect("valid sigma");

    let period_len = windows_per_game as f64 * WINDOW_S / 3.0;

    let mut events: Vec<EventRecord> = Vec::with_capacity(cfg.n_games * cfg.events_per_game);
    let mut truth = GroundTruth {
        intercept,
        betas: cfg.planted_betas.clone(),
        pattern: cfg.planted_pattern.clone(),
        pattern_odds_multiplier: cfg.pattern_odds_multiplier,
        compact_logit_boost: cfg.compact_logit_boost,
        window_ids: Vec::with_capacity(plans.len()),
        window_true_probs: Vec::with_capacity(plans.len()),
        window_has_pattern: Vec::with_capacity(plans.len()),
        window_is_compact: Vec::with_capacity(plans.len()),
        window_goal: Vec::with_capacity(plans.len()),
    };

    for plan in &plans {
        let game_id = format!("synth-{:04}", plan.game);
        let start = plan.block as f64 * WINDOW_S;
        let true_p = sigmoid(intercept + plan.partial_logit);
        let goal = label_rng.random_bool(true_p);

        truth.window_ids.push(format!("{game_id}:{start}"));
        truth.window_true_probs.push(true_p);
        truth.window_has_pattern.push(plan.has_pattern);
        truth.window_is_compact.push(plan.compact);
        truth.window_goal.push(goal);

        let centers = if plan.compact { &COMPACT_CENTERS } else { &DIFFUSE_CENTERS };
        let mut role_centers = [[0.0f64; 2]; 5];
        for r in 0..5 {
            role_centers[r] = [
                centers[r][0] + window_noise.sample(&mut emit_rng),
                centers[r][1] + window_noise.sample(&mut emit_rng),
            ];
        }

        let n_emit = plan.tokens.len() + goal as usize;
        let mut times: Vec<f64> = (0..n_emit)
            .map(|_| start + emit_rng.random_range(0.0..WINDOW_S))
            .collect();
        times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));

        // Roles: guarantee all five appear, then draw uniformly.
        let mut roles: Vec<PlayerRole> = Vec::with_capacity(n_emit);
        let mut first_five = [
            PlayerRole::F1,
            PlayerRole::F2,
            PlayerRole::F3,
            PlayerRole::D1,
            PlayerRole::D2,
        ];
        first_five.shuffle(&mut emit_rng);
        for i in 0..n_emit {
            roles.push(if i < 5 {
                first_five[i]
            } else {
                first_five[emit_rng.random_range(0..5)]
            });
        }

        let period = (1 + (start / period_len) as u8).min(3);
        // Emit in raw rink coordinates: mirror the attack-frame positions
        // for periods where home attacks left, so standardization is a real
        // round trip.
        let flip = crate::ingest::attacks_left(period, TeamSide::Home);

        let goal_time_idx = n_emit.saturating_sub(1);
        for (i, &tok) in plan
            .tokens
            .iter()
            .chain(goal.then_some(&EventType::Goal))
            .enumerate()
        {
            let role = roles[i];
            let slot = role.position_slot().expect("five on-ice roles");
            let mut x = role_centers[slot][0] + event_noise.sample(&mut emit_rng);
            let mut y = role_centers[slot][1] + event_noise.sample(&mut emit_rng);
            x = x.clamp(-99.0, 99.0);
            y = y.clamp(-42.0, 42.0);
            if flip {
                x = -x;
                y = -y;
            }
            let clock_s = if tok == EventType::Goal { times[goal_time_idx] } else { times[i] };
            events.push(EventRecord {
                game_id: game_id.clone(),
                period,
                clock_s,
                team_side: TeamSide::Home,
                event_type: tok,
                x,
                y,
                player_role: role,
                is_shootout: false,
                standardized: false,
            });
        }
    }

    Ok((events, truth))
}

/// Bisect the intercept so that `mean(sigmoid(b0 + partial))` equals the
/// target rate.
fn calibrate_intercept(partials: &[f64], target: f64) -> f64 {
    let mean_p = |b0: f64| {
        partials.iter().map(|&l| sigmoid(b0 + l)).sum::<f64>() / partials.len() as f64
    };
    let (mut lo, mut hi) = (-30.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_p(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

impl GroundTruth {
    /// True goal probability per window, keyed by window id.
    pub fn true_prob_by_id(&self) -> BTreeMap<String, f64> {
        self.window_ids
            .iter()
            .cloned()
            .zip(self.window_true_probs.iter().copied())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{build_windows, standardize_coordinates};

    #[test]
    fn same_seed_is_bit_identical() {
        let cfg = SynthConfig { n_games: 3, events_per_game: 600, ..Default::default() };
        let (e1, t1) = generate(&cfg).unwrap();
        let (e2, t2) = generate(&cfg).unwrap();
        assert_eq!(e1, e2);
        assert_eq!(t1.window_true_probs, t2.window_true_probs);
        let cfg2 = SynthConfig { seed: 8, ..cfg };
        let (e3, _) = generate(&cfg2).unwrap();
        assert_ne!(e1, e3);
    }

    #[test]
    fn zero_betas_hit_the_base_rate() {
        let cfg = SynthConfig {
            n_games: 500,
            events_per_game: 3000,
            planted_betas: EventType::MODELED.iter().map(|&e| (e, 0.0)).collect(),
            pattern_rate: 0.0,
            compact_logit_boost: 0.0,
            formation_tilt: 0.0,
            ..Default::default()
        };
        let (events, truth) = generate(&cfg).unwrap();
        let goals = truth.window_goal.iter().filter(|&&g| g).count();
        let rate = goals as f64 / truth.window_goal.len() as f64;
        assert!(
            (rate - 0.02).abs() < 0.003,
            "empirical rate {rate} over {} windows",
            truth.window_goal.len()
        );
        assert!(truth.window_goal.len() >= 50000);
        assert!(!events.is_empty());
    }

    #[test]
    fn windows_align_with_ground_truth_ids_and_labels() {
        let cfg = SynthConfig { n_games: 4, events_per_game: 900, ..Default::default() };
        let (events, truth) = generate(&cfg).unwrap();
        let std = standardize_coordinates(events);
        let windows = build_windows(&std, WINDOW_S, WINDOW_S).unwrap();
        assert_eq!(windows.len(), truth.window_ids.len());
        for (w, (id, &goal)) in windows
            .iter()
            .zip(truth.window_ids.iter().zip(&truth.window_goal))
        {
            assert_eq!(&w.window_id, id);
            assert_eq!(w.goal_label == 1, goal);
        }
    }

    #[test]
    fn compact_windows_are_tighter_than_diffuse() {
        let cfg = SynthConfig { n_games: 10, events_per_game: 1500, ..Default::default() };
        let (events, truth) = generate(&cfg).unwrap();
        let std = standardize_coordinates(events);
        let windows = build_windows(&std, WINDOW_S, WINDOW_S).unwrap();

        let mean_pairwise = |w: &crate::ingest::windows::WindowFeatures| -> Option<f64> {
            let v = w.positions.full_vector()?;
            let mut total = 0.0;
            let mut pairs = 0;
            for a in 0..5 {
                for b in a + 1..5 {
                    let dx = v[2 * a] - v[2 * b];
                    let dy = v[2 * a + 1] - v[2 * b + 1];
                    total += (dx * dx + dy * dy).sqrt();
                    pairs += 1;
                }
            }
            Some(total / pairs as f64)
        };

        let mut compact_d = Vec::new();
        let mut diffuse_d = Vec::new();
        for (w, &compact) in windows.iter().zip(&truth.window_is_compact) {
            if let Some(d) = mean_pairwise(w) {
                if compact {
                    compact_d.push(d);
                } else {
                    diffuse_d.push(d);
                }
            }
        }
        let mc = crate::stats::mean(&compact_d);
        let md = crate::stats::mean(&diffuse_d);
        assert!(mc < md, "compact {mc} vs diffuse {md}");
    }

    #[test]
    fn pattern_windows_contain_the_exact_chain() {
        let cfg = SynthConfig {
            n_games: 6,
            events_per_game: 1200,
            pattern_rate: 0.3,
            ..Default::default()
        };
        let (events, truth) = generate(&cfg).unwrap();
        let std = standardize_coordinates(events);
        let windows = build_windows(&std, WINDOW_S, WINDOW_S).unwrap();
        let chains = crate::sequences::extract_chains(&windows);
        let planted = chains
            .iter()
            .find(|c| c.tokens == cfg.planted_pattern)
            .expect("planted pattern mined");
        let n_pattern_windows = truth.window_has_pattern.iter().filter(|&&p| p).count();
        assert!(n_pattern_windows > 0);
        // every pattern window produced at least the planted occurrence
        assert!(planted.occurrences >= n_pattern_windows);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = SynthConfig { base_goal_rate: 0.0, ..Default::default() };
        assert!(generate(&cfg).is_err());
    }
}

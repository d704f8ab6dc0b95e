//! Aggregation of standardized events into overlapping 30-second windows.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{EventRecord, EventType};

/// Per-role mean coordinates over a window. A slot is `None` when the role
/// produced no event in the window.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RolePositions {
    /// Mean (x, y) for F1, F2, F3, D1, D2 in that order.
    pub means: [Option<[f64; 2]>; 5],
}

impl RolePositions {
    /// The flattened ten-dimensional vector (x1, y1, ..., x5, y5), or `None`
    /// if any role is missing. Formation analysis requires the full vector.
    pub fn full_vector(&self) -> Option<[f64; 10]> {
        let mut v = [0.0; 10];
        for (i, slot) in self.means.iter().enumerate() {
            let [x, y] = (*slot)?;
            v[2 * i] = x;
            v[2 * i + 1] = y;
        }
        Some(v)
    }

    pub fn is_complete(&self) -> bool {
        self.means.iter().all(|m| m.is_some())
    }
}

/// Feature bundle for one 30-second window: event counts, goal label,
/// per-role positional means, and the ordered token sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowFeatures {
    pub window_id: String,
    pub game_id: String,
    pub window_start_s: f64,
    /// Count of each modeled event type in the window. Label events
    /// (goal, assist) are excluded to prevent leakage into count features.
    pub counts: BTreeMap<EventType, u32>,
    /// 1 iff at least one goal event occurs inside the window.
    pub goal_label: u8,
    pub positions: RolePositions,
    /// Ordered token list, pre pad/truncate. Goal tokens are dropped (they
    /// define the label); assists are retained.
    pub event_token_sequence: Vec<EventType>,
}

impl WindowFeatures {
    pub fn count(&self, e: EventType) -> u32 {
        self.counts.get(&e).copied().unwrap_or(0)
    }
}

/// Slice each game into windows of `window_s` seconds every `stride_s`
/// seconds and aggregate counts, labels, positions, and token sequences.
///
/// Shootout rows and any event with period > 4 are dropped first. A window
/// with start `s` covers clock times `[s, s + window_s)`. Starts run at
/// stride multiples while the window fits inside the stride-aligned span of
/// the game, so for stride == window the windows tile the game exactly and
/// every regulation event is counted once.
pub fn build_windows(
    events: &[EventRecord],
    window_s: f64,
    stride_s: f64,
) -> Result<Vec<WindowFeatures>> {
    if window_s <= 0.0 || !window_s.is_finite() {
        return Err(Error::Config(format!("window_s must be > 0, got {window_s}")));
    }
    if stride_s <= 0.0 || !stride_s.is_finite() {
        return Err(Error::Config(format!("stride_s must be > 0, got {stride_s}")));
    }

    // Regulation events only, grouped by game in first-appearance order.
    let mut game_order: Vec<String> = Vec::new();
    let mut by_game: BTreeMap<String, Vec<&EventRecord>> = BTreeMap::new();
    for e in events {
        if e.is_shootout || e.period > 4 {
            continue;
        }
        if !by_game.contains_key(&e.game_id) {
            game_order.push(e.game_id.clone());
        }
        by_game.entry(e.game_id.clone()).or_default().push(e);
    }

    let mut out = Vec::new();
    for game_id in &game_order {
        let mut game_events = by_game.remove(game_id).expect("game present");
        game_events.sort_by(|a, b| a.clock_s.partial_cmp(&b.clock_s).expect("finite clock"));

        let max_clock = game_events
            .last()
            .map(|e| e.clock_s)
            .expect("non-empty game group");
        // Stride-aligned span that covers the last event.
        let span = stride_s * ((max_clock / stride_s).floor() + 1.0);

        let mut k = 0u64;
        loop {
            let start = k as f64 * stride_s;
            if start + window_s > span + 1e-9 {
                break;
            }
            let lo = game_events.partition_point(|e| e.clock_s < start);
            let hi = game_events.partition_point(|e| e.clock_s < start + window_s);
            out.push(aggregate(game_id, start, &game_events[lo..hi]));
            k += 1;
        }
    }
    Ok(out)
}

fn aggregate(game_id: &str, start: f64, events: &[&EventRecord]) -> WindowFeatures {
    let mut counts: BTreeMap<EventType, u32> = BTreeMap::new();
    let mut goal_label = 0u8;
    let mut sums = [[0.0f64; 2]; 5];
    let mut ns = [0usize; 5];
    let mut tokens = Vec::with_capacity(events.len());

    for e in events {
        match e.event_type {
            EventType::Goal => {
                goal_label = 1;
            }
            EventType::Assist => {
                tokens.push(EventType::Assist);
            }
            EventType::Pad => {}
            other => {
                *counts.entry(other).or_insert(0) += 1;
                tokens.push(other);
            }
        }
        if let Some(slot) = e.player_role.position_slot() {
            sums[slot][0] += e.x;
            sums[slot][1] += e.y;
            ns[slot] += 1;
        }
    }

    let mut positions = RolePositions::default();
    for i in 0..5 {
        if ns[i] > 0 {
            positions.means[i] = Some([sums[i][0] / ns[i] as f64, sums[i][1] / ns[i] as f64]);
        }
    }

    WindowFeatures {
        window_id: format!("{game_id}:{start}"),
        game_id: game_id.to_string(),
        window_start_s: start,
        counts,
        goal_label,
        positions,
        event_token_sequence: tokens,
    }
}

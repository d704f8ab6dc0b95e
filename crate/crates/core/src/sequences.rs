//! Offensive chain mining and ranking.
//!
//! A chain is a maximal run of offensive events terminated by a shot, goal,
//! or possession-loss event; the terminator closes (and belongs to) the
//! chain. Runs left open at the end of a window are not chains. Patterns are
//! deduplicated by token sequence with occurrence counts.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::EventType;
use crate::ingest::windows::WindowFeatures;
use crate::lstm::{encode_sequence, LstmModel};

/// Default chain terminators: shot/goal plus possession-loss events.
pub fn default_terminators() -> BTreeSet<EventType> {
    [
        EventType::Shot,
        EventType::Goal,
        EventType::ControlledExit,
        EventType::Icing,
        EventType::DumpOut,
        EventType::Offside,
        EventType::Save,
    ]
    .into_iter()
    .collect()
}

/// A deduplicated chain pattern with its source windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub tokens: Vec<EventType>,
    /// One entry per occurrence (window ids repeat if the pattern occurs
    /// twice in one window).
    pub window_ids: Vec<String>,
    pub occurrences: usize,
}

impl Chain {
    pub fn pattern(&self) -> String {
        pattern_string(&self.tokens)
    }
}

pub fn pattern_string(tokens: &[EventType]) -> String {
    tokens
        .iter()
        .map(|t| t.as_str())
        .collect::<Vec<_>>()
        .join(" -> ")
}

/// Extract chains from every window's token sequence with the default
/// terminator set.
pub fn extract_chains(windows: &[WindowFeatures]) -> Vec<Chain> {
    extract_chains_with(windows, &default_terminators())
}

pub fn extract_chains_with(
    windows: &[WindowFeatures],
    terminators: &BTreeSet<EventType>,
) -> Vec<Chain> {
    let mut by_pattern: BTreeMap<Vec<EventType>, Chain> = BTreeMap::new();
    for w in windows {
        let mut run: Vec<EventType> = Vec::new();
        for &tok in &w.event_token_sequence {
            run.push(tok);
            if terminators.contains(&tok) {
                let chain = by_pattern.entry(run.clone()).or_insert_with(|| Chain {
                    tokens: run.clone(),
                    window_ids: Vec::new(),
                    occurrences: 0,
                });
                chain.window_ids.push(w.window_id.clone());
                chain.occurrences += 1;
                run.clear();
            }
        }
        // unterminated tail dropped: a chain requires a terminator
    }
    by_pattern.into_values().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedChain {
    pub pattern: String,
    pub tokens: Vec<EventType>,
    pub occurrences: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    /// Descending by score; ties in pattern-lexicographic order.
    pub entries: Vec<RankedChain>,
    /// Relative mean-composite uplift of chains containing `lpr` vs the
    /// rest; `None` when either side is empty.
    pub lpr_uplift: Option<f64>,
}

/// Rank patterns by mean composite score over their source windows.
/// `window_composites` maps window id to the window's composite score.
/// Patterns with fewer than `min_occurrences` are dropped before ranking:
/// a one-off chain inside a single hot window says nothing repeatable.
pub fn rank_chains(
    chains: &[Chain],
    window_composites: &BTreeMap<String, f64>,
    top_n: usize,
    min_occurrences: usize,
) -> Result<ChainReport> {
    let mut entries = Vec::with_capacity(chains.len());
    for chain in chains {
        if chain.occurrences < min_occurrences.max(1) {
            continue;
        }
        let mut total = 0.0;
        for wid in &chain.window_ids {
            let s = window_composites.get(wid).ok_or_else(|| {
                Error::Data(format!("no composite score for window {wid}"))
            })?;
            total += s;
        }
        entries.push(RankedChain {
            pattern: chain.pattern(),
            tokens: chain.tokens.clone(),
            occurrences: chain.occurrences,
            score: total / chain.window_ids.len() as f64,
        });
    }
    let lpr_uplift = token_uplift(&entries, EventType::Lpr);
    sort_ranked(&mut entries);
    entries.truncate(top_n);
    Ok(ChainReport { entries, lpr_uplift })
}

/// Relative uplift of the mean score of patterns containing `token` over
/// those that do not; undefined (not zero) when either group is empty.
pub fn token_uplift(entries: &[RankedChain], token: EventType) -> Option<f64> {
    let (with, without): (Vec<&RankedChain>, Vec<&RankedChain>) =
        entries.iter().partition(|e| e.tokens.contains(&token));
    if with.is_empty() || without.is_empty() {
        return None;
    }
    let mean = |xs: &[&RankedChain]| xs.iter().map(|e| e.score).sum::<f64>() / xs.len() as f64;
    let m_without = mean(&without);
    if m_without == 0.0 {
        return None;
    }
    Some(mean(&with) / m_without - 1.0)
}

/// Score each pattern with the LSTM at inference and emit the top `top_n`.
pub fn rank_by_lstm(model: &LstmModel, chains: &[Chain], top_n: usize) -> Result<ChainReport> {
    let mut entries = Vec::with_capacity(chains.len());
    for chain in chains {
        let encoded = encode_sequence(&chain.tokens, model.max_seq_len);
        let score = model.predict(std::slice::from_ref(&encoded))?[0];
        entries.push(RankedChain {
            pattern: chain.pattern(),
            tokens: chain.tokens.clone(),
            occurrences: chain.occurrences,
            score,
        });
    }
    let lpr_uplift = token_uplift(&entries, EventType::Lpr);
    sort_ranked(&mut entries);
    entries.truncate(top_n);
    Ok(ChainReport { entries, lpr_uplift })
}

fn sort_ranked(entries: &mut [RankedChain]) {
    entries.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .expect("finite scores")
            .then_with(|| a.pattern.cmp(&b.pattern))
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lstm::{LstmConfig, LstmParams};

    fn window(id: &str, tokens: Vec<EventType>) -> WindowFeatures {
        WindowFeatures {
            window_id: id.into(),
            game_id: "g".into(),
            window_start_s: 0.0,
            counts: BTreeMap::new(),
            goal_label: 0,
            positions: Default::default(),
            event_token_sequence: tokens,
        }
    }

    #[test]
    fn single_terminated_run_is_one_chain() {
        use EventType::*;
        let w = window("w0", vec![Lpr, Pass, Reception, Shot]);
        let chains = extract_chains(&[w]);
        assert_eq!(chains.len(), 1);
        assert_eq!(chains[0].tokens, vec![Lpr, Pass, Reception, Shot]);
        assert_eq!(chains[0].occurrences, 1);
    }

    #[test]
    fn runs_split_at_terminators() {
        use EventType::*;
        let w = window("w0", vec![Pass, Icing, Lpr, Shot]);
        let mut chains = extract_chains(&[w]);
        chains.sort_by_key(|c| c.tokens.clone());
        assert_eq!(chains.len(), 2);
        assert!(chains.iter().any(|c| c.tokens == vec![Pass, Icing]));
        assert!(chains.iter().any(|c| c.tokens == vec![Lpr, Shot]));
    }

    #[test]
    fn empty_window_has_no_chains() {
        let w = window("w0", vec![]);
        assert!(extract_chains(&[w]).is_empty());
    }

    #[test]
    fn unterminated_tail_is_not_a_chain() {
        use EventType::*;
        let w = window("w0", vec![Pass, Shot, Carry, Pass]);
        let chains = extract_chains(&[w]);
        assert_eq!(chains.len(), 1);
        assert_eq!(chains[0].tokens, vec![Pass, Shot]);
    }

    #[test]
    fn duplicate_patterns_accumulate_occurrences() {
        use EventType::*;
        let w1 = window("w0", vec![Lpr, Shot, Lpr, Shot]);
        let w2 = window("w1", vec![Lpr, Shot]);
        let chains = extract_chains(&[w1, w2]);
        assert_eq!(chains.len(), 1);
        assert_eq!(chains[0].occurrences, 3);
        assert_eq!(chains[0].window_ids, vec!["w0", "w0", "w1"]);
    }

    #[test]
    fn ranking_orders_by_score_then_pattern() {
        use EventType::*;
        let windows = vec![
            window("a", vec![Lpr, Shot]),
            window("b", vec![Pass, Shot]),
            window("c", vec![Carry, Shot]),
        ];
        let chains = extract_chains(&windows);
        let composites: BTreeMap<String, f64> =
            [("a".into(), 2.0), ("b".into(), 1.0), ("c".into(), 1.0)].into();
        let report = rank_chains(&chains, &composites, 10, 1).unwrap();
        assert_eq!(report.entries[0].pattern, "lpr -> shot");
        // score tie between the other two: carry < pass lexicographically
        assert_eq!(report.entries[1].pattern, "carry -> shot");
        assert_eq!(report.entries[2].pattern, "pass -> shot");
        // lpr uplift: 2.0 vs mean(1.0, 1.0) -> +100%
        assert!((report.lpr_uplift.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_pattern_ranks_first_and_uplift_is_undefined() {
        use EventType::*;
        let windows = vec![window("a", vec![PenaltyDrawn, Lpr, Shot])];
        let chains = extract_chains(&windows);
        let composites: BTreeMap<String, f64> = [("a".into(), 4.33)].into();
        let report = rank_chains(&chains, &composites, 5, 1).unwrap();
        assert_eq!(report.entries.len(), 1);
        assert_eq!(report.entries[0].pattern, "penalty_drawn -> lpr -> shot");
        // every chain contains lpr: "others" empty -> undefined, not 0
        assert_eq!(report.lpr_uplift, None);
    }

    #[test]
    fn lstm_ranking_handles_top_n_and_constant_models() {
        use EventType::*;
        let windows = vec![
            window("a", vec![Lpr, Shot]),
            window("b", vec![Pass, Shot]),
        ];
        let chains = extract_chains(&windows);
        let cfg = LstmConfig { embed_dim: 4, hidden_units: 3, max_seq_len: 8, ..Default::default() };
        let mut model = LstmModel::new(EventType::VOCAB_SIZE, &cfg);
        // zero parameters -> constant output 0.5 -> lexicographic tie order
        model.params = LstmParams::zeros(EventType::VOCAB_SIZE, 4, 3);

        let empty = rank_by_lstm(&model, &chains, 0).unwrap();
        assert!(empty.entries.is_empty());

        let report = rank_by_lstm(&model, &chains, 10).unwrap();
        assert_eq!(report.entries[0].pattern, "lpr -> shot");
        assert_eq!(report.entries[1].pattern, "pass -> shot");
        assert_eq!(report.entries[0].score, 0.5);
    }
}

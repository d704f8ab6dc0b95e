//! Property tests for the module-level invariants.

use std::collections::BTreeMap;

use proptest::prelude::*;

use rinkpulse::events::{EventRecord, EventType, PlayerRole, TeamSide};
use rinkpulse::formation::convex_hull_area;
use rinkpulse::ingest::{build_windows, standardize_coordinates};
use rinkpulse::lstm::{LstmConfig, LstmModel};
use rinkpulse::momentum::MomentumModel;

fn arbitrary_event() -> impl Strategy<Value = EventRecord> {
    (
        0u8..3,
        0.0f64..3600.0,
        prop::bool::ANY,
        1usize..21,
        -100.0f64..100.0,
        -42.5f64..42.5,
        0usize..5,
    )
        .prop_map(|(period, clock, home, token, x, y, role)| EventRecord {
            game_id: "g".into(),
            period: period + 1,
            clock_s: clock,
            team_side: if home { TeamSide::Home } else { TeamSide::Away },
            event_type: EventType::from_token_id(token).unwrap(),
            x,
            y,
            player_role: match role {
                0 => PlayerRole::F1,
                1 => PlayerRole::F2,
                2 => PlayerRole::F3,
                3 => PlayerRole::D1,
                _ => PlayerRole::D2,
            },
            is_shootout: false,
            standardized: false,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// For stride = window (non-overlapping), window counts conserve the
    /// total regulation count of every event type.
    #[test]
    fn window_counts_conserve_totals(mut events in prop::collection::vec(arbitrary_event(), 1..120)) {
        events.sort_by(|a, b| a.clock_s.partial_cmp(&b.clock_s).unwrap());
        let events = standardize_coordinates(events);
        let windows = build_windows(&events, 30.0, 30.0).unwrap();
        let mut totals: BTreeMap<EventType, u32> = BTreeMap::new();
        for e in &events {
            if EventType::MODELED.contains(&e.event_type) {
                *totals.entry(e.event_type).or_insert(0) += 1;
            }
        }
        let mut window_totals: BTreeMap<EventType, u32> = BTreeMap::new();
        for w in &windows {
            for (&e, &c) in &w.counts {
                *window_totals.entry(e).or_insert(0) += c;
            }
        }
        prop_assert_eq!(totals, window_totals);
    }

    /// Standardization is idempotent, and re-labelling a record with the
    /// opposite side before standardizing recovers the original point.
    #[test]
    fn standardization_involution(events in prop::collection::vec(arbitrary_event(), 1..40)) {
        let once = standardize_coordinates(events.clone());
        let twice = standardize_coordinates(once.clone());
        prop_assert_eq!(&once, &twice);

        for e in &events {
            let mut flipped = e.clone();
            flipped.team_side = match e.team_side {
                TeamSide::Home => TeamSide::Away,
                TeamSide::Away => TeamSide::Home,
            };
            let std_orig = standardize_coordinates(vec![e.clone()]);
            let std_flip = standardize_coordinates(vec![flipped]);
            // one of the two keeps the raw coordinates, the other reflects
            prop_assert_eq!(std_flip[0].x, -std_orig[0].x);
            prop_assert_eq!(std_flip[0].y, -std_orig[0].y);
        }
    }

    /// Hull area is invariant under point permutation and rotation.
    #[test]
    fn hull_area_invariances(
        points in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..40),
        theta in 0.0f64..std::f64::consts::TAU,
        rot in 0usize..40,
    ) {
        let pts: Vec<[f64; 2]> = points.iter().map(|&(x, y)| [x, y]).collect();
        let base = convex_hull_area(&pts).unwrap();

        let mut permuted = pts.clone();
        let shift = rot % permuted.len();
        permuted.rotate_left(shift);
        permuted.reverse();
        let perm_area = convex_hull_area(&permuted).unwrap();
        prop_assert!((base - perm_area).abs() <= 1e-9);

        let rotated: Vec<[f64; 2]> = pts
            .iter()
            .map(|[x, y]| [x * theta.cos() - y * theta.sin(), x * theta.sin() + y * theta.cos()])
            .collect();
        let rot_area = convex_hull_area(&rotated).unwrap();
        prop_assert!((base - rot_area).abs() <= 1e-6 * (1.0 + base));
    }

    /// log M is linear in counts: M(a + b) = M(a) * M(b).
    #[test]
    fn momentum_is_multiplicative_over_counts(
        counts_a in prop::collection::btree_map(1usize..21, 0u32..6, 0..8),
        counts_b in prop::collection::btree_map(1usize..21, 0u32..6, 0..8),
    ) {
        let model = MomentumModel::reference();
        let to_window = |counts: &BTreeMap<usize, u32>| {
            let mut merged: BTreeMap<EventType, u32> = BTreeMap::new();
            for (&t, &c) in counts {
                *merged.entry(EventType::from_token_id(t).unwrap()).or_insert(0) += c;
            }
            rinkpulse::WindowFeatures {
                window_id: "p:0".into(),
                game_id: "p".into(),
                window_start_s: 0.0,
                counts: merged,
                goal_label: 0,
                positions: Default::default(),
                event_token_sequence: vec![],
            }
        };
        let wa = to_window(&counts_a);
        let wb = to_window(&counts_b);
        let mut sum = counts_a.clone();
        for (t, c) in counts_b {
            *sum.entry(t).or_insert(0) += c;
        }
        let wsum = to_window(&sum);
        let ma = model.momentum_score(&wa).unwrap();
        let mb = model.momentum_score(&wb).unwrap();
        let msum = model.momentum_score(&wsum).unwrap();
        prop_assert!(ma > 0.0 && mb > 0.0 && msum > 0.0);
        prop_assert!((msum - ma * mb).abs() <= 1e-9 * (1.0 + ma * mb));
    }
}

/// Inverted dropout: the logit under inference equals the expectation of
/// training-mode logits over masks (Monte-Carlo over >= 10,000 masks, 1%).
#[test]
fn dropout_expectation_matches_inference() {
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    let cfg = LstmConfig {
        embed_dim: 6,
        hidden_units: 8,
        max_seq_len: 10,
        dropout: 0.30,
        seed: 77,
        ..Default::default()
    };
    let mut model = LstmModel::new(23, &cfg);
    // Push the logit away from zero so the relative comparison is stable.
    model.params.dense_b = 2.0;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sequence: Vec<usize> = (0..10).map(|_| rng.random_range(0..23)).collect();
    let batch = vec![sequence];

    let reference_logit = model.forward_cached_logit(&batch, None);

    let n_masks = 20_000;
    let mut total = 0.0;
    for _ in 0..n_masks {
        let mask = model.next_dropout_mask(1);
        total += model.forward_cached_logit(&batch, Some(&mask));
    }
    let mc_mean = total / n_masks as f64;
    let rel = (mc_mean - reference_logit).abs() / reference_logit.abs();
    assert!(
        rel < 0.01,
        "MC mean logit {mc_mean:.5} vs inference {reference_logit:.5} (rel {rel:.4})"
    );
}

//! Stage implementations. Each stage reads its upstream artifacts from the
//! output directory, computes, and writes versioned JSON/CSV artifacts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use rinkpulse::causal::{estimate_propensity, x_learner_ate};
use rinkpulse::events::{EventType, PlayerRole};
use rinkpulse::formation::{
    convex_hull_area, defensive_positions, deviation_for_window, flag_optimally_positioned,
    kmeans, position_density, select_k_by_silhouette, FormationClusters, PcaModel,
    OFFENSIVE_ZONE,
};
use rinkpulse::gbdt::{
    composite_c, evaluate_classifier, fit_gbdt, grid_search, EvalReport, FeatureMatrix,
};
use rinkpulse::ingest::{build_windows, parse_events, standardize_coordinates, vif_diagnostics, StreamFormat};
use rinkpulse::lstm::{composite_s, encode_sequence, train_lstm, LstmModel};
use rinkpulse::momentum::MomentumModel;
use rinkpulse::sequences::{extract_chains, rank_by_lstm, rank_chains};
use rinkpulse::split::{three_way_split, two_way_split};
use rinkpulse::stats::histogram;
use rinkpulse::synth;
use rinkpulse::WindowFeatures;

use crate::artifacts::*;
use crate::config::PipelineConfig;

pub fn events_path(cfg: &PipelineConfig, out: &Path) -> PathBuf {
    cfg.io.events.clone().unwrap_or_else(|| out.join("events.csv"))
}

pub fn run_synth(cfg: &PipelineConfig, out: &Path) -> Result<()> {
    let (events, truth) = synth::generate(&cfg.synth.to_config())?;
    let path = events_path(cfg, out);
    let mut writer = csv::Writer::from_path(&path)?;
    for e in &events {
        writer.serialize(e)?;
    }
    writer.flush()?;
    write_json(&out.join("ground_truth.json"), &truth)?;
    eprintln!("synth: {} events, {} windows", events.len(), truth.window_ids.len());
    Ok(())
}

pub fn run_ingest(cfg: &PipelineConfig, out: &Path) -> Result<()> {
    let path = events_path(cfg, out);
    require(&path, "synth")?;
    let format = match cfg.io.format.as_str() {
        "jsonl" => StreamFormat::Jsonl,
        _ => StreamFormat::Csv,
    };
    let file = std::fs::File::open(&path)?;
    let events = parse_events(std::io::BufReader::new(file), format)?;
    let events = standardize_coordinates(events);
    let windows = build_windows(&events, cfg.ingest.window_s, cfg.ingest.stride_s)?;
    write_windows(&out.join("windows.jsonl"), &windows)?;
    let vif = vif_diagnostics(&windows)?;
    write_json(&out.join("vif.json"), &vif)?;
    let flagged = vif.entries.values().filter(|e| e.flagged).count();
    eprintln!("ingest: {} windows, {} VIF-flagged features", windows.len(), flagged);
    Ok(())
}

pub fn run_momentum(
    cfg: &PipelineConfig,
    out: &Path,
    score_only_model: Option<&Path>,
) -> Result<()> {
    let windows_path = out.join("windows.jsonl");
    require(&windows_path, "ingest")?;
    let windows = read_windows(&windows_path)?;

    let model = match score_only_model {
        Some(path) => MomentumModel::load(path)
            .with_context(|| format!("loading momentum model {}", path.display()))?,
        None => {
            let vif: rinkpulse::ingest::VifReport = read_json(&out.join("vif.json"))
                .context("vif.json (run `ingest` first)")?;
            let features = vif.clean_features();
            MomentumModel::fit_with_features(&windows, &features, cfg.momentum.l2)?
        }
    };
    model.save(&out.join("momentum_model.json"))?;

    let mut csv_text = if cfg.momentum.log_scale {
        String::from("window_id,momentum,log_momentum,goal_prob\n")
    } else {
        String::from("window_id,momentum,goal_prob\n")
    };
    for w in &windows {
        let m = model.momentum_score(w)?;
        let p = model.predict_goal_prob(w)?;
        if cfg.momentum.log_scale {
            csv_text.push_str(&format!("{},{},{},{}\n", w.window_id, m, model.log_momentum_score(w)?, p));
        } else {
            csv_text.push_str(&format!("{},{},{}\n", w.window_id, m, p));
        }
    }
    std::fs::write(out.join("momentum_scores.csv"), csv_text)?;
    eprintln!("momentum: scored {} windows", windows.len());
    Ok(())
}

/// Feature matrix for the xG model: event counts, the momentum score, and
/// the ten positional aggregates (0.0 for missing roles).
pub fn xg_features(
    windows: &[WindowFeatures],
    momentum: &BTreeMap<String, f64>,
) -> Result<FeatureMatrix> {
    let mut names: Vec<String> =
        EventType::MODELED.iter().map(|e| format!("count_{e}")).collect();
    names.push("momentum".into());
    for role in PlayerRole::SLOT_NAMES {
        names.push(format!("pos_{}_x", role.to_lowercase()));
        names.push(format!("pos_{}_y", role.to_lowercase()));
    }
    let mut matrix = FeatureMatrix::new(names);
    for w in windows {
        let mut row: Vec<f64> =
            EventType::MODELED.iter().map(|&e| w.count(e) as f64).collect();
        let m = momentum
            .get(&w.window_id)
            .with_context(|| format!("no momentum score for window {}", w.window_id))?;
        row.push(*m);
        for slot in &w.positions.means {
            match slot {
                Some([x, y]) => {
                    row.push(*x);
                    row.push(*y);
                }
                None => {
                    row.push(0.0);
                    row.push(0.0);
                }
            }
        }
        matrix.push_row(&row)?;
    }
    Ok(matrix)
}

#[derive(Debug, Serialize, Deserialize)]
struct XgEvalArtifact {
    test: EvalReport,
    valid_best_loss: f64,
    rounds_kept: usize,
    swept: bool,
}

pub fn run_xg(cfg: &PipelineConfig, out: &Path, sweep: bool) -> Result<()> {
    let windows_path = out.join("windows.jsonl");
    require(&windows_path, "ingest")?;
    let scores_path = out.join("momentum_scores.csv");
    require(&scores_path, "momentum")?;

    let windows = read_windows(&windows_path)?;
    let momentum = read_score_column(&scores_path, "momentum")?;
    let features = xg_features(&windows, &momentum)?;
    let labels: Vec<f64> = windows.iter().map(|w| w.goal_label as f64).collect();

    let (train_idx, valid_idx, test_idx) = three_way_split(
        windows.len(),
        (cfg.gbdt.train_fraction, cfg.gbdt.valid_fraction, cfg.gbdt.test_fraction),
        cfg.gbdt.seed,
    )?;
    let select = |idx: &[usize]| -> (FeatureMatrix, Vec<f64>) {
        (features.select_rows(idx), idx.iter().map(|&i| labels[i]).collect())
    };
    let (train_x, train_y) = select(&train_idx);
    let (valid_x, valid_y) = select(&valid_idx);
    let (test_x, test_y) = select(&test_idx);

    let mut gbdt_cfg = cfg.gbdt.to_config();
    if sweep {
        let (best, loss) = grid_search(
            &train_x,
            &train_y,
            (&valid_x, &valid_y),
            &gbdt_cfg,
            &cfg.gbdt.sweep_depths,
            &cfg.gbdt.sweep_learning_rates,
            &cfg.gbdt.sweep_rounds,
        )?;
        eprintln!(
            "xg sweep: depth {} lr {} rounds {} (valid loss {loss:.5})",
            best.max_depth, best.learning_rate, best.n_rounds
        );
        gbdt_cfg = best;
    }

    let (model, history) = fit_gbdt(&train_x, &train_y, Some((&valid_x, &valid_y)), &gbdt_cfg)?;
    let test_scores = model.predict(&test_x)?;
    let eval = evaluate_classifier(&test_scores, &test_y)?;
    write_json(
        &out.join("xg_eval.json"),
        &XgEvalArtifact {
            test: eval.clone(),
            valid_best_loss: history.valid_loss.iter().cloned().fold(f64::INFINITY, f64::min),
            rounds_kept: history.best_round,
            swept: sweep,
        },
    )?;
    model.save(&out.join("gbdt_model.json"))?;

    let all_scores = model.predict(&features)?;
    let mut csv_text = String::from("window_id,p_xg,composite_c\n");
    for (w, p) in windows.iter().zip(&all_scores) {
        let m = momentum[&w.window_id];
        csv_text.push_str(&format!("{},{},{}\n", w.window_id, p, composite_c(m, *p)));
    }
    std::fs::write(out.join("xg_scores.csv"), csv_text)?;
    eprintln!(
        "xg: test AUC {:.4}, {} rounds kept",
        eval.auc, history.best_round
    );
    Ok(())
}

pub fn run_lstm(cfg: &PipelineConfig, out: &Path) -> Result<()> {
    let windows_path = out.join("windows.jsonl");
    require(&windows_path, "ingest")?;
    let momentum_path = out.join("momentum_scores.csv");
    require(&momentum_path, "momentum")?;
    let xg_path = out.join("xg_scores.csv");
    require(&xg_path, "xg")?;

    let windows = read_windows(&windows_path)?;
    let momentum = read_score_column(&momentum_path, "momentum")?;
    let p_xg = read_score_column(&xg_path, "p_xg")?;

    let sequences: Vec<Vec<EventType>> =
        windows.iter().map(|w| w.event_token_sequence.clone()).collect();
    let labels: Vec<f64> = windows.iter().map(|w| w.goal_label as f64).collect();
    let (train_idx, valid_idx) =
        two_way_split(windows.len(), cfg.lstm.train_fraction, cfg.lstm.seed)?;
    let pick = |idx: &[usize]| -> (Vec<Vec<EventType>>, Vec<f64>) {
        (
            idx.iter().map(|&i| sequences[i].clone()).collect(),
            idx.iter().map(|&i| labels[i]).collect(),
        )
    };
    let (train_s, train_y) = pick(&train_idx);
    let (valid_s, valid_y) = pick(&valid_idx);

    let lstm_cfg = cfg.lstm.to_config();
    let (model, history) = train_lstm((&train_s, &train_y), (&valid_s, &valid_y), &lstm_cfg)?;
    model.save(&out.join("lstm_model"))?;
    std::fs::write(out.join("lstm_history.csv"), history.to_csv())?;

    // Score every window at inference in fixed-size batches.
    let encoded: Vec<Vec<usize>> = sequences
        .iter()
        .map(|s| encode_sequence(s, lstm_cfg.max_seq_len))
        .collect();
    let mut p_lstm = Vec::with_capacity(encoded.len());
    for chunk in encoded.chunks(256) {
        p_lstm.extend(model.predict(chunk)?);
    }

    let mut scores_csv = String::from("window_id,p_lstm\n");
    let mut composites_csv =
        String::from("window_id,momentum,p_xg,p_lstm,composite_c,composite_s\n");
    for (w, pl) in windows.iter().zip(&p_lstm) {
        scores_csv.push_str(&format!("{},{}\n", w.window_id, pl));
        let m = momentum[&w.window_id];
        let px = p_xg[&w.window_id];
        composites_csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            w.window_id,
            m,
            px,
            pl,
            composite_c(m, px),
            composite_s(m, px, *pl)
        ));
    }
    std::fs::write(out.join("lstm_scores.csv"), scores_csv)?;
    std::fs::write(out.join("composites.csv"), composites_csv)?;
    eprintln!(
        "lstm: {} epochs (best {}), valid acc {:.4}",
        history.epochs.len(),
        history.best_epoch,
        history.epochs.last().map(|e| e.valid_acc).unwrap_or(f64::NAN)
    );
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ClustersArtifact {
    pub k: usize,
    pub optimal_cluster_id: usize,
    pub mean_composite: Vec<f64>,
    pub member_counts: Vec<usize>,
    /// Back-projected rink coordinates per cluster (x,y per role F1..D2).
    pub centroid_positions: Vec<Vec<f64>>,
    pub silhouette_by_k: Vec<(usize, f64)>,
    /// Positioned windows, in order, with their cluster assignments.
    pub window_ids: Vec<String>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct HullsArtifact {
    pub all_windows_area: f64,
    pub optimal_windows_area: f64,
    /// optimal / all; below 1 means the optimal formation is tighter.
    pub area_ratio: f64,
}

pub fn run_formation(cfg: &PipelineConfig, out: &Path) -> Result<()> {
    let windows_path = out.join("windows.jsonl");
    require(&windows_path, "ingest")?;
    let composites_path = out.join("composites.csv");
    require(&composites_path, "lstm")?;

    let windows = read_windows(&windows_path)?;
    let composite = read_score_column(&composites_path, "composite_s")?;
    let momentum = read_score_column(&composites_path, "momentum")?;

    // Formation analysis uses only windows with full ten-dimensional
    // position vectors.
    let positioned: Vec<&WindowFeatures> =
        windows.iter().filter(|w| w.positions.is_complete()).collect();
    if positioned.len() <= 10 {
        anyhow::bail!(rinkpulse::Error::Data(format!(
            "formation analysis needs more than 10 positioned windows, got {}",
            positioned.len()
        )));
    }
    let matrix: Vec<Vec<f64>> = positioned
        .iter()
        .map(|w| w.positions.full_vector().expect("complete").to_vec())
        .collect();

    let pca = PcaModel::fit(&matrix, cfg.formation.variance_target)?;
    write_json(&out.join("pca_model.json"), &pca)?;
    let embeddings = pca.transform_all(&matrix);

    let (k, silhouette_by_k) = if cfg.formation.k >= 2 {
        (cfg.formation.k, Vec::new())
    } else {
        select_k_by_silhouette(
            &embeddings,
            2..=8,
            cfg.formation.seed,
            cfg.formation.silhouette_subsample,
        )?
    };
    let km = kmeans(&embeddings, k, cfg.formation.seed)?;
    let scores: Vec<f64> = positioned
        .iter()
        .map(|w| {
            composite
                .get(&w.window_id)
                .copied()
                .with_context(|| format!("no composite for window {}", w.window_id))
        })
        .collect::<Result<_>>()?;
    let clusters = FormationClusters::from_kmeans(&pca, &km).select_optimal_cluster(&scores)?;
    let optimal = clusters.optimal_cluster_id.expect("selected");

    let mut member_counts = vec![0usize; clusters.k];
    for &a in &clusters.assignments {
        member_counts[a] += 1;
    }
    write_json(
        &out.join("clusters.json"),
        &ClustersArtifact {
            k: clusters.k,
            optimal_cluster_id: optimal,
            mean_composite: clusters.mean_composite.clone(),
            member_counts,
            centroid_positions: clusters.centroid_positions.clone(),
            silhouette_by_k,
            window_ids: positioned.iter().map(|w| w.window_id.clone()).collect(),
            assignments: clusters.assignments.clone(),
            inertia: km.inertia,
        },
    )?;

    // Deviation from the optimal centroid, with the lowest-quartile flag.
    let centroid = clusters.optimal_centroid_positions()?;
    let deviations: Vec<f64> = positioned
        .iter()
        .map(|w| deviation_for_window(&w.positions, centroid))
        .collect::<rinkpulse::Result<_>>()?;
    let flags = flag_optimally_positioned(&deviations);
    let mut dev_csv = String::from("window_id,deviation,optimally_positioned\n");
    for ((w, d), f) in positioned.iter().zip(&deviations).zip(&flags) {
        dev_csv.push_str(&format!("{},{},{}\n", w.window_id, d, f));
    }
    std::fs::write(out.join("deviations.csv"), dev_csv)?;

    // Density grids and hull comparison: all windows vs optimal-flagged.
    let bins = cfg.formation.grid_bins;
    let all_grid = position_density(&positioned, OFFENSIVE_ZONE, bins, bins);
    std::fs::write(out.join("density_all.csv"), all_grid.to_csv())?;
    let optimal_windows: Vec<&WindowFeatures> = positioned
        .iter()
        .zip(&flags)
        .filter(|(_, &f)| f)
        .map(|(w, _)| *w)
        .collect();
    let optimal_grid = position_density(&optimal_windows, OFFENSIVE_ZONE, bins, bins);
    std::fs::write(out.join("density_optimal.csv"), optimal_grid.to_csv())?;

    let pooled_points = |ws: &[&WindowFeatures]| -> Vec<[f64; 2]> {
        ws.iter()
            .flat_map(|w| w.positions.means.iter().flatten().map(|p| [p[0], p[1]]))
            .collect()
    };
    let all_area = convex_hull_area(&pooled_points(&positioned))?;
    let optimal_area = convex_hull_area(&pooled_points(&optimal_windows))?;
    write_json(
        &out.join("hulls.json"),
        &HullsArtifact {
            all_windows_area: all_area,
            optimal_windows_area: optimal_area,
            area_ratio: optimal_area / all_area,
        },
    )?;

    // Defensive positioning over the bottom momentum quartile.
    let positioned_owned: Vec<WindowFeatures> =
        positioned.iter().map(|w| (*w).clone()).collect();
    let m_scores: Vec<f64> = positioned
        .iter()
        .map(|w| momentum[&w.window_id])
        .collect();
    let defensive = defensive_positions(&positioned_owned, &m_scores)?;
    let defensive_map: BTreeMap<String, [f64; 2]> = PlayerRole::SLOT_NAMES
        .iter()
        .enumerate()
        .map(|(i, name)| (name.to_string(), [defensive[2 * i], defensive[2 * i + 1]]))
        .collect();
    write_json(&out.join("defensive_positions.json"), &defensive_map)?;

    eprintln!(
        "formation: k = {}, optimal cluster {} (mean composite {:.4}), hull ratio {:.3}",
        clusters.k,
        optimal,
        clusters.mean_composite[optimal],
        optimal_area / all_area
    );
    Ok(())
}

pub fn run_sequences(cfg: &PipelineConfig, out: &Path) -> Result<()> {
    let windows_path = out.join("windows.jsonl");
    require(&windows_path, "ingest")?;
    let composites_path = out.join("composites.csv");
    require(&composites_path, "lstm")?;
    require(&out.join("lstm_model.json"), "lstm")?;

    let windows = read_windows(&windows_path)?;
    let composite = read_score_column(&composites_path, "composite_s")?;
    let chains = extract_chains(&windows);

    let report = rank_chains(&chains, &composite, cfg.sequences.top_n, cfg.sequences.min_occurrences)?;
    write_json(&out.join("chain_report.json"), &report)?;

    let model = LstmModel::load(&out.join("lstm_model"))?;
    let lstm_report = rank_by_lstm(&model, &chains, cfg.sequences.top_n)?;
    write_json(&out.join("lstm_chain_report.json"), &lstm_report)?;

    // Full pattern table as CSV.
    let full = rank_chains(&chains, &composite, usize::MAX, cfg.sequences.min_occurrences)?;
    let mut csv_text = String::from("pattern,occurrences,mean_composite\n");
    for e in &full.entries {
        csv_text.push_str(&format!("\"{}\",{},{}\n", e.pattern, e.occurrences, e.score));
    }
    std::fs::write(out.join("chains.csv"), csv_text)?;

    eprintln!(
        "sequences: {} patterns; top by composite: {}",
        chains.len(),
        report.entries.first().map(|e| e.pattern.as_str()).unwrap_or("-")
    );
    Ok(())
}

pub fn run_causal(cfg: &PipelineConfig, out: &Path) -> Result<()> {
    let windows_path = out.join("windows.jsonl");
    require(&windows_path, "ingest")?;
    let composites_path = out.join("composites.csv");
    require(&composites_path, "lstm")?;
    let clusters_path = out.join("clusters.json");
    require(&clusters_path, "formation")?;
    let deviations_path = out.join("deviations.csv");
    require(&deviations_path, "formation")?;

    let windows = read_windows(&windows_path)?;
    let composite = read_score_column(&composites_path, "composite_s")?;
    let clusters: ClustersArtifact = read_json(&clusters_path)?;
    let flags_text = std::fs::read_to_string(&deviations_path)?;
    let mut flagged: BTreeMap<String, bool> = BTreeMap::new();
    for line in flags_text.lines().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        flagged.insert(fields[0].to_string(), fields[2] == "true");
    }

    // Analysis set: positioned windows (the ones clustered), joined by id.
    let by_id: BTreeMap<&str, &WindowFeatures> =
        windows.iter().map(|w| (w.window_id.as_str(), w)).collect();
    let mut covariate_rows = Vec::new();
    let mut treatment = Vec::new();
    let mut outcome = Vec::new();
    for (wid, &assignment) in clusters.window_ids.iter().zip(&clusters.assignments) {
        let w = by_id
            .get(wid.as_str())
            .with_context(|| format!("cluster window {wid} not found in windows.jsonl"))?;
        let mut row: Vec<f64> =
            EventType::MODELED.iter().map(|&e| w.count(e) as f64).collect();
        let v = w.positions.full_vector().expect("clustered windows are positioned");
        row.extend_from_slice(&v);
        covariate_rows.push(row);
        treatment.push(assignment == clusters.optimal_cluster_id && flagged[wid]);
        outcome.push(composite[wid]);
    }
    let mut names: Vec<String> =
        EventType::MODELED.iter().map(|e| format!("count_{e}")).collect();
    for role in PlayerRole::SLOT_NAMES {
        names.push(format!("pos_{}_x", role.to_lowercase()));
        names.push(format!("pos_{}_y", role.to_lowercase()));
    }
    let covariates = FeatureMatrix::from_rows(names, &covariate_rows)?;

    let propensity = estimate_propensity(&covariates, &treatment)?;
    let report = x_learner_ate(
        &covariates,
        &treatment,
        &outcome,
        &propensity.propensities,
        &cfg.causal.to_config(),
    )?;
    write_json(&out.join("causal_report.json"), &report)?;

    // Individual-effect histogram.
    let (lo, hi) = report
        .per_unit_effects
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let bins = cfg.causal.ite_bins.max(1);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let counts = histogram(&report.per_unit_effects, lo, hi, bins);
    let width = (hi - lo) / bins as f64;
    let mut ite_csv = String::from("bin_lo,bin_hi,count\n");
    for (i, c) in counts.iter().enumerate() {
        ite_csv.push_str(&format!("{},{},{}\n", lo + i as f64 * width, lo + (i + 1) as f64 * width, c));
    }
    std::fs::write(out.join("ite_hist.csv"), ite_csv)?;

    // Propensity overlap histogram.
    let nb = report.propensity_histograms.treated.len();
    let mut prop_csv = String::from("bin_lo,bin_hi,treated,control\n");
    for i in 0..nb {
        prop_csv.push_str(&format!(
            "{},{},{},{}\n",
            i as f64 / nb as f64,
            (i + 1) as f64 / nb as f64,
            report.propensity_histograms.treated[i],
            report.propensity_histograms.control[i]
        ));
    }
    std::fs::write(out.join("propensity_hist.csv"), prop_csv)?;

    let mut bal_csv = String::from("covariate,smd_raw,smd_weighted,zero_variance\n");
    for b in &report.balance {
        bal_csv.push_str(&format!(
            "{},{},{},{}\n",
            b.name,
            b.smd_raw.map(|v| v.to_string()).unwrap_or_default(),
            b.smd_weighted.map(|v| v.to_string()).unwrap_or_default(),
            b.zero_variance
        ));
    }
    std::fs::write(out.join("balance.csv"), bal_csv)?;

    eprintln!(
        "causal: ATE(cv) {:.5}, ATE(bootstrap) {:.5}, CI [{:.5}, {:.5}], p {:.3e}, naive {:.5}",
        report.ate_cv, report.ate_bootstrap, report.ci_low, report.ci_high, report.p_value,
        report.naive_difference
    );
    Ok(())
}

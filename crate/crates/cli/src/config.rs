//! Pipeline configuration: one TOML file with per-stage sections, every
//! field defaulted, validated before any work starts.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use rinkpulse::causal::XLearnerConfig;
use rinkpulse::gbdt::{ClassWeighting, GbdtConfig, Objective};
use rinkpulse::lstm::LstmConfig;
use rinkpulse::synth::SynthConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoSection {
    pub out_dir: PathBuf,
    /// Event stream consumed by `ingest`; the `synth` stage writes it.
    pub events: Option<PathBuf>,
    pub format: String,
}

impl Default for IoSection {
    fn default() -> Self {
        Self { out_dir: PathBuf::from("out"), events: None, format: "csv".into() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub seed: u64,
    pub n_games: usize,
    pub events_per_game: usize,
    pub base_goal_rate: f64,
    pub pattern_rate: f64,
    pub pattern_odds_multiplier: f64,
    pub planted_ate: f64,
    pub confounding_strength: f64,
    pub compact_rate: f64,
    pub compact_logit_boost: f64,
    pub formation_tilt: f64,
    pub game_span_s: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        let d = SynthConfig::default();
        Self {
            seed: d.seed,
            n_games: d.n_games,
            events_per_game: d.events_per_game,
            base_goal_rate: d.base_goal_rate,
            pattern_rate: d.pattern_rate,
            pattern_odds_multiplier: d.pattern_odds_multiplier,
            planted_ate: d.planted_ate,
            confounding_strength: d.confounding_strength,
            compact_rate: d.compact_rate,
            compact_logit_boost: d.compact_logit_boost,
            formation_tilt: d.formation_tilt,
            game_span_s: d.game_span_s,
        }
    }
}

impl SynthSection {
    pub fn to_config(&self) -> SynthConfig {
        SynthConfig {
            seed: self.seed,
            n_games: self.n_games,
            events_per_game: self.events_per_game,
            base_goal_rate: self.base_goal_rate,
            pattern_rate: self.pattern_rate,
            pattern_odds_multiplier: self.pattern_odds_multiplier,
            planted_ate: self.planted_ate,
            confounding_strength: self.confounding_strength,
            compact_rate: self.compact_rate,
            compact_logit_boost: self.compact_logit_boost,
            formation_tilt: self.formation_tilt,
            game_span_s: self.game_span_s,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSection {
    pub window_s: f64,
    pub stride_s: f64,
}

impl Default for IngestSection {
    fn default() -> Self {
        // Stride below the window gives 3x overlap.
        Self { window_s: 30.0, stride_s: 10.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentumSection {
    pub l2: f64,
    /// Also emit the log-scale momentum column.
    pub log_scale: bool,
}

impl Default for MomentumSection {
    fn default() -> Self {
        Self { l2: 1e-6, log_scale: false }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbdtSection {
    pub max_depth: usize,
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub row_subsample: f64,
    pub early_stop_rounds: usize,
    pub min_leaf_weight: f64,
    pub reg_lambda: f64,
    pub seed: u64,
    pub train_fraction: f64,
    pub valid_fraction: f64,
    pub test_fraction: f64,
    pub sweep_depths: Vec<usize>,
    pub sweep_learning_rates: Vec<f64>,
    pub sweep_rounds: Vec<usize>,
}

impl Default for GbdtSection {
    fn default() -> Self {
        let d = GbdtConfig::default();
        Self {
            max_depth: d.max_depth,
            n_rounds: d.n_rounds,
            learning_rate: d.learning_rate,
            row_subsample: d.row_subsample,
            early_stop_rounds: 25,
            min_leaf_weight: d.min_leaf_weight,
            reg_lambda: d.reg_lambda,
            seed: 11,
            train_fraction: 0.70,
            valid_fraction: 0.15,
            test_fraction: 0.15,
            sweep_depths: vec![4, 6],
            sweep_learning_rates: vec![0.05, 0.1],
            sweep_rounds: vec![100, 200],
        }
    }
}

impl GbdtSection {
    pub fn to_config(&self) -> GbdtConfig {
        GbdtConfig {
            max_depth: self.max_depth,
            n_rounds: self.n_rounds,
            learning_rate: self.learning_rate,
            row_subsample: self.row_subsample,
            class_weighting: ClassWeighting::InverseFrequency,
            early_stop_rounds: if self.early_stop_rounds == 0 {
                None
            } else {
                Some(self.early_stop_rounds)
            },
            min_leaf_weight: self.min_leaf_weight,
            reg_lambda: self.reg_lambda,
            objective: Objective::Logistic,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LstmSection {
    pub embed_dim: usize,
    pub hidden_units: usize,
    pub dropout: f64,
    pub max_seq_len: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub early_stop_epochs: usize,
    pub max_epochs: usize,
    pub seed: u64,
    pub train_fraction: f64,
}

impl Default for LstmSection {
    fn default() -> Self {
        let d = LstmConfig::default();
        Self {
            embed_dim: d.embed_dim,
            hidden_units: d.hidden_units,
            dropout: d.dropout,
            max_seq_len: d.max_seq_len,
            batch_size: d.batch_size,
            learning_rate: d.learning_rate,
            early_stop_epochs: d.early_stop_epochs,
            max_epochs: d.max_epochs,
            seed: 12,
            train_fraction: 0.8,
        }
    }
}

impl LstmSection {
    pub fn to_config(&self) -> LstmConfig {
        LstmConfig {
            embed_dim: self.embed_dim,
            hidden_units: self.hidden_units,
            dropout: self.dropout,
            max_seq_len: self.max_seq_len,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            early_stop_epochs: self.early_stop_epochs,
            max_epochs: self.max_epochs,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FormationSection {
    pub variance_target: f64,
    /// 0 selects k by mean silhouette over 2..=8.
    pub k: usize,
    pub seed: u64,
    pub grid_bins: usize,
    pub silhouette_subsample: usize,
}

impl Default for FormationSection {
    fn default() -> Self {
        Self { variance_target: 0.85, k: 0, seed: 13, grid_bins: 50, silhouette_subsample: 2000 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SequencesSection {
    pub top_n: usize,
    /// Patterns seen fewer times than this are dropped before ranking.
    pub min_occurrences: usize,
}

impl Default for SequencesSection {
    fn default() -> Self {
        Self { top_n: 10, min_occurrences: 5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CausalSection {
    pub folds: usize,
    pub n_bootstrap: usize,
    pub level: f64,
    pub seed: u64,
    pub base_depth: usize,
    pub base_rounds: usize,
    pub min_group: usize,
    pub ite_bins: usize,
}

impl Default for CausalSection {
    fn default() -> Self {
        Self {
            folds: 5,
            n_bootstrap: 1000,
            level: 0.95,
            seed: 14,
            base_depth: 3,
            base_rounds: 100,
            min_group: 50,
            ite_bins: 30,
        }
    }
}

impl CausalSection {
    pub fn to_config(&self) -> XLearnerConfig {
        let defaults = XLearnerConfig::default();
        XLearnerConfig {
            folds: self.folds,
            base: rinkpulse::gbdt::GbdtConfig {
                max_depth: self.base_depth,
                n_rounds: self.base_rounds,
                ..defaults.base
            },
            n_bootstrap: self.n_bootstrap,
            level: self.level,
            seed: self.seed,
            min_group: self.min_group,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub io: IoSection,
    pub synth: SynthSection,
    pub ingest: IngestSection,
    pub momentum: MomentumSection,
    pub gbdt: GbdtSection,
    pub lstm: LstmSection,
    pub formation: FormationSection,
    pub sequences: SequencesSection,
    pub causal: CausalSection,
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let cfg: PipelineConfig = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("cannot read config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("invalid config {}", p.display()))?
            }
            None => PipelineConfig::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ingest.window_s <= 0.0 || self.ingest.stride_s <= 0.0 {
            bail!("ingest.window_s and ingest.stride_s must be > 0");
        }
        let split_sum =
            self.gbdt.train_fraction + self.gbdt.valid_fraction + self.gbdt.test_fraction;
        if (split_sum - 1.0).abs() > 1e-9 {
            bail!("gbdt split fractions sum to {split_sum}, expected 1");
        }
        if !(0.0 < self.lstm.train_fraction && self.lstm.train_fraction < 1.0) {
            bail!("lstm.train_fraction must be in (0, 1)");
        }
        if self.io.format != "csv" && self.io.format != "jsonl" {
            bail!("io.format must be 'csv' or 'jsonl', got '{}'", self.io.format);
        }
        if !(0.0 < self.formation.variance_target && self.formation.variance_target <= 1.0) {
            bail!("formation.variance_target must be in (0, 1]");
        }
        if self.causal.n_bootstrap < 100 {
            bail!("causal.n_bootstrap must be >= 100");
        }
        if self.formation.k == 1 {
            bail!("formation.k must be 0 (auto) or >= 2");
        }
        Ok(())
    }

    /// Canonical serialized form used for the manifest's config hash. The
    /// output directory is normalized away: where artifacts land does not
    /// change what they contain.
    pub fn canonical_bytes(&self) -> Result<Vec<u8>> {
        let mut canonical = self.clone();
        canonical.io.out_dir = PathBuf::from(".");
        Ok(serde_json::to_vec(&canonical)?)
    }

    /// All seeds that feed the run, recorded in the manifest.
    pub fn seeds(&self) -> Vec<(String, u64)> {
        vec![
            ("synth".into(), self.synth.seed),
            ("gbdt".into(), self.gbdt.seed),
            ("lstm".into(), self.lstm.seed),
            ("formation".into(), self.formation.seed),
            ("causal".into(), self.causal.seed),
        ]
    }
}

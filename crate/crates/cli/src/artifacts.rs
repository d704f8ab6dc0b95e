//! Artifact reading/writing shared by the stages, plus the run manifest.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::errors::CliError;
use rinkpulse::WindowFeatures;

pub const SCHEMA_VERSION: &str = "v1";

/// Fail with a dependency error (exit 4) when an upstream artifact is
/// missing.
pub fn require(path: &Path, produced_by: &str) -> Result<()> {
    if !path.exists() {
        return Err(CliError::Dependency {
            stage: produced_by.to_string(),
            path: path.to_path_buf(),
        }
        .into());
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_windows(path: &Path, windows: &[WindowFeatures]) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    for w in windows {
        serde_json::to_writer(&mut out, w)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_windows(path: &Path) -> Result<Vec<WindowFeatures>> {
    let file = std::fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
    let mut windows = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        windows.push(serde_json::from_str(&line)?);
    }
    Ok(windows)
}

/// Read one numeric column of a headed CSV into window-id order.
pub fn read_score_column(path: &Path, column: &str) -> Result<BTreeMap<String, f64>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().context("empty csv")?;
    let cols: Vec<&str> = header.split(',').collect();
    let id_idx = cols
        .iter()
        .position(|c| *c == "window_id")
        .context("csv lacks window_id column")?;
    let val_idx = cols
        .iter()
        .position(|c| *c == column)
        .with_context(|| format!("csv lacks column {column}"))?;
    let mut out = BTreeMap::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        out.insert(fields[id_idx].to_string(), fields[val_idx].parse::<f64>()?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub config_sha256: String,
    pub seeds: BTreeMap<String, u64>,
    pub stages_run: Vec<String>,
    /// sha256 per artifact file, keyed by file name. Timing data lives in
    /// timings.json, outside the manifest, so reruns stay byte-identical.
    pub artifacts: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

/// Hash every artifact in `out_dir` (except the manifest and timing log)
/// and write `manifest.json`.
pub fn write_manifest(
    out_dir: &Path,
    config_bytes: &[u8],
    seeds: &[(String, u64)],
    stages_run: &[String],
) -> Result<PathBuf> {
    let mut artifacts = BTreeMap::new();
    let mut names: Vec<PathBuf> = std::fs::read_dir(out_dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .collect();
    names.sort();
    for path in names {
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        if name == "manifest.json" || name == "timings.json" {
            continue;
        }
        artifacts.insert(name, file_sha256(&path)?);
    }
    let manifest = RunManifest {
        schema: SCHEMA_VERSION.to_string(),
        config_sha256: sha256_hex(config_bytes),
        seeds: seeds.iter().cloned().collect(),
        stages_run: stages_run.to_vec(),
        artifacts,
    };
    let path = out_dir.join("manifest.json");
    write_json(&path, &manifest)?;
    Ok(path)
}

/// Wall-clock seconds per stage; informational only.
pub fn write_timings(out_dir: &Path, timings: &[(String, f64)]) -> Result<()> {
    let map: BTreeMap<String, f64> = timings.iter().cloned().collect();
    write_json(&out_dir.join("timings.json"), &map)
}

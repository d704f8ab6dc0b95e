//! Formation archetype discovery: PCA + K-Means over ten-dimensional
//! positional vectors, optimal-cluster selection by mean composite score,
//! the per-window deviation metric, convex-hull comparison, and
//! bottom-quartile defensive positioning.

pub mod hull;
pub mod kmeans;
pub mod pca;

pub use hull::{convex_hull, convex_hull_area};
pub use kmeans::{kmeans, select_k_by_silhouette, silhouette_score, KMeansResult};
pub use pca::PcaModel;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::windows::{RolePositions, WindowFeatures};
use crate::stats::percentile_nearest_rank;

/// Clusters over PCA embeddings with back-projected rink-coordinate
/// centroids. `mean_composite` / `optimal_cluster_id` are filled by
/// [`FormationClusters::select_optimal_cluster`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormationClusters {
    pub k: usize,
    /// Centroids in PCA space.
    pub centroids: Vec<Vec<f64>>,
    /// Centroids back-projected to the ten rink coordinates per role.
    pub centroid_positions: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub mean_composite: Vec<f64>,
    pub optimal_cluster_id: Option<usize>,
}

impl FormationClusters {
    /// Assemble from a PCA model and a K-Means run over its embeddings.
    pub fn from_kmeans(pca: &PcaModel, km: &KMeansResult) -> Self {
        let centroid_positions = km
            .centroids
            .iter()
            .map(|c| pca.inverse_transform(c))
            .collect();
        FormationClusters {
            k: km.k,
            centroids: km.centroids.clone(),
            centroid_positions,
            assignments: km.assignments.clone(),
            mean_composite: Vec::new(),
            optimal_cluster_id: None,
        }
    }

    /// Mean composite score per cluster; the argmax becomes the optimal
    /// offensive cluster (ties break toward the lower cluster id).
    pub fn select_optimal_cluster(mut self, composite_scores: &[f64]) -> Result<Self> {
        if composite_scores.len() != self.assignments.len() {
            return Err(Error::Data(format!(
                "{} composite scores for {} assigned windows",
                composite_scores.len(),
                self.assignments.len()
            )));
        }
        let mut sums = vec![0.0; self.k];
        let mut counts = vec![0usize; self.k];
        for (&a, &s) in self.assignments.iter().zip(composite_scores) {
            sums[a] += s;
            counts[a] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::Data(format!("cluster {empty} is empty")));
        }
        self.mean_composite = sums
            .iter()
            .zip(&counts)
            .map(|(s, &c)| s / c as f64)
            .collect();
        let mut best = 0usize;
        for c in 1..self.k {
            if self.mean_composite[c] > self.mean_composite[best] {
                best = c;
            }
        }
        self.optimal_cluster_id = Some(best);
        Ok(self)
    }

    pub fn optimal_centroid_positions(&self) -> Result<&[f64]> {
        let id = self
            .optimal_cluster_id
            .ok_or(Error::Unfitted("optimal cluster not selected"))?;
        Ok(&self.centroid_positions[id])
    }
}

/// Mean over the five roles of the Euclidean distance between actual and
/// centroid (x, y). Both vectors are ten rink coordinates.
pub fn deviation(window_positions: &[f64], centroid_positions: &[f64]) -> Result<f64> {
    if window_positions.len() != 10 || centroid_positions.len() != 10 {
        return Err(Error::Data(format!(
            "deviation needs ten-dimensional vectors, got {} and {}",
            window_positions.len(),
            centroid_positions.len()
        )));
    }
    let mut total = 0.0;
    for role in 0..5 {
        let dx = window_positions[2 * role] - centroid_positions[2 * role];
        let dy = window_positions[2 * role + 1] - centroid_positions[2 * role + 1];
        total += (dx * dx + dy * dy).sqrt();
    }
    Ok(total / 5.0)
}

/// Deviation for a window's role positions; missing roles are an error.
pub fn deviation_for_window(positions: &RolePositions, centroid: &[f64]) -> Result<f64> {
    let full = positions
        .full_vector()
        .ok_or_else(|| Error::Data("window is missing a role position".into()))?;
    deviation(&full, centroid)
}

/// Flag the windows whose deviation falls within the lowest 25th percentile
/// (nearest-rank definition).
pub fn flag_optimally_positioned(deviations: &[f64]) -> Vec<bool> {
    if deviations.is_empty() {
        return Vec::new();
    }
    let threshold = percentile_nearest_rank(deviations, 25.0);
    deviations.iter().map(|&d| d <= threshold).collect()
}

/// Per-role mean positions over the windows in the lowest momentum
/// quartile. Windows lacking a full position vector are skipped; at least 4
/// positioned windows are required.
pub fn defensive_positions(
    windows: &[WindowFeatures],
    momentum_scores: &[f64],
) -> Result<[f64; 10]> {
    if windows.len() != momentum_scores.len() {
        return Err(Error::Data("windows/momentum length mismatch".into()));
    }
    let positioned: Vec<(usize, [f64; 10])> = windows
        .iter()
        .enumerate()
        .filter_map(|(i, w)| w.positions.full_vector().map(|v| (i, v)))
        .collect();
    if positioned.len() < 4 {
        return Err(Error::Data(format!(
            "defensive positioning needs >= 4 positioned windows, got {}",
            positioned.len()
        )));
    }
    let scores: Vec<f64> = positioned.iter().map(|(i, _)| momentum_scores[*i]).collect();
    let threshold = percentile_nearest_rank(&scores, 25.0);

    let mut mean = [0.0; 10];
    let mut count = 0usize;
    for ((_, v), &m) in positioned.iter().zip(&scores) {
        if m <= threshold {
            for (acc, x) in mean.iter_mut().zip(v) {
                *acc += x;
            }
            count += 1;
        }
    }
    for acc in &mut mean {
        *acc /= count as f64;
    }
    Ok(mean)
}

/// Binned positional density over a rectangular zone; points outside the
/// bounds are ignored. Defaults cover the offensive zone (blue line to the
/// end boards) at 50 x 50 resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
    pub nx: usize,
    pub ny: usize,
    /// counts[ix][iy]
    pub counts: Vec<Vec<u32>>,
}

pub const OFFENSIVE_ZONE: (f64, f64, f64, f64) = (25.0, 100.0, -42.5, 42.5);

impl DensityGrid {
    pub fn new(bounds: (f64, f64, f64, f64), nx: usize, ny: usize) -> Self {
        let (x_lo, x_hi, y_lo, y_hi) = bounds;
        DensityGrid { x_lo, x_hi, y_lo, y_hi, nx, ny, counts: vec![vec![0; ny]; nx] }
    }

    pub fn add(&mut self, x: f64, y: f64) {
        if x < self.x_lo || x >= self.x_hi || y < self.y_lo || y >= self.y_hi {
            return;
        }
        let ix = (((x - self.x_lo) / (self.x_hi - self.x_lo)) * self.nx as f64) as usize;
        let iy = (((y - self.y_lo) / (self.y_hi - self.y_lo)) * self.ny as f64) as usize;
        self.counts[ix.min(self.nx - 1)][iy.min(self.ny - 1)] += 1;
    }

    /// Long-form CSV: `x_center,y_center,count`, one row per bin.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x_center,y_center,count\n");
        let dx = (self.x_hi - self.x_lo) / self.nx as f64;
        let dy = (self.y_hi - self.y_lo) / self.ny as f64;
        for ix in 0..self.nx {
            for iy in 0..self.ny {
                let xc = self.x_lo + (ix as f64 + 0.5) * dx;
                let yc = self.y_lo + (iy as f64 + 0.5) * dy;
                out.push_str(&format!("{xc},{yc},{}\n", self.counts[ix][iy]));
            }
        }
        out
    }
}

/// Pool all five role positions from each window into a density grid.
pub fn position_density(windows: &[&WindowFeatures], bounds: (f64, f64, f64, f64), nx: usize, ny: usize) -> DensityGrid {
    let mut grid = DensityGrid::new(bounds, nx, ny);
    for w in windows {
        for slot in w.positions.means.iter().flatten() {
            grid.add(slot[0], slot[1]);
        }
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn window_at(game: &str, start: f64, positions: [f64; 10]) -> WindowFeatures {
        let mut rp = RolePositions::default();
        for r in 0..5 {
            rp.means[r] = Some([positions[2 * r], positions[2 * r + 1]]);
        }
        WindowFeatures {
            window_id: format!("{game}:{start}"),
            game_id: game.into(),
            window_start_s: start,
            counts: BTreeMap::new(),
            goal_label: 0,
            positions: rp,
            event_token_sequence: vec![],
        }
    }

    #[test]
    fn deviation_examples() {
        let c = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
        assert_eq!(deviation(&c, &c).unwrap(), 0.0);
        // One role offset by (3, 4): mean distance (5+0+0+0+0)/5 = 1.
        let mut w = c;
        w[0] += 3.0;
        w[1] += 4.0;
        assert!((deviation(&w, &c).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deviation_is_translation_covariant() {
        let c = [0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0];
        let w = [0.5, 0.1, 1.2, 0.9, 2.5, 2.1, 3.3, 2.7, 4.4, 4.2];
        let base = deviation(&w, &c).unwrap();
        let shift = 7.3;
        let ws: Vec<f64> = w.iter().map(|v| v + shift).collect();
        let cs: Vec<f64> = c.iter().map(|v| v + shift).collect();
        assert!((deviation(&ws, &cs).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn missing_role_is_an_error() {
        let mut rp = RolePositions::default();
        rp.means[0] = Some([1.0, 2.0]);
        let c = [0.0; 10];
        assert!(deviation_for_window(&rp, &c).is_err());
    }

    #[test]
    fn percentile_flag_counts_exactly_a_quarter() {
        let deviations: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        let flags = flag_optimally_positioned(&deviations);
        assert_eq!(flags.iter().filter(|&&f| f).count(), 25);
        assert!(flags[24] && !flags[25]);
    }

    #[test]
    fn optimal_cluster_selection_and_ties() {
        let clusters = FormationClusters {
            k: 2,
            centroids: vec![vec![0.0], vec![1.0]],
            centroid_positions: vec![vec![0.0; 10], vec![1.0; 10]],
            assignments: vec![0, 0, 1, 1],
            mean_composite: Vec::new(),
            optimal_cluster_id: None,
        };
        let selected = clusters.clone().select_optimal_cluster(&[1.0, 1.2, 1.8, 2.0]).unwrap();
        assert_eq!(selected.optimal_cluster_id, Some(1));
        assert_eq!(selected.mean_composite, vec![1.1, 1.9]);

        // Equal means: lower id wins.
        let tied = clusters.clone().select_optimal_cluster(&[1.5, 1.5, 1.5, 1.5]).unwrap();
        assert_eq!(tied.optimal_cluster_id, Some(0));

        // Scaling composites by a positive constant keeps the argmax.
        let scaled = clusters.select_optimal_cluster(&[3.0, 3.6, 5.4, 6.0]).unwrap();
        assert_eq!(scaled.optimal_cluster_id, Some(1));
    }

    #[test]
    fn defensive_positions_use_only_the_bottom_quartile() {
        let windows = vec![
            window_at("g", 0.0, [1.0; 10]),
            window_at("g", 30.0, [2.0; 10]),
            window_at("g", 60.0, [3.0; 10]),
            window_at("g", 90.0, [4.0; 10]),
        ];
        let momentum = [1.0, 2.0, 3.0, 4.0];
        let mean = defensive_positions(&windows, &momentum).unwrap();
        assert_eq!(mean, [1.0; 10]);

        // order invariance
        let mut reordered = windows.clone();
        reordered.reverse();
        let momentum_rev = [4.0, 3.0, 2.0, 1.0];
        assert_eq!(defensive_positions(&reordered, &momentum_rev).unwrap(), mean);
    }

    #[test]
    fn identical_windows_return_that_position() {
        let windows: Vec<WindowFeatures> =
            (0..8).map(|i| window_at("g", i as f64, [5.0; 10])).collect();
        let momentum: Vec<f64> = (0..8).map(|i| 1.0 + i as f64).collect();
        assert_eq!(defensive_positions(&windows, &momentum).unwrap(), [5.0; 10]);
    }

    #[test]
    fn density_grid_bins_and_ignores_out_of_zone() {
        let mut g = DensityGrid::new(OFFENSIVE_ZONE, 50, 50);
        g.add(26.0, 0.0);
        g.add(99.9, 42.0);
        g.add(10.0, 0.0); // behind the blue line: ignored
        let total: u32 = g.counts.iter().flatten().sum();
        assert_eq!(total, 2);
    }
}

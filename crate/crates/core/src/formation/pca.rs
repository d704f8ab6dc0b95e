//! Principal component analysis with internal standardization and a
//! deterministic sign convention.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    /// Retained components as orthonormal rows over the standardized space.
    pub components: Vec<Vec<f64>>,
    /// Variance fraction per retained component, nonincreasing.
    pub explained_variance_ratio: Vec<f64>,
}

impl PcaModel {
    /// Standardize columns to zero mean / unit variance, eigendecompose the
    /// covariance, and retain the smallest component count whose cumulative
    /// explained variance reaches `variance_target`. The sign convention
    /// makes each component's largest-magnitude loading positive.
    pub fn fit(matrix: &[Vec<f64>], variance_target: f64) -> Result<Self> {
        let n = matrix.len();
        if n < 2 {
            return Err(Error::Data(format!("PCA needs at least 2 rows, got {n}")));
        }
        let dim = matrix[0].len();
        if matrix.iter().any(|r| r.len() != dim) {
            return Err(Error::Data("ragged position matrix".into()));
        }
        if !(0.0 < variance_target && variance_target <= 1.0) {
            return Err(Error::Config(format!(
                "variance_target must be in (0, 1], got {variance_target}"
            )));
        }

        let mut means = vec![0.0; dim];
        for row in matrix {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n as f64;
        }
        let mut scales = vec![0.0; dim];
        for row in matrix {
            for (s, (v, m)) in scales.iter_mut().zip(row.iter().zip(&means)) {
                *s += (v - m) * (v - m);
            }
        }
        for (j, s) in scales.iter_mut().enumerate() {
            *s = (*s / (n as f64 - 1.0)).sqrt();
            if *s <= 1e-12 {
                return Err(Error::Data(format!(
                    "column {j} has zero variance; standardization undefined"
                )));
            }
        }

        // Covariance of the standardized data (the correlation matrix).
        let mut z = DMatrix::zeros(n, dim);
        for (i, row) in matrix.iter().enumerate() {
            for j in 0..dim {
                z[(i, j)] = (row[j] - means[j]) / scales[j];
            }
        }
        let cov = z.transpose() * &z / (n as f64 - 1.0);
        let eig = SymmetricEigen::new(cov);

        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .expect("finite eigenvalues")
        });
        let total: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();

        let mut components = Vec::new();
        let mut ratios = Vec::new();
        let mut cumulative = 0.0;
        for &idx in &order {
            let ratio = eig.eigenvalues[idx].max(0.0) / total;
            let mut row: Vec<f64> = (0..dim).map(|j| eig.eigenvectors[(j, idx)]).collect();
            // Sign convention: largest-magnitude loading positive.
            let lead = row
                .iter()
                .cloned()
                .fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
            if lead < 0.0 {
                for v in &mut row {
                    *v = -*v;
                }
            }
            components.push(row);
            ratios.push(ratio);
            cumulative += ratio;
            if cumulative >= variance_target - 1e-12 {
                break;
            }
        }

        Ok(PcaModel { means, scales, components, explained_variance_ratio: ratios })
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// Standardize and project one row into component space.
    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        let z: Vec<f64> = row
            .iter()
            .zip(self.means.iter().zip(&self.scales))
            .map(|(v, (m, s))| (v - m) / s)
            .collect();
        self.components
            .iter()
            .map(|c| c.iter().zip(&z).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn transform_all(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform(r)).collect()
    }

    /// Back-project from component space and undo the standardization.
    pub fn inverse_transform(&self, embedding: &[f64]) -> Vec<f64> {
        let dim = self.means.len();
        let mut z = vec![0.0; dim];
        for (coef, comp) in embedding.iter().zip(&self.components) {
            for (zj, cj) in z.iter_mut().zip(comp) {
                *zj += coef * cj;
            }
        }
        z.iter()
            .zip(self.means.iter().zip(&self.scales))
            .map(|(v, (m, s))| v * s + m)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rank_one_data_needs_one_component() {
        // Points on a line embedded in 10-D.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let direction: Vec<f64> = (0..10).map(|j| (j as f64 + 1.0) * 0.3).collect();
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| {
                let t: f64 = rng.random_range(-2.0..2.0);
                direction.iter().map(|d| d * t).collect()
            })
            .collect();
        let pca = PcaModel::fit(&rows, 0.85).unwrap();
        assert_eq!(pca.n_components(), 1);
        assert!((pca.explained_variance_ratio[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn isotropic_data_spreads_variance_evenly() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rows: Vec<Vec<f64>> = (0..20000)
            .map(|_| {
                (0..10)
                    .map(|_| {
                        let u: f64 = rng.random_range(0.0f64..1.0);
                        let v: f64 = rng.random_range(0.0f64..1.0);
                        (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
                    })
                    .collect()
            })
            .collect();
        let pca = PcaModel::fit(&rows, 0.85).unwrap();
        // Each component explains ~1/10; reaching 85% takes 9 components.
        assert_eq!(pca.n_components(), 9);
        for r in &pca.explained_variance_ratio {
            assert!((r - 0.1).abs() < 0.02, "ratio {r}");
        }
    }

    #[test]
    fn retained_subspace_points_reconstruct_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..6).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let pca = PcaModel::fit(&rows, 1.0).unwrap();
        assert_eq!(pca.n_components(), 6);
        let point = &rows[17];
        let rebuilt = pca.inverse_transform(&pca.transform(point));
        for (a, b) in point.iter().zip(&rebuilt) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn component_rows_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows: Vec<Vec<f64>> = (0..300)
            .map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let pca = PcaModel::fit(&rows, 1.0).unwrap();
        for (i, a) in pca.components.iter().enumerate() {
            for (j, b) in pca.components.iter().enumerate() {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-9);
            }
        }
        // Ratios nonincreasing and summing to <= 1.
        let sum: f64 = pca.explained_variance_ratio.iter().sum();
        assert!(sum <= 1.0 + 1e-9);
        for w in pca.explained_variance_ratio.windows(2) {
            assert!(w[0] >= w[1] - 1e-12);
        }
    }

    #[test]
    fn zero_variance_column_is_an_error() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 4.2]).collect();
        assert!(matches!(PcaModel::fit(&rows, 0.85), Err(Error::Data(_))));
    }
}

//! Lloyd's K-Means with k-means++ style seeding, deterministic given the
//! seed, plus silhouette scoring for cluster-count selection.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_LLOYD_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    /// Inertia (sum of squared distances to the assigned centroid) recorded
    /// after every assignment step; nonincreasing by Lloyd's construction.
    pub inertia_history: Vec<f64>,
    pub inertia: f64,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding: first center uniform, then successive centers drawn
/// with probability proportional to squared distance from the chosen set.
fn seed_centroids(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)].clone());

    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            // All remaining mass at distance zero: pick uniformly.
            rng.random_range(0..n)
        } else {
            let mut target = rng.random_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        };
        centroids.push(points[next].clone());
        for (i, p) in points.iter().enumerate() {
            let d = sq_dist(p, centroids.last().expect("just pushed"));
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centroids
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut assignments = vec![0usize; points.len()];
    let mut inertia = 0.0;
    for (i, p) in points.iter().enumerate() {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (c, centroid) in centroids.iter().enumerate() {
            let d = sq_dist(p, centroid);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        assignments[i] = best;
        inertia += best_d;
    }
    (assignments, inertia)
}

/// Lloyd iterations until assignments stabilize or 300 iterations. Empty
/// clusters are repaired by reseating them on the point farthest from its
/// current centroid.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansResult> {
    let n = points.len();
    if k == 0 {
        return Err(Error::Config("k must be >= 1".into()));
    }
    if k > n {
        return Err(Error::Data(format!("k = {k} exceeds {n} points")));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Data("ragged embedding matrix".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(points, k, &mut rng);
    let mut inertia_history = Vec::new();
    let (mut assignments, mut inertia) = assign(points, &centroids);
    inertia_history.push(inertia);

    let mut iterations = 0;
    for _ in 0..MAX_LLOYD_ITERATIONS {
        iterations += 1;

        // Update step: centroids move to their members' means.
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for s in &mut sums[c] {
                    *s /= counts[c] as f64;
                }
                centroids[c] = sums[c].clone();
            }
        }

        // Repair empty clusters: reseat on the farthest point.
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .max_by(|&a, &b| {
                        sq_dist(&points[a], &centroids[assignments[a]])
                            .partial_cmp(&sq_dist(&points[b], &centroids[assignments[b]]))
                            .expect("finite distances")
                    })
                    .expect("non-empty points");
                centroids[c] = points[far].clone();
                assignments[far] = c;
                counts[c] = 1;
            }
        }

        let (new_assignments, new_inertia) = assign(points, &centroids);
        inertia_history.push(new_inertia);
        let stable = new_assignments == assignments;
        assignments = new_assignments;
        inertia = new_inertia;
        if stable {
            break;
        }
    }

    Ok(KMeansResult { k, centroids, assignments, inertia_history, inertia, iterations })
}

/// Mean silhouette over all points (full pairwise distances).
pub fn silhouette_score(points: &[Vec<f64>], assignments: &[usize], k: usize) -> f64 {
    let n = points.len();
    if n < 2 || k < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut counted = 0usize;
    for i in 0..n {
        let own = assignments[i];
        let mut sums = vec![0.0f64; k];
        let mut counts = vec![0usize; k];
        for j in 0..n {
            if i == j {
                continue;
            }
            sums[assignments[j]] += sq_dist(&points[i], &points[j]).sqrt();
            counts[assignments[j]] += 1;
        }
        if counts[own] == 0 {
            continue; // singleton cluster: silhouette undefined, skip
        }
        let a = sums[own] / counts[own] as f64;
        let b = (0..k)
            .filter(|&c| c != own && counts[c] > 0)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        if !b.is_finite() {
            continue;
        }
        total += (b - a) / a.max(b);
        counted += 1;
    }
    if counted == 0 {
        0.0
    } else {
        total / counted as f64
    }
}

/// Pick the cluster count maximizing mean silhouette over `k_range`,
/// evaluated on a seeded subsample of at most `subsample_cap` points.
/// Ties keep the smaller k.
pub fn select_k_by_silhouette(
    points: &[Vec<f64>],
    k_range: std::ops::RangeInclusive<usize>,
    seed: u64,
    subsample_cap: usize,
) -> Result<(usize, Vec<(usize, f64)>)> {
    let n = points.len();
    let sample_idx: Vec<usize> = if n <= subsample_cap {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x51));
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..subsample_cap {
            let j = rng.random_range(i..n);
            idx.swap(i, j);
        }
        idx.truncate(subsample_cap);
        idx
    };
    let sample: Vec<Vec<f64>> = sample_idx.iter().map(|&i| points[i].clone()).collect();

    let mut scores = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    for k in k_range {
        if k > sample.len() {
            break;
        }
        let result = kmeans(&sample, k, seed)?;
        let s = silhouette_score(&sample, &result.assignments, k);
        scores.push((k, s));
        if best.is_none_or(|(_, bs)| s > bs) {
            best = Some((k, s));
        }
    }
    let (best_k, _) = best.ok_or_else(|| Error::Data("empty k range".into()))?;
    Ok((best_k, scores))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs(centers: &[[f64; 2]], per: usize, sigma: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::new();
        let mut truth = Vec::new();
        for (ci, c) in centers.iter().enumerate() {
            for _ in 0..per {
                let dx: f64 = rng.random_range(-1.0..1.0) * sigma;
                let dy: f64 = rng.random_range(-1.0..1.0) * sigma;
                points.push(vec![c[0] + dx, c[1] + dy]);
                truth.push(ci);
            }
        }
        (points, truth)
    }

    #[test]
    fn k_equals_one_recovers_the_mean() {
        let points = vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![1.0, 3.0]];
        let r = kmeans(&points, 1, 0).unwrap();
        assert!((r.centroids[0][0] - 1.0).abs() < 1e-12);
        assert!((r.centroids[0][1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn well_separated_blobs_are_recovered() {
        let centers = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]];
        let (points, truth) = blobs(&centers, 60, 0.1, 5);
        let r = kmeans(&points, 3, 1).unwrap();
        // Every recovered centroid lies within 0.05 of a true center.
        for c in &r.centroids {
            let nearest = centers
                .iter()
                .map(|t| sq_dist(c, t).sqrt())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 0.05, "centroid {c:?} off by {nearest}");
        }
        // Assignment accuracy is 100% up to label permutation: members of
        // each true blob share one label, and the labels are distinct.
        let mut label_of_truth = [usize::MAX; 3];
        for (i, &t) in truth.iter().enumerate() {
            if label_of_truth[t] == usize::MAX {
                label_of_truth[t] = r.assignments[i];
            }
            assert_eq!(r.assignments[i], label_of_truth[t]);
        }
        assert_eq!(
            {
                let mut l = label_of_truth.to_vec();
                l.sort();
                l.dedup();
                l.len()
            },
            3
        );
    }

    #[test]
    fn inertia_never_increases() {
        let (points, _) = blobs(&[[0.0, 0.0], [3.0, 1.0], [6.0, -2.0], [1.0, 5.0]], 50, 1.0, 9);
        let r = kmeans(&points, 4, 3).unwrap();
        for w in r.inertia_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "inertia rose {} -> {}", w[0], w[1]);
        }
        assert!(r.inertia <= r.inertia_history[0]);
    }

    #[test]
    fn k_larger_than_n_is_an_error() {
        let points = vec![vec![0.0], vec![1.0]];
        assert!(kmeans(&points, 3, 0).is_err());
    }

    #[test]
    fn fixed_seed_is_bit_deterministic() {
        let (points, _) = blobs(&[[0.0, 0.0], [5.0, 5.0]], 100, 1.5, 12);
        let a = kmeans(&points, 2, 7).unwrap();
        let b = kmeans(&points, 2, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn silhouette_prefers_the_true_cluster_count() {
        let (points, _) = blobs(&[[0.0, 0.0], [12.0, 0.0], [0.0, 12.0]], 80, 0.8, 2);
        let (best_k, _) = select_k_by_silhouette(&points, 2..=6, 11, 2000).unwrap();
        assert_eq!(best_k, 3);
    }
}

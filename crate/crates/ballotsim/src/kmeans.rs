//! K-means clustering of regions on their selected demographic columns,
//! with distance-weighted seeding and restarts.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{domain, substream};

/// A fitted clustering: every point assigned to exactly one non-empty
/// cluster, plus the within-cluster sum of squared distances it achieved.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub objective: f64,
    /// Objective after each Lloyd iteration of the winning restart.
    pub objective_trace: Vec<f64>,
    /// Empty-cluster reseed events in the winning restart.
    pub reseeds: usize,
}

impl ClusterModel {
    pub fn cluster_members(&self, cluster: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == cluster)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(point, centroid);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    (best, best_d)
}

/// Distance-weighted seeding: first centroid uniform, then each next
/// centroid drawn with probability proportional to squared distance from
/// the nearest chosen one. Falls back to the first unchosen point when
/// all distances are zero.
fn seed_centroids(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut chosen = vec![false; n];
    let first = rng.gen_range(0..n);
    centroids.push(points[first].clone());
    chosen[first] = true;

    let mut d2 = vec![0.0f64; n];
    while centroids.len() < k {
        let mut total = 0.0;
        for (i, p) in points.iter().enumerate() {
            d2[i] = nearest(p, &centroids).1;
            total += d2[i];
        }
        let next = if total > 0.0 {
            let mut u = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if u < w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            pick
        } else {
            // duplicated points: take the first index not yet a centroid
            (0..n).find(|&i| !chosen[i]).unwrap_or(0)
        };
        chosen[next] = true;
        centroids.push(points[next].clone());
    }
    centroids
}

struct LloydRun {
    assignments: Vec<usize>,
    centroids: Vec<Vec<f64>>,
    objective: f64,
    trace: Vec<f64>,
    reseeds: usize,
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, max_iters: usize) -> LloydRun {
    let n = points.len();
    let k = centroids.len();
    let dim = points[0].len();
    let mut assignments = vec![0usize; n];
    let mut trace = Vec::new();
    let mut reseeds = 0usize;

    for _ in 0..max_iters {
        let mut changed = false;
        let mut objective = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest(p, &centroids);
            objective += d;
            if assignments[i] != c {
                assignments[i] = c;
                changed = true;
            }
        }
        trace.push(objective);

        // Recompute centroids; reseed any empty cluster at the point
        // farthest from its assigned centroid.
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            counts[assignments[i]] += 1;
            for (s, v) in sums[assignments[i]].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .max_by(|&a, &b| {
                        sq_dist(&points[a], &centroids[assignments[a]])
                            .total_cmp(&sq_dist(&points[b], &centroids[assignments[b]]))
                    })
                    .unwrap();
                centroids[c] = points[far].clone();
                reseeds += 1;
                changed = true;
            } else {
                for (j, s) in sums[c].iter().enumerate() {
                    centroids[c][j] = s / counts[c] as f64;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut objective = 0.0;
    for (i, p) in points.iter().enumerate() {
        let (c, d) = nearest(p, &centroids);
        assignments[i] = c;
        objective += d;
    }
    trace.push(objective);
    LloydRun {
        assignments,
        centroids,
        objective,
        trace,
        reseeds,
    }
}

/// Cluster `points` into `k` groups, best of `restarts` seeded runs by
/// the within-cluster sum of squares.
pub fn kmeans(points: &[Vec<f64>], k: usize, restarts: usize, seed: u64) -> Result<ClusterModel> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    let restarts = restarts.max(1);
    let mut best: Option<LloydRun> = None;
    for r in 0..restarts {
        let mut rng = substream(seed, &[domain::KMEANS, r as u64]);
        let centroids = seed_centroids(points, k, &mut rng);
        let run = lloyd(points, centroids, 300);
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    let run = best.unwrap();

    // Compact labels so every cluster id in 0..k is non-empty.
    let mut remap = vec![usize::MAX; k];
    let mut next = 0usize;
    let mut assignments = Vec::with_capacity(n);
    for &a in &run.assignments {
        if remap[a] == usize::MAX {
            remap[a] = next;
            next += 1;
        }
        assignments.push(remap[a]);
    }
    let mut centroids = vec![Vec::new(); next];
    for (old, &new) in remap.iter().enumerate() {
        if new != usize::MAX {
            centroids[new] = run.centroids[old].clone();
        }
    }

    Ok(ClusterModel {
        k: next,
        assignments,
        centroids,
        objective: run.objective,
        objective_trace: run.trace,
        reseeds: run.reseeds,
    })
}

/// Mean silhouette of a clustering (singletons score zero).
pub fn mean_silhouette(points: &[Vec<f64>], model: &ClusterModel) -> f64 {
    let n = points.len();
    if n == 0 || model.k < 2 {
        return 0.0;
    }
    let sizes = model.cluster_sizes();
    let mut total = 0.0;
    for i in 0..n {
        let own = model.assignments[i];
        if sizes[own] <= 1 {
            continue; // silhouette 0
        }
        let mut sums = vec![0.0f64; model.k];
        for j in 0..n {
            if i == j {
                continue;
            }
            sums[model.assignments[j]] += sq_dist(&points[i], &points[j]).sqrt();
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..model.k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        if b.is_finite() {
            let s = (b - a) / a.max(b).max(1e-300);
            total += s;
        }
    }
    total / n as f64
}

/// Pick `k` by mean silhouette over `2..=min(12, n - 1)`, parsimoniously:
/// the smallest `k` whose silhouette reaches 95% of the best. On data
/// without real cluster structure the silhouette profile is flat noise,
/// and preferring small `k` there keeps the downstream models stable.
pub fn silhouette_k(points: &[Vec<f64>], restarts: usize, seed: u64) -> Result<usize> {
    let n = points.len();
    if n <= 2 {
        return Ok(1);
    }
    let max_k = 12.min(n - 1);
    let mut scores = Vec::new();
    for k in 2..=max_k {
        let model = kmeans(points, k, restarts, seed)?;
        scores.push((k, mean_silhouette(points, &model)));
    }
    let best = scores
        .iter()
        .map(|&(_, s)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    let cutoff = if best > 0.0 { 0.95 * best } else { best };
    Ok(scores
        .iter()
        .find(|&&(_, s)| s >= cutoff)
        .map(|&(k, _)| k)
        .unwrap_or(2))
}

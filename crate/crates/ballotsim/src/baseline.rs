//! Unsupervised two-step comparator: k-means on demographics, then
//! density-based outlier detection on actual result values within each
//! cluster. Uses no poll data.

use serde::{Deserialize, Serialize};

use crate::detector::{DetectionReport, DetectorMeta, ReportRow};
use crate::error::{Error, Result};
use crate::kmeans::{kmeans, silhouette_k};
use crate::regression::DemographicMatrix;
use crate::votecast::RegionResults;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DensityParams {
    /// Neighborhood radius in result-share units; `None` derives
    /// 1.5 times the median nearest-neighbor distance per cluster.
    pub eps: Option<f64>,
    pub min_pts: usize,
}

impl Default for DensityParams {
    fn default() -> Self {
        Self {
            eps: None,
            min_pts: 3,
        }
    }
}

impl DensityParams {
    pub fn validate(&self) -> Result<()> {
        if let Some(eps) = self.eps {
            if eps <= 0.0 || eps.is_nan() {
                return Err(Error::ParamRange {
                    name: "eps",
                    value: eps,
                    min: 0.0,
                    max: f64::INFINITY,
                });
            }
        }
        if self.min_pts == 0 {
            return Err(Error::ParamRange {
                name: "min_pts",
                value: 0.0,
                min: 1.0,
                max: f64::INFINITY,
            });
        }
        Ok(())
    }
}

/// Density noise flags for 1-D values. A point is core when at least
/// `min_pts` values (itself included) lie within `eps`; noise points are
/// neither core nor within `eps` of a core point. Order-independent.
pub fn dbscan_noise(values: &[f64], eps: f64, min_pts: usize) -> Vec<bool> {
    let n = values.len();
    let within = |i: usize, j: usize| (values[i] - values[j]).abs() <= eps;
    let core: Vec<bool> = (0..n)
        .map(|i| (0..n).filter(|&j| within(i, j)).count() >= min_pts)
        .collect();
    (0..n)
        .map(|i| !core[i] && !(0..n).any(|j| core[j] && within(i, j)))
        .collect()
}

/// Median nearest-neighbor distance of `values` (0 for fewer than 2).
fn median_nn_distance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mut nn: Vec<f64> = (0..values.len())
        .map(|i| {
            (0..values.len())
                .filter(|&j| j != i)
                .map(|j| (values[i] - values[j]).abs())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    nn.sort_unstable_by(f64::total_cmp);
    let mid = nn.len() / 2;
    if nn.len().is_multiple_of(2) {
        (nn[mid - 1] + nn[mid]) / 2.0
    } else {
        nn[mid]
    }
}

/// Run the baseline: cluster on demographics, flag density noise on
/// actual shares within each cluster. The report carries no decision
/// values or predictions.
pub fn run_baseline1(
    design: &DemographicMatrix,
    actual: &RegionResults,
    k: Option<usize>,
    params: &DensityParams,
    restarts: usize,
    seed: u64,
) -> Result<DetectionReport> {
    params.validate()?;
    let shares = actual.shares_in_region_order();
    if shares.len() != design.rows {
        return Err(Error::RegionSetMismatch);
    }
    let mut region_ids: Vec<u32> = actual.regions.iter().map(|r| r.region_id).collect();
    region_ids.sort_unstable();

    let cols = design.varying_columns();
    let points = if cols.is_empty() {
        vec![vec![0.0]; design.rows]
    } else {
        design.select_rows(&cols)
    };
    let k = match k {
        Some(k) => k,
        None if cols.is_empty() => 1,
        None => silhouette_k(&points, restarts, seed)?,
    };
    let clusters = kmeans(&points, k, restarts, seed)?;

    let mut flagged = vec![false; shares.len()];
    for c in 0..clusters.k {
        let members = clusters.cluster_members(c);
        let values: Vec<f64> = members.iter().map(|&i| shares[i]).collect();
        let eps = params.eps.unwrap_or_else(|| 1.5 * median_nn_distance(&values));
        let noise = dbscan_noise(&values, eps, params.min_pts);
        for (slot, &i) in members.iter().enumerate() {
            flagged[i] = noise[slot];
        }
    }

    let rows = (0..shares.len())
        .map(|i| ReportRow {
            region_id: region_ids[i],
            cluster: clusters.assignments[i],
            y_hat: None,
            z_hat: None,
            actual: shares[i],
            decision: None,
            flagged: flagged[i],
        })
        .collect();

    Ok(DetectionReport {
        rows,
        meta: DetectorMeta {
            selected: cols.clone(),
            selected_labels: cols.iter().map(|&c| design.labels[c].clone()).collect(),
            beta: vec![],
            k: clusters.k,
            nu: 0.0,
            gamma: 0.0,
            seed,
            empty_cell_fallbacks: 0,
            merged_clusters: 0,
            poll_offset: 0.0,
        },
        models: vec![],
    })
}

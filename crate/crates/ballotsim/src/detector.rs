//! The anomalous-region detector.
//!
//! Pipeline: build a region-by-demographics design matrix, select
//! predictive columns by stepwise AIC, regress actual region shares on
//! them to get per-region predictions, cluster regions on the selected
//! demographics, extrapolate the poll to each region by attribute
//! independence, train a one-class SVM per cluster on the
//! (regression, poll) prediction pairs, then score each region's actual
//! result against its cluster's model. Regions with negative decision
//! values are flagged.
//!
//! The detector consumes only demographics, the poll table, and
//! (post-fraud) results. Ground-truth fraud labels never enter here.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmeans::{kmeans, silhouette_k, ClusterModel};
use crate::ocsvm::{fit_ocsvm, KernelParams, OcSvmModel};
use crate::polling::PollTable;
use crate::popgen::{region_demographics, DemographicProfile, Population};
use crate::regression::{fit_regression, select_variables, DemographicMatrix};
use crate::votecast::RegionResults;

/// Which 2-D observation is scored against the cluster model trained on
/// `(regression prediction, poll prediction)` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationMode {
    /// Score `(regression prediction, actual share)`. Default: keeps the
    /// test point in the trained plane while carrying the actual result.
    RegressionActual,
    /// Score `(poll prediction, actual share)`.
    PollActual,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectorParams {
    pub nu: f64,
    /// RBF width; `None` derives it from the diameter of the pooled
    /// training points (see `default_gamma`).
    pub gamma: Option<f64>,
    /// Cluster count; `None` picks k by mean silhouette over 2..=12.
    pub k: Option<usize>,
    pub restarts: usize,
    pub seed: u64,
    pub observation: ObservationMode,
    /// Shift scored actuals by the median poll-minus-actual gap, so the
    /// common polling swing of a single election does not count against
    /// every region at once. Per-region deviations are unaffected.
    pub recenter: bool,
    /// Refit the regression within each cluster after clustering.
    pub per_cluster_regression: bool,
    /// Clusters smaller than this are merged into their nearest neighbor
    /// before SVM training.
    pub min_cluster_size: usize,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            nu: 0.01,
            gamma: None,
            k: None,
            restarts: 10,
            seed: 0,
            observation: ObservationMode::RegressionActual,
            recenter: true,
            per_cluster_regression: false,
            min_cluster_size: 4,
        }
    }
}

/// Per-region poll-based predictions, ordered by region id.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PollPrediction {
    pub z_hat: Vec<f64>,
    /// Cells with no respondents that fell back to a marginal share.
    pub empty_cell_fallbacks: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    pub region_id: u32,
    pub cluster: usize,
    pub y_hat: Option<f64>,
    pub z_hat: Option<f64>,
    pub actual: f64,
    pub decision: Option<f64>,
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectorMeta {
    pub selected: Vec<usize>,
    pub selected_labels: Vec<String>,
    pub beta: Vec<f64>,
    pub k: usize,
    pub nu: f64,
    pub gamma: f64,
    pub seed: u64,
    pub empty_cell_fallbacks: usize,
    pub merged_clusters: usize,
    /// Median poll-minus-actual gap applied to scored observations when
    /// recentering is on; 0 otherwise.
    pub poll_offset: f64,
}

/// Per-region verdicts plus run metadata and the per-cluster models.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectionReport {
    pub rows: Vec<ReportRow>,
    pub meta: DetectorMeta,
    pub models: Vec<OcSvmModel>,
}

impl DetectionReport {
    pub fn flagged_region_ids(&self) -> Vec<u32> {
        self.rows
            .iter()
            .filter(|r| r.flagged)
            .map(|r| r.region_id)
            .collect()
    }
}

/// One row per region (ascending region id) of category fractions, with
/// the first category of every attribute dropped as the reference level.
pub fn build_design_matrix(population: &Population) -> Result<DemographicMatrix> {
    let schema = &population.schema;
    let mut regions: Vec<&crate::popgen::Region> = population.regions.iter().collect();
    regions.sort_by_key(|r| r.region_id);

    let mut labels = Vec::new();
    for attr in &schema.attributes {
        for c in 1..attr.n_categories() {
            labels.push(format!("{}={}", attr.name, attr.label(c)));
        }
    }
    let cols = labels.len();
    let mut data = Vec::with_capacity(regions.len() * cols);
    for region in &regions {
        let profile = region_demographics(region, schema)?;
        for block in &profile.marginals {
            data.extend_from_slice(&block[1..]);
        }
    }
    Ok(DemographicMatrix::new(regions.len(), cols, data, labels))
}

/// Poll-implied share for one region by attribute independence: a sum
/// over all attribute-combination cells of the product of the region's
/// per-attribute marginals times the cell's observed share for A.
pub fn extrapolate_poll(poll: &PollTable, profile: &DemographicProfile) -> Result<f64> {
    extrapolate_poll_detailed(poll, profile).map(|(z, _)| z)
}

/// As `extrapolate_poll`, also returning how many empty cells fell back
/// to a marginal share.
pub fn extrapolate_poll_detailed(
    poll: &PollTable,
    profile: &DemographicProfile,
) -> Result<(f64, usize)> {
    if poll.total_respondents() <= 0.0 {
        return Err(Error::EmptyPoll);
    }
    if profile.marginals.len() != poll.dims.len() {
        return Err(Error::DimensionMismatch {
            expected: poll.dims.len(),
            got: profile.marginals.len(),
        });
    }

    // Single-attribute marginal counts for the empty-cell fallback, plus
    // the global share as the last resort.
    let n_attrs = poll.dims.len();
    let mut marg_a: Vec<Vec<f64>> = poll.dims.iter().map(|&d| vec![0.0; d]).collect();
    let mut marg_total: Vec<Vec<f64>> = poll.dims.iter().map(|&d| vec![0.0; d]).collect();
    let mut global_a = 0.0;
    let mut global_total = 0.0;
    for cell in 0..poll.n_cells() {
        let attrs = PollTable::cell_attrs(&poll.dims, cell);
        let a = poll.count_a[cell];
        let t = a + poll.count_b[cell];
        for (attr, &cat) in attrs.iter().enumerate() {
            marg_a[attr][cat as usize] += a;
            marg_total[attr][cat as usize] += t;
        }
        global_a += a;
        global_total += t;
    }
    let global_share = global_a / global_total;

    let mut z = 0.0;
    let mut fallbacks = 0usize;
    for cell in 0..poll.n_cells() {
        let attrs = PollTable::cell_attrs(&poll.dims, cell);
        let mut weight = 1.0;
        for (attr, &cat) in attrs.iter().enumerate() {
            weight *= profile.marginals[attr][cat as usize];
        }
        if weight == 0.0 {
            continue;
        }
        let total = poll.count_a[cell] + poll.count_b[cell];
        let share = if total > 0.0 {
            poll.count_a[cell] / total
        } else {
            fallbacks += 1;
            // First attribute (in schema order) whose marginal for this
            // cell's category has respondents; global share if none do.
            (0..n_attrs)
                .find_map(|attr| {
                    let cat = attrs[attr] as usize;
                    if marg_total[attr][cat] > 0.0 {
                        Some(marg_a[attr][cat] / marg_total[attr][cat])
                    } else {
                        None
                    }
                })
                .unwrap_or(global_share)
        };
        z += weight * share;
    }
    Ok((z, fallbacks))
}

/// Poll predictions for every region, ordered by region id.
pub fn poll_predictions(poll: &PollTable, population: &Population) -> Result<PollPrediction> {
    let mut regions: Vec<&crate::popgen::Region> = population.regions.iter().collect();
    regions.sort_by_key(|r| r.region_id);
    let mut z_hat = Vec::with_capacity(regions.len());
    let mut fallbacks = 0;
    for region in regions {
        let profile = region_demographics(region, &population.schema)?;
        let (z, f) = extrapolate_poll_detailed(poll, &profile)?;
        z_hat.push(z);
        fallbacks += f;
    }
    Ok(PollPrediction {
        z_hat,
        empty_cell_fallbacks: fallbacks,
    })
}

/// Merge clusters smaller than `min_size` into the cluster with the
/// nearest centroid, relabeling compactly. Returns the merged model and
/// the number of merges performed.
pub fn merge_small_clusters(
    model: &ClusterModel,
    points: &[Vec<f64>],
    min_size: usize,
) -> (ClusterModel, usize) {
    let mut assignments = model.assignments.clone();
    let mut centroids = model.centroids.clone();
    let mut alive: Vec<bool> = vec![true; centroids.len()];
    let mut merges = 0usize;

    loop {
        let mut sizes = vec![0usize; centroids.len()];
        for &a in &assignments {
            sizes[a] += 1;
        }
        let smallest = (0..centroids.len())
            .filter(|&c| alive[c] && sizes[c] > 0 && sizes[c] < min_size)
            .min_by_key(|&c| sizes[c]);
        let Some(small) = smallest else { break };
        if alive.iter().filter(|&&v| v).count() <= 1 {
            break;
        }
        let target = (0..centroids.len())
            .filter(|&c| alive[c] && c != small && sizes[c] > 0)
            .min_by(|&a, &b| {
                let da: f64 = centroids[small]
                    .iter()
                    .zip(&centroids[a])
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum();
                let db: f64 = centroids[small]
                    .iter()
                    .zip(&centroids[b])
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum();
                da.total_cmp(&db)
            });
        let Some(target) = target else { break };
        for a in assignments.iter_mut() {
            if *a == small {
                *a = target;
            }
        }
        // Recompute the merged centroid from its members.
        let members: Vec<usize> = assignments
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == target)
            .map(|(i, _)| i)
            .collect();
        let dim = centroids[target].len();
        let mut mean = vec![0.0; dim];
        for &m in &members {
            for (s, v) in mean.iter_mut().zip(&points[m]) {
                *s += v;
            }
        }
        for s in mean.iter_mut() {
            *s /= members.len() as f64;
        }
        centroids[target] = mean;
        alive[small] = false;
        merges += 1;
    }

    // Compact labels.
    let mut remap = vec![usize::MAX; centroids.len()];
    let mut next = 0;
    for &a in &assignments {
        if remap[a] == usize::MAX {
            remap[a] = next;
            next += 1;
        }
    }
    let mut new_centroids = vec![Vec::new(); next];
    for (old, &new) in remap.iter().enumerate() {
        if new != usize::MAX {
            new_centroids[new] = centroids[old].clone();
        }
    }
    let merged = ClusterModel {
        k: next,
        assignments: assignments.iter().map(|&a| remap[a]).collect(),
        centroids: new_centroids,
        objective: model.objective,
        objective_trace: model.objective_trace.clone(),
        reseeds: model.reseeds,
    };
    (merged, merges)
}

/// Derive the default RBF width from the pooled training points: the
/// kernel length scale is set to the diameter of the training cloud,
/// `gamma = 1 / (2 d_max^2)`, so every training pair stays within one
/// kernel length and the fitted boundary is a single smooth region
/// rather than a bead per point.
pub fn default_gamma(points: &[[f64; 2]]) -> f64 {
    let mut max_sq = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in points.iter().skip(i + 1) {
            let d = (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
            if d > max_sq {
                max_sq = d;
            }
        }
    }
    if max_sq < 1e-12 {
        1.0
    } else {
        1.0 / (2.0 * max_sq)
    }
}

/// Train one model per cluster on that cluster's
/// `(regression prediction, poll prediction)` points.
pub fn train_cluster_svms(
    y_hat: &[f64],
    z_hat: &[f64],
    clusters: &ClusterModel,
    nu: f64,
    params: &KernelParams,
) -> Result<Vec<OcSvmModel>> {
    (0..clusters.k)
        .into_par_iter()
        .map(|c| {
            let members = clusters.cluster_members(c);
            let points: Vec<[f64; 2]> = members.iter().map(|&i| [y_hat[i], z_hat[i]]).collect();
            fit_ocsvm(&points, nu, params).map_err(|e| {
                Error::Other(format!("cluster {c} svm fit failed: {e}"))
            })
        })
        .collect()
}

/// Median of a slice (average of middle two for even lengths).
fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    }
}

/// Score every region's observation against its cluster model. The
/// scored actual is shifted by `offset` (the estimated common poll
/// swing); report rows keep the raw actual.
#[allow(clippy::too_many_arguments)]
pub fn detect(
    models: &[OcSvmModel],
    clusters: &ClusterModel,
    y_hat: &[f64],
    z_hat: &[f64],
    actual: &[f64],
    offset: f64,
    region_ids: &[u32],
    observation: ObservationMode,
) -> Vec<ReportRow> {
    (0..actual.len())
        .map(|i| {
            let cluster = clusters.assignments[i];
            let obs = match observation {
                ObservationMode::RegressionActual => [y_hat[i], actual[i] + offset],
                ObservationMode::PollActual => [z_hat[i], actual[i] + offset],
            };
            let decision = models[cluster].decision(obs);
            ReportRow {
                region_id: region_ids[i],
                cluster,
                y_hat: Some(y_hat[i]),
                z_hat: Some(z_hat[i]),
                actual: actual[i],
                decision: Some(decision),
                flagged: decision < 0.0,
            }
        })
        .collect()
}

/// Run the whole detector on one election.
pub fn run_pipeline(
    population: &Population,
    ballots_post_fraud: &crate::votecast::Ballots,
    poll: &PollTable,
    params: &DetectorParams,
) -> Result<DetectionReport> {
    let results =
        crate::votecast::tally(ballots_post_fraud, population).map_err(Error::at_stage("tally"))?;
    run_pipeline_on_results(population, &results, poll, params)
}

/// As `run_pipeline`, starting from already tallied results.
pub fn run_pipeline_on_results(
    population: &Population,
    results: &RegionResults,
    poll: &PollTable,
    params: &DetectorParams,
) -> Result<DetectionReport> {
    let design = build_design_matrix(population).map_err(Error::at_stage("design"))?;
    let mut region_ids: Vec<u32> = population.regions.iter().map(|r| r.region_id).collect();
    region_ids.sort_unstable();
    let actual = results.shares_in_region_order();
    {
        let mut result_ids: Vec<u32> = results.regions.iter().map(|r| r.region_id).collect();
        result_ids.sort_unstable();
        if result_ids != region_ids {
            return Err(Error::RegionSetMismatch);
        }
    }

    let selected = select_variables(&design, &actual).map_err(Error::at_stage("selection"))?;
    let model = fit_regression(&design, &selected, &actual).map_err(Error::at_stage("regression"))?;

    // Cluster on the selected demographic columns; when selection is
    // empty fall back to all varying columns so clustering has features.
    let cluster_cols = if selected.is_empty() {
        design.varying_columns()
    } else {
        selected.clone()
    };
    let cluster_points = if cluster_cols.is_empty() {
        // Indistinguishable regions: a single trivial cluster.
        vec![vec![0.0]; design.rows]
    } else {
        design.select_rows(&cluster_cols)
    };
    let k = match params.k {
        Some(k) => k,
        None if cluster_cols.is_empty() => 1,
        None => silhouette_k(&cluster_points, params.restarts, params.seed)
            .map_err(Error::at_stage("clustering"))?,
    };
    let clusters = kmeans(&cluster_points, k, params.restarts, params.seed)
        .map_err(Error::at_stage("clustering"))?;
    let (clusters, merges) = merge_small_clusters(&clusters, &cluster_points, params.min_cluster_size);

    // Regression predictions: global by default, per cluster when asked.
    let y_hat = if params.per_cluster_regression {
        let mut y_hat = model.fitted.clone();
        for c in 0..clusters.k {
            let members = clusters.cluster_members(c);
            if members.len() >= selected.len() + 3 {
                let sub = DemographicMatrix::new(
                    members.len(),
                    design.cols,
                    members
                        .iter()
                        .flat_map(|&i| (0..design.cols).map(move |j| (i, j)))
                        .map(|(i, j)| design.get(i, j))
                        .collect(),
                    design.labels.clone(),
                );
                let sub_y: Vec<f64> = members.iter().map(|&i| actual[i]).collect();
                if let Ok(sub_model) = fit_regression(&sub, &selected, &sub_y) {
                    for (slot, &i) in members.iter().enumerate() {
                        y_hat[i] = sub_model.fitted[slot];
                    }
                }
            }
        }
        y_hat
    } else {
        model.fitted.clone()
    };

    let polls = poll_predictions(poll, population).map_err(Error::at_stage("poll"))?;
    let z_hat = polls.z_hat.clone();

    let training: Vec<[f64; 2]> = y_hat
        .iter()
        .zip(&z_hat)
        .map(|(&y, &z)| [y, z])
        .collect();
    let gamma = params.gamma.unwrap_or_else(|| default_gamma(&training));
    let kernel = KernelParams::new(gamma).map_err(Error::at_stage("svm"))?;
    let models = train_cluster_svms(&y_hat, &z_hat, &clusters, params.nu, &kernel)
        .map_err(Error::at_stage("svm"))?;

    // Common poll swing: one election has one poll, so its error shifts
    // every prediction the same way. The median gap is robust to a
    // minority of fraudulent regions.
    let offset = if params.recenter {
        let gaps: Vec<f64> = z_hat
            .iter()
            .zip(&actual)
            .map(|(&z, &a)| z - a)
            .collect();
        median(&gaps)
    } else {
        0.0
    };

    let rows = detect(
        &models,
        &clusters,
        &y_hat,
        &z_hat,
        &actual,
        offset,
        &region_ids,
        params.observation,
    );

    Ok(DetectionReport {
        rows,
        meta: DetectorMeta {
            selected: selected.clone(),
            selected_labels: selected.iter().map(|&c| design.labels[c].clone()).collect(),
            beta: model.beta.clone(),
            k: clusters.k,
            nu: params.nu,
            gamma,
            seed: params.seed,
            empty_cell_fallbacks: polls.empty_cell_fallbacks,
            merged_clusters: merges,
            poll_offset: offset,
        },
        models,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kmeans::kmeans;
    use crate::popgen::{generate_population, DemographicProfile};
    use crate::schema::{AttributeDef, AttributeKind, AttributeSchema};

    fn two_binary_schema() -> AttributeSchema {
        AttributeSchema::new(vec![
            AttributeDef {
                name: "d".into(),
                kind: AttributeKind::Categorical {
                    labels: vec!["d0".into(), "d1".into()],
                    probs: vec![0.5, 0.5],
                },
            },
            AttributeDef {
                name: "f".into(),
                kind: AttributeKind::Categorical {
                    labels: vec!["f0".into(), "f1".into()],
                    probs: vec![0.5, 0.5],
                },
            },
        ])
        .unwrap()
    }

    #[test]
    fn design_matrix_drops_reference_categories() {
        let pop = generate_population(&two_binary_schema(), 4, 400, 3).unwrap();
        let design = build_design_matrix(&pop).unwrap();
        assert_eq!(design.rows, 4);
        assert_eq!(design.cols, 2);
        assert_eq!(design.labels, vec!["d=d1".to_string(), "f=f1".to_string()]);
    }

    #[test]
    fn design_matrix_matches_demographics() {
        let pop = generate_population(&two_binary_schema(), 3, 300, 5).unwrap();
        let design = build_design_matrix(&pop).unwrap();
        for (r, region) in pop.regions.iter().enumerate() {
            let profile = region_demographics(region, &pop.schema).unwrap();
            assert_eq!(design.get(r, 0), profile.marginals[0][1]);
            assert_eq!(design.get(r, 1), profile.marginals[1][1]);
        }
    }

    fn poll_2x2(cells: [[(f64, f64); 2]; 2]) -> PollTable {
        let mut count_a = vec![0.0; 4];
        let mut count_b = vec![0.0; 4];
        for d in 0..2 {
            for f in 0..2 {
                let idx = d * 2 + f;
                count_a[idx] = cells[d][f].0;
                count_b[idx] = cells[d][f].1;
            }
        }
        PollTable {
            dims: vec![2, 2],
            count_a,
            count_b,
            rate: 0.05,
            target_error: 0.0,
            seed: 0,
        }
    }

    #[test]
    fn extrapolation_direct_arithmetic() {
        // diagonal cells vote A, off-diagonal vote B
        let poll = poll_2x2([[(10.0, 0.0), (0.0, 10.0)], [(0.0, 10.0), (10.0, 0.0)]]);
        let profile = DemographicProfile {
            marginals: vec![vec![0.6, 0.4], vec![0.5, 0.5]],
        };
        let z = extrapolate_poll(&poll, &profile).unwrap();
        // 0.6*0.5*1 + 0.6*0.5*0 + 0.4*0.5*0 + 0.4*0.5*1 = 0.5
        assert!((z - 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_cell_share_passes_through() {
        let poll = poll_2x2([[(3.0, 7.0), (6.0, 14.0)], [(30.0, 70.0), (1.5, 3.5)]]);
        let profile = DemographicProfile {
            marginals: vec![vec![0.25, 0.75], vec![0.9, 0.1]],
        };
        let z = extrapolate_poll(&poll, &profile).unwrap();
        assert!((z - 0.3).abs() < 1e-12);
    }

    #[test]
    fn empty_cell_falls_back_to_marginal() {
        let poll = poll_2x2([[(10.0, 0.0), (0.0, 0.0)], [(0.0, 10.0), (5.0, 5.0)]]);
        let profile = DemographicProfile {
            marginals: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        };
        let (z, fallbacks) = extrapolate_poll_detailed(&poll, &profile).unwrap();
        assert_eq!(fallbacks, 1);
        // cell (0,1) empty: d-marginal for d=0 is 10A/10 = 1.0
        let expected = 0.25 * 1.0 + 0.25 * 1.0 + 0.25 * 0.0 + 0.25 * 0.5;
        assert!((z - expected).abs() < 1e-12);
    }

    #[test]
    fn extrapolation_stays_in_unit_interval() {
        let poll = poll_2x2([[(1.0, 0.0), (1.0, 0.0)], [(1.0, 0.0), (1.0, 0.0)]]);
        let profile = DemographicProfile {
            marginals: vec![vec![0.3, 0.7], vec![0.2, 0.8]],
        };
        let z = extrapolate_poll(&poll, &profile).unwrap();
        assert!((0.0..=1.0).contains(&z));
        assert!((z - 1.0).abs() < 1e-12);
    }

    #[test]
    fn merge_small_clusters_respects_minimum() {
        let points: Vec<Vec<f64>> = vec![
            vec![0.0], vec![0.1], vec![0.2], vec![0.3], vec![0.4],
            vec![10.0],
        ];
        let model = kmeans(&points, 2, 5, 1).unwrap();
        let (merged, merges) = merge_small_clusters(&model, &points, 4);
        assert_eq!(merges, 1);
        assert_eq!(merged.k, 1);
        assert!(merged.assignments.iter().all(|&a| a == 0));
    }

    #[test]
    fn single_cluster_trains_single_model() {
        let y_hat = vec![0.5, 0.51, 0.49, 0.52, 0.48];
        let z_hat = vec![0.5, 0.5, 0.5, 0.51, 0.49];
        let points: Vec<Vec<f64>> = y_hat.iter().map(|&y| vec![y]).collect();
        let clusters = kmeans(&points, 1, 2, 3).unwrap();
        let models =
            train_cluster_svms(&y_hat, &z_hat, &clusters, 0.2, &KernelParams::new(50.0).unwrap())
                .unwrap();
        assert_eq!(models.len(), 1);
    }

    #[test]
    fn identical_training_points_are_inliers() {
        let y_hat = vec![0.5; 6];
        let z_hat = vec![0.5; 6];
        let points: Vec<Vec<f64>> = y_hat.iter().map(|&y| vec![y]).collect();
        let clusters = kmeans(&points, 1, 2, 3).unwrap();
        let models =
            train_cluster_svms(&y_hat, &z_hat, &clusters, 0.2, &KernelParams::new(1.0).unwrap())
                .unwrap();
        let rows = detect(
            &models,
            &clusters,
            &y_hat,
            &z_hat,
            &[0.5; 6],
            0.0,
            &[0, 1, 2, 3, 4, 5],
            ObservationMode::RegressionActual,
        );
        assert!(rows.iter().all(|r| !r.flagged));
    }

    #[test]
    fn flag_agrees_with_decision_sign() {
        let y_hat: Vec<f64> = (0..10).map(|i| 0.4 + 0.02 * i as f64).collect();
        let z_hat = y_hat.clone();
        let mut actual = y_hat.clone();
        actual[7] = 0.95; // planted far-off result
        let points: Vec<Vec<f64>> = y_hat.iter().map(|&y| vec![y]).collect();
        let clusters = kmeans(&points, 1, 2, 3).unwrap();
        let models =
            train_cluster_svms(&y_hat, &z_hat, &clusters, 0.05, &KernelParams::new(200.0).unwrap())
                .unwrap();
        let ids: Vec<u32> = (0..10).collect();
        let rows = detect(
            &models,
            &clusters,
            &y_hat,
            &z_hat,
            &actual,
            0.0,
            &ids,
            ObservationMode::RegressionActual,
        );
        for row in &rows {
            assert_eq!(row.flagged, row.decision.unwrap() < 0.0);
        }
        assert!(rows[7].flagged);
    }
}

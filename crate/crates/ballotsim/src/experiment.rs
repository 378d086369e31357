//! End-to-end election runs and the experiment grid.
//!
//! One cell of the grid = one fraud level, one fraudulent-region share,
//! one mode, one seed: generate an election, poll it, inject fraud,
//! detect, and evaluate against the ground truth. Cells run concurrently
//! but are each internally deterministic, so grid output depends only on
//! the manifest.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{run_baseline1, DensityParams};
use crate::detector::{run_pipeline, DetectionReport, DetectorParams};
use crate::error::{Error, Result};
use crate::fraud::{inject_fraud, FraudLabels, FraudMode, FraudSpec};
use crate::metrics::{evaluate, Metrics};
use crate::polling::{draw_poll, inject_poll_noise, PollTable};
use crate::popgen::{
    assign_desirability, assign_mail_in, generate_population, redistribute, Population,
};
use crate::rng::{domain, mix};
use crate::schema::SimConfig;
use crate::votecast::{
    cast_votes, init_vote_network, tally, Ballots, Candidate, NoiseWidth, RegionResults,
};

/// A generated election before any fraud: population, ballots, tallies,
/// and the noisy poll drawn from the true votes.
pub struct Election {
    pub population: Population,
    pub ballots: Ballots,
    pub results: RegionResults,
    pub poll: PollTable,
}

/// Generate population, votes, and poll from a config, all substreams
/// keyed off one seed.
pub fn generate_election(config: &SimConfig, seed: u64) -> Result<Election> {
    let schema = config.schema();
    let population = generate_population(
        &schema,
        config.simulation.regions,
        config.simulation.population,
        seed,
    )?;
    let population = assign_desirability(population, &config.desirability, seed)?;
    let population = redistribute(
        population,
        config.redistribution.sample_fraction,
        config.redistribution.cap_factor,
        seed,
    )?;
    let population = assign_mail_in(
        population,
        config.mail_in.sample_fraction,
        &config.mail_in_weights(),
        config.mail_in.bias,
        seed,
    )?;

    let network = init_vote_network(
        &schema,
        config.voting.dropout,
        config.voting.activation,
        seed,
    )?;
    let ballots = cast_votes(
        &population,
        &network,
        config.voting.target_share,
        NoiseWidth::ScoreStdFraction(config.voting.noise_scale),
        seed,
    )?;
    let results = tally(&ballots, &population)?;

    let poll = draw_poll(&population, &ballots, config.polling.rate, seed)?;
    let poll = inject_poll_noise(&poll, config.polling.target_error, seed)?;

    Ok(Election {
        population,
        ballots,
        results,
        poll,
    })
}

/// Convert a requested fraud level (percent of votes affected within the
/// fraudulent regions) into a per-individual probability for a mode.
/// Switching and deletion act only on non-favored ballots, so the
/// probability is the level divided by the pre-fraud non-favored share;
/// addition creates ballots directly at the level.
pub fn probability_for_level(
    level_pct: f64,
    mode: FraudMode,
    favored: Candidate,
    pre: &RegionResults,
) -> f64 {
    let level = level_pct / 100.0;
    let favored_share = match favored {
        Candidate::A => pre.global_share_a(),
        Candidate::B => 1.0 - pre.global_share_a(),
    };
    let eligible = (1.0 - favored_share).max(1e-9);
    match mode {
        FraudMode::Switching | FraudMode::Deletion => (level / eligible).min(1.0),
        FraudMode::Addition => level.min(1.0),
    }
}

/// The experiment grid axes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentGrid {
    /// Fraud levels in percent of votes affected within fraud regions.
    pub levels_pct: Vec<f64>,
    /// Fraudulent-region shares in percent of all regions.
    pub region_pcts: Vec<f64>,
    pub modes: Vec<FraudMode>,
    pub seeds_per_cell: usize,
    pub base_seed: u64,
    pub favored: Candidate,
}

impl ExperimentGrid {
    pub fn validate(&self) -> Result<()> {
        if self.levels_pct.is_empty() || self.region_pcts.is_empty() || self.modes.is_empty() {
            return Err(Error::Other("experiment grid has an empty axis".into()));
        }
        if self.seeds_per_cell == 0 {
            return Err(Error::Other("seeds_per_cell must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        Self {
            levels_pct: vec![5.0, 12.5, 20.0],
            region_pcts: vec![4.0, 10.0, 16.0],
            modes: vec![FraudMode::Switching],
            seeds_per_cell: 5,
            base_seed: 0,
            favored: Candidate::A,
        }
    }
}

/// Outcome of one grid cell run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellResult {
    pub level_pct: f64,
    pub region_pct: f64,
    pub mode: FraudMode,
    pub seed_index: usize,
    pub seed: u64,
    pub n_fraud_regions: usize,
    pub probability: f64,
    pub realized_level_pct: Option<f64>,
    pub pre_share_a: Option<f64>,
    pub post_share_a: Option<f64>,
    pub detector: Option<Metrics>,
    pub baseline: Option<Metrics>,
    pub error: Option<String>,
}

/// Seed-averaged summary of one (level, region share, mode) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellSummary {
    pub level_pct: f64,
    pub region_pct: f64,
    pub mode: FraudMode,
    pub seeds: usize,
    /// Regions flagged, percent of all regions (mean over seeds).
    pub flagged_pct: f64,
    /// Truly fraudulent regions detected, percent of all regions.
    pub true_detected_pct: f64,
    pub mean_precision: Option<f64>,
    /// Seeds excluded from the precision mean because nothing was flagged.
    pub precision_na_seeds: usize,
    pub mean_recall: Option<f64>,
    pub mean_accuracy: f64,
    pub mean_f1: Option<f64>,
    pub baseline_mean_f1: Option<f64>,
    pub baseline_mean_recall: Option<f64>,
    pub baseline_mean_precision: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResults {
    pub cells: Vec<CellResult>,
    pub summaries: Vec<CellSummary>,
}

/// Run one fully seeded election-and-detection cell.
#[allow(clippy::too_many_arguments)]
pub fn run_cell(
    config: &SimConfig,
    detector_params: &DetectorParams,
    density_params: &DensityParams,
    level_pct: f64,
    region_pct: f64,
    mode: FraudMode,
    favored: Candidate,
    seed: u64,
    with_baseline: bool,
) -> Result<(CellRun, FraudLabels)> {
    let election = generate_election(config, seed)?;
    let n_regions = election.population.n_regions();
    let n_fraud = ((region_pct / 100.0) * n_regions as f64).round() as usize;
    let probability = probability_for_level(level_pct, mode, favored, &election.results);

    let spec = FraudSpec {
        mode,
        n_fraud_regions: n_fraud,
        probability,
        favored,
        seed,
    };
    let (post_ballots, labels) = inject_fraud(&election.ballots, &election.population, &spec)?;

    let mut det_params = detector_params.clone();
    det_params.seed = seed;
    let report = run_pipeline(&election.population, &post_ballots, &election.poll, &det_params)?;

    let baseline = if with_baseline {
        let design = crate::detector::build_design_matrix(&election.population)?;
        let post_results = tally(&post_ballots, &election.population)?;
        Some(run_baseline1(
            &design,
            &post_results,
            det_params.k,
            density_params,
            det_params.restarts,
            seed,
        )?)
    } else {
        None
    };

    // Realized level: affected votes over pre-fraud votes in fraud regions.
    let pre = tally(&election.ballots, &election.population)?;
    let fraud_votes: u64 = labels
        .fraud_region_ids()
        .iter()
        .filter_map(|&id| pre.regions.iter().find(|r| r.region_id == id))
        .map(|r| r.total())
        .sum();
    let realized = if fraud_votes > 0 {
        Some(100.0 * labels.total_affected() as f64 / fraud_votes as f64)
    } else {
        None
    };

    Ok((
        CellRun {
            report,
            baseline,
            probability,
            n_fraud_regions: n_fraud,
            realized_level_pct: realized,
        },
        labels,
    ))
}

/// Artifacts of one cell run, before evaluation.
pub struct CellRun {
    pub report: DetectionReport,
    pub baseline: Option<DetectionReport>,
    pub probability: f64,
    pub n_fraud_regions: usize,
    pub realized_level_pct: Option<f64>,
}

/// Run the full grid. Cells execute concurrently; failures are recorded
/// per cell without aborting the rest.
pub fn run_experiment(
    grid: &ExperimentGrid,
    config: &SimConfig,
    detector_params: &DetectorParams,
    density_params: &DensityParams,
    with_baseline: bool,
) -> Result<ExperimentResults> {
    grid.validate()?;

    let mut jobs = Vec::new();
    for &level in &grid.levels_pct {
        for &region_pct in &grid.region_pcts {
            for &mode in &grid.modes {
                for seed_index in 0..grid.seeds_per_cell {
                    jobs.push((level, region_pct, mode, seed_index));
                }
            }
        }
    }

    let cells: Vec<CellResult> = jobs
        .par_iter()
        .map(|&(level, region_pct, mode, seed_index)| {
            let seed = mix(
                grid.base_seed,
                &[
                    domain::EXPERIMENT,
                    level.to_bits(),
                    region_pct.to_bits(),
                    mode as u64,
                    seed_index as u64,
                ],
            );
            let outcome = run_cell(
                config,
                detector_params,
                density_params,
                level,
                region_pct,
                mode,
                grid.favored,
                seed,
                with_baseline,
            );
            match outcome {
                Ok((run, labels)) => {
                    let detector = evaluate(&run.report, &labels).ok();
                    let baseline = run
                        .baseline
                        .as_ref()
                        .and_then(|b| evaluate(b, &labels).ok());
                    CellResult {
                        level_pct: level,
                        region_pct,
                        mode,
                        seed_index,
                        seed,
                        n_fraud_regions: run.n_fraud_regions,
                        probability: run.probability,
                        realized_level_pct: run.realized_level_pct,
                        pre_share_a: Some(labels.pre_share_a),
                        post_share_a: Some(labels.post_share_a),
                        detector,
                        baseline,
                        error: None,
                    }
                }
                Err(e) => CellResult {
                    level_pct: level,
                    region_pct,
                    mode,
                    seed_index,
                    seed,
                    n_fraud_regions: 0,
                    probability: 0.0,
                    realized_level_pct: None,
                    pre_share_a: None,
                    post_share_a: None,
                    detector: None,
                    baseline: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let summaries = summarize(grid, &cells);
    Ok(ExperimentResults { cells, summaries })
}

fn mean_of(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

fn summarize(grid: &ExperimentGrid, cells: &[CellResult]) -> Vec<CellSummary> {
    let mut summaries = Vec::new();
    for &level in &grid.levels_pct {
        for &region_pct in &grid.region_pcts {
            for &mode in &grid.modes {
                let group: Vec<&CellResult> = cells
                    .iter()
                    .filter(|c| {
                        c.level_pct == level && c.region_pct == region_pct && c.mode == mode
                    })
                    .collect();
                let with_metrics: Vec<&Metrics> =
                    group.iter().filter_map(|c| c.detector.as_ref()).collect();
                if group.is_empty() {
                    continue;
                }
                let precisions: Vec<f64> =
                    with_metrics.iter().filter_map(|m| m.precision).collect();
                let recalls: Vec<f64> = with_metrics.iter().filter_map(|m| m.recall).collect();
                let f1s: Vec<f64> = with_metrics.iter().filter_map(|m| m.f1).collect();
                let b_metrics: Vec<&Metrics> =
                    group.iter().filter_map(|c| c.baseline.as_ref()).collect();
                summaries.push(CellSummary {
                    level_pct: level,
                    region_pct,
                    mode,
                    seeds: group.len(),
                    flagged_pct: 100.0
                        * mean_of(
                            &with_metrics
                                .iter()
                                .map(|m| m.flagged_fraction())
                                .collect::<Vec<_>>(),
                        )
                        .unwrap_or(0.0),
                    true_detected_pct: 100.0
                        * mean_of(
                            &with_metrics
                                .iter()
                                .map(|m| m.true_detected_fraction())
                                .collect::<Vec<_>>(),
                        )
                        .unwrap_or(0.0),
                    mean_precision: mean_of(&precisions),
                    precision_na_seeds: with_metrics.len() - precisions.len(),
                    mean_recall: mean_of(&recalls),
                    mean_accuracy: mean_of(
                        &with_metrics.iter().map(|m| m.accuracy).collect::<Vec<_>>(),
                    )
                    .unwrap_or(0.0),
                    mean_f1: mean_of(&f1s),
                    baseline_mean_f1: mean_of(
                        &b_metrics.iter().filter_map(|m| m.f1).collect::<Vec<_>>(),
                    ),
                    baseline_mean_recall: mean_of(
                        &b_metrics.iter().filter_map(|m| m.recall).collect::<Vec<_>>(),
                    ),
                    baseline_mean_precision: mean_of(
                        &b_metrics
                            .iter()
                            .filter_map(|m| m.precision)
                            .collect::<Vec<_>>(),
                    ),
                });
            }
        }
    }
    summaries
}

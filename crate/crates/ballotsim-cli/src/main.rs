//! Command-line front end: generate elections, poll them, inject fraud,
//! detect anomalous regions, and reproduce the experiment grids.
//!
//! Every subcommand works in a run directory (`--out`) and writes a JSON
//! manifest holding all parameters and seeds, so any output can be
//! reproduced bit-exactly.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ballotsim::baseline::{run_baseline1, DensityParams};
use ballotsim::detector::{run_pipeline_on_results, DetectorParams, ObservationMode};
use ballotsim::experiment::{generate_election, run_experiment, ExperimentGrid};
use ballotsim::fraud::{fraud_significance, inject_fraud, FraudMode, FraudSpec};
use ballotsim::io;
use ballotsim::metrics::evaluate;
use ballotsim::polling::{draw_poll, inject_poll_noise, poll_error};
use ballotsim::votecast::{tally, Candidate};
use ballotsim::SimConfig;

#[derive(Parser)]
#[command(
    name = "ballotsim",
    about = "Synthetic elections with labeled fraud and a novelty-detection pipeline",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Run configuration (TOML). Omit to use the bundled census-style
    /// example.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run directory for inputs and outputs.
    #[arg(long, default_value = "run")]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct DetectorArgs {
    /// Training-outlier bound of the one-class SVM.
    #[arg(long, default_value_t = 0.01)]
    nu: f64,
    /// RBF kernel width (default: derived from the training cloud).
    #[arg(long)]
    gamma: Option<f64>,
    /// Cluster count (default: silhouette selection).
    #[arg(long)]
    k: Option<usize>,
    /// K-means restarts.
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    /// Observation scored against each cluster model.
    #[arg(long, value_enum, default_value_t = ObservationArg::RegressionActual)]
    observation: ObservationArg,
    /// Score raw actuals without removing the common polling swing.
    #[arg(long)]
    no_recenter: bool,
    /// Refit the regression within each cluster.
    #[arg(long)]
    per_cluster_regression: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObservationArg {
    RegressionActual,
    PollActual,
}

impl DetectorArgs {
    fn params(&self, seed: u64) -> DetectorParams {
        DetectorParams {
            nu: self.nu,
            gamma: self.gamma,
            k: self.k,
            restarts: self.restarts,
            seed,
            observation: match self.observation {
                ObservationArg::RegressionActual => ObservationMode::RegressionActual,
                ObservationArg::PollActual => ObservationMode::PollActual,
            },
            recenter: !self.no_recenter,
            per_cluster_regression: self.per_cluster_regression,
            ..DetectorParams::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a population, cast votes, and write the clean election.
    Generate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Draw a poll from the generated election and inject polling error.
    Poll {
        #[command(flatten)]
        common: CommonArgs,
        /// Sampled share of the population (default from config).
        #[arg(long)]
        rate: Option<f64>,
        /// Target mean absolute error on the implied share.
        #[arg(long)]
        target_error: Option<f64>,
    },
    /// Inject labeled fraud into the tallied ballots.
    Fraud {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::Switching)]
        mode: ModeArg,
        /// Number of fraudulent regions.
        #[arg(long)]
        regions: usize,
        /// Per-individual fraud probability in [0, 1].
        #[arg(long)]
        prob: f64,
        /// Favored candidate (A or B).
        #[arg(long, default_value = "A")]
        favored: String,
    },
    /// Run the detection pipeline on the (post-fraud) results.
    Detect {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        detector: DetectorArgs,
    },
    /// Run the unsupervised density-based comparator.
    Baseline1 {
        #[command(flatten)]
        common: CommonArgs,
        /// Cluster count (default: silhouette selection).
        #[arg(long)]
        k: Option<usize>,
        /// Density radius in result-share units (default: per-cluster).
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 3)]
        min_pts: usize,
        #[arg(long, default_value_t = 10)]
        restarts: usize,
    },
    /// Score a detection report against the ground-truth labels.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        /// Report to evaluate (default: report.csv in the run directory).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the full fraud-level x region-share experiment grid.
    Experiment {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        detector: DetectorArgs,
        /// Fraud levels, percent of votes affected in fraud regions.
        #[arg(long, value_delimiter = ',', default_values_t = vec![5.0, 12.5, 20.0])]
        levels: Vec<f64>,
        /// Fraudulent-region shares, percent of all regions.
        #[arg(long, value_delimiter = ',', default_values_t = vec![4.0, 10.0, 16.0])]
        frs: Vec<f64>,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = vec![ModeArg::Switching])]
        modes: Vec<ModeArg>,
        /// Seeds per grid cell.
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        /// Skip the density-based comparator columns.
        #[arg(long)]
        no_baseline: bool,
    },
    /// Export a decision-value grid of one trained cluster model.
    Boundary {
        /// models.json written by `detect`.
        #[arg(long)]
        models: PathBuf,
        /// Which cluster's model to export.
        #[arg(long, default_value_t = 0)]
        cluster: usize,
        #[arg(long, default_value_t = 60)]
        resolution: usize,
        /// Output CSV path.
        #[arg(long, default_value = "boundary.csv")]
        out: PathBuf,
        /// Padding around the support points when bounds are derived.
        #[arg(long, default_value_t = 0.1)]
        margin: f64,
    },
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum ModeArg {
    Deletion,
    Addition,
    Switching,
}

impl From<ModeArg> for FraudMode {
    fn from(mode: ModeArg) -> FraudMode {
        match mode {
            ModeArg::Deletion => FraudMode::Deletion,
            ModeArg::Addition => FraudMode::Addition,
            ModeArg::Switching => FraudMode::Switching,
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<SimConfig> {
    match path {
        Some(path) => {
            SimConfig::load(path).with_context(|| format!("loading config {}", path.display()))
        }
        None => Ok(SimConfig::census_example()),
    }
}

fn manifest(
    out: &Path,
    name: &str,
    command: &str,
    config: &SimConfig,
    seed: u64,
    extra: serde_json::Value,
) -> Result<()> {
    let value = serde_json::json!({
        "command": command,
        "seed": seed,
        "config": config,
        "params": extra,
    });
    io::write_json(out.join(name), &value)?;
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate { common } => {
            let config = load_config(&common.config)?;
            std::fs::create_dir_all(&common.out)?;
            let election = generate_election(&config, common.seed)?;
            io::write_population_csv(common.out.join("population.csv"), &election.population)?;
            io::write_ballots_csv(common.out.join("ballots.csv"), &election.ballots)?;
            io::write_results_csv(common.out.join("results.csv"), &election.results)?;
            io::write_poll_csv(common.out.join("poll.csv"), &election.poll, &config.schema())?;
            io::write_json(
                common.out.join("poll.json"),
                &io::PollSidecar {
                    rate: config.polling.rate,
                    target_error: config.polling.target_error,
                    seed: common.seed,
                },
            )?;
            manifest(
                &common.out,
                "manifest.json",
                "generate",
                &config,
                common.seed,
                serde_json::json!({}),
            )?;
            println!(
                "generated {} regions / {} individuals; ER = {:.4}; poll implied = {:.4}",
                election.population.n_regions(),
                election.population.total_individuals(),
                election.results.global_share_a(),
                election.poll.implied_share_a()?,
            );
        }

        Command::Poll {
            common,
            rate,
            target_error,
        } => {
            let config = load_config(&common.config)?;
            let schema = config.schema();
            let rate = rate.unwrap_or(config.polling.rate);
            let target_error = target_error.unwrap_or(config.polling.target_error);
            let population =
                io::read_population_csv(common.out.join("population.csv"), &schema, common.seed)?;
            let ballots =
                io::read_ballots_csv(common.out.join("ballots.csv"), population.n_regions())?;
            let poll = draw_poll(&population, &ballots, rate, common.seed)?;
            let poll = inject_poll_noise(&poll, target_error, common.seed)?;
            io::write_poll_csv(common.out.join("poll.csv"), &poll, &schema)?;
            io::write_json(
                common.out.join("poll.json"),
                &io::PollSidecar {
                    rate,
                    target_error,
                    seed: common.seed,
                },
            )?;
            manifest(
                &common.out,
                "poll_manifest.json",
                "poll",
                &config,
                common.seed,
                serde_json::json!({"rate": rate, "target_error": target_error}),
            )?;
            let results = tally(&ballots, &population)?;
            println!(
                "polled {} respondents; implied share {:.4}; error vs actual {:.4}",
                poll.total_respondents(),
                poll.implied_share_a()?,
                poll_error(&poll, &results)?,
            );
        }

        Command::Fraud {
            common,
            mode,
            regions,
            prob,
            favored,
        } => {
            let config = load_config(&common.config)?;
            let schema = config.schema();
            let favored = Candidate::parse(&favored)
                .with_context(|| format!("bad --favored {favored:?}, expected A or B"))?;
            let population =
                io::read_population_csv(common.out.join("population.csv"), &schema, common.seed)?;
            let ballots =
                io::read_ballots_csv(common.out.join("ballots.csv"), population.n_regions())?;
            let spec = FraudSpec {
                mode: mode.into(),
                n_fraud_regions: regions,
                probability: prob,
                favored,
                seed: common.seed,
            };
            let pre = tally(&ballots, &population)?;
            let (post_ballots, labels) = inject_fraud(&ballots, &population, &spec)?;
            let post = tally(&post_ballots, &population)?;
            io::write_ballots_csv(common.out.join("ballots_fraud.csv"), &post_ballots)?;
            io::write_results_csv(common.out.join("results_fraud.csv"), &post)?;
            io::write_labels_csv(common.out.join("labels.csv"), &labels)?;
            io::write_json(
                common.out.join("labels.json"),
                &io::LabelsSidecar {
                    favored,
                    pre_share_a: labels.pre_share_a,
                    post_share_a: labels.post_share_a,
                },
            )?;
            manifest(
                &common.out,
                "fraud_manifest.json",
                "fraud",
                &config,
                common.seed,
                serde_json::to_value(spec)?,
            )?;
            println!(
                "fraud injected: {} regions, {} votes affected; ER {:.4} -> {:.4}; significance {:.2}",
                regions,
                labels.total_affected(),
                labels.pre_share_a,
                labels.post_share_a,
                fraud_significance(&labels, &pre, &post).unwrap_or(f64::NAN),
            );
        }

        Command::Detect { common, detector } => {
            let config = load_config(&common.config)?;
            let schema = config.schema();
            let population =
                io::read_population_csv(common.out.join("population.csv"), &schema, common.seed)?;
            let poll = io::read_poll_csv(common.out.join("poll.csv"), &schema)?;
            // Prefer post-fraud results when present.
            let results_path = if common.out.join("results_fraud.csv").exists() {
                common.out.join("results_fraud.csv")
            } else {
                common.out.join("results.csv")
            };
            let results = io::read_results_csv(&results_path)?;
            let params = detector.params(common.seed);
            let report = run_pipeline_on_results(&population, &results, &poll, &params)?;
            io::write_report_csv(common.out.join("report.csv"), &report)?;
            io::write_models_json(common.out.join("models.json"), &report.models)?;
            io::write_json(common.out.join("report.json"), &report.meta)?;
            manifest(
                &common.out,
                "detect_manifest.json",
                "detect",
                &config,
                common.seed,
                serde_json::to_value(&params)?,
            )?;
            println!(
                "detector: k = {}, gamma = {:.3}, selected {:?}; flagged {} of {} regions",
                report.meta.k,
                report.meta.gamma,
                report.meta.selected_labels,
                report.flagged_region_ids().len(),
                report.rows.len(),
            );
        }

        Command::Baseline1 {
            common,
            k,
            eps,
            min_pts,
            restarts,
        } => {
            let config = load_config(&common.config)?;
            let schema = config.schema();
            let population =
                io::read_population_csv(common.out.join("population.csv"), &schema, common.seed)?;
            let results_path = if common.out.join("results_fraud.csv").exists() {
                common.out.join("results_fraud.csv")
            } else {
                common.out.join("results.csv")
            };
            let results = io::read_results_csv(&results_path)?;
            let design = ballotsim::detector::build_design_matrix(&population)?;
            let params = DensityParams { eps, min_pts };
            let report = run_baseline1(&design, &results, k, &params, restarts, common.seed)?;
            io::write_report_csv(common.out.join("baseline_report.csv"), &report)?;
            manifest(
                &common.out,
                "baseline_manifest.json",
                "baseline1",
                &config,
                common.seed,
                serde_json::json!({"k": k, "eps": eps, "min_pts": min_pts, "restarts": restarts}),
            )?;
            println!(
                "baseline1: k = {}, flagged {} of {} regions",
                report.meta.k,
                report.flagged_region_ids().len(),
                report.rows.len(),
            );
        }

        Command::Evaluate { common, report } => {
            let report_path = report.unwrap_or_else(|| common.out.join("report.csv"));
            let rows = io::read_report_rows_csv(&report_path)?;
            let sidecar: io::LabelsSidecar = io::read_json(common.out.join("labels.json"))?;
            let labels = io::read_labels_csv(common.out.join("labels.csv"), &sidecar)?;
            let report = ballotsim::detector::DetectionReport {
                rows,
                meta: ballotsim::detector::DetectorMeta {
                    selected: vec![],
                    selected_labels: vec![],
                    beta: vec![],
                    k: 0,
                    nu: 0.0,
                    gamma: 0.0,
                    seed: common.seed,
                    empty_cell_fallbacks: 0,
                    merged_clusters: 0,
                    poll_offset: 0.0,
                },
                models: vec![],
            };
            let metrics = evaluate(&report, &labels)?;
            io::write_json(common.out.join("metrics.json"), &metrics)?;
            let fmt_opt = |v: Option<f64>| {
                v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "n/a".into())
            };
            println!(
                "tp {} fp {} fn {} tn {} | precision {} recall {} accuracy {:.4} f1 {}",
                metrics.tp,
                metrics.fp,
                metrics.fn_,
                metrics.tn,
                fmt_opt(metrics.precision),
                fmt_opt(metrics.recall),
                metrics.accuracy,
                fmt_opt(metrics.f1),
            );
        }

        Command::Experiment {
            common,
            detector,
            levels,
            frs,
            modes,
            seeds,
            no_baseline,
        } => {
            let config = load_config(&common.config)?;
            let grid = ExperimentGrid {
                levels_pct: levels,
                region_pcts: frs,
                modes: modes.into_iter().map(FraudMode::from).collect(),
                seeds_per_cell: seeds,
                base_seed: common.seed,
                favored: Candidate::A,
            };
            let params = detector.params(common.seed);
            let results = run_experiment(
                &grid,
                &config,
                &params,
                &DensityParams::default(),
                !no_baseline,
            )?;
            std::fs::create_dir_all(&common.out)?;
            io::write_experiment_csvs(&common.out, &results)?;
            manifest(
                &common.out,
                "experiment_manifest.json",
                "experiment",
                &config,
                common.seed,
                serde_json::json!({
                    "grid": grid,
                    "detector": params,
                    "baseline": !no_baseline,
                }),
            )?;
            let failed = results.cells.iter().filter(|c| c.error.is_some()).count();
            println!(
                "experiment: {} cells ({} failed); summaries in {}",
                results.cells.len(),
                failed,
                common.out.join("summary.csv").display(),
            );
            for s in &results.summaries {
                println!(
                    "  level {:>5} {:>4}%FR {}: flagged {:.1}% / true {:.1}% | recall {} precision {}",
                    s.level_pct,
                    s.region_pct,
                    s.mode.as_str(),
                    s.flagged_pct,
                    s.true_detected_pct,
                    s.mean_recall.map(|v| format!("{v:.2}")).unwrap_or_else(|| "n/a".into()),
                    s.mean_precision.map(|v| format!("{v:.2}")).unwrap_or_else(|| "n/a".into()),
                );
            }
        }

        Command::Boundary {
            models,
            cluster,
            resolution,
            out,
            margin,
        } => {
            let models = io::read_models_json(&models)?;
            if cluster >= models.len() {
                bail!("cluster {cluster} out of range; {} models", models.len());
            }
            let model = &models[cluster];
            let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
            let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
            for p in &model.support {
                min_x = min_x.min(p[0]);
                max_x = max_x.max(p[0]);
                min_y = min_y.min(p[1]);
                max_y = max_y.max(p[1]);
            }
            let grid = model.decision_grid(
                (min_x - margin, max_x + margin),
                (min_y - margin, max_y + margin),
                resolution,
            )?;
            io::write_boundary_csv(&out, &grid)?;
            println!(
                "boundary grid for cluster {cluster}: {} points -> {}",
                grid.len(),
                out.display(),
            );
        }
    }
    Ok(())
}

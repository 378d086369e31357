//! CSV and JSON persistence for every pipeline artifact.
//!
//! All tabular outputs are UTF-8 CSV with a header row; manifests and
//! sidecars are JSON. Floats are written in Rust's shortest round-trip
//! form, so identical runs produce byte-identical files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detector::{DetectionReport, ReportRow};
use crate::error::{Error, Result};
use crate::experiment::{CellResult, CellSummary, ExperimentResults};
use crate::fraud::{FraudLabels, FraudMode, RegionLabel};
use crate::ocsvm::OcSvmModel;
use crate::polling::PollTable;
use crate::popgen::{Individual, Population, Region};
use crate::schema::AttributeSchema;
use crate::votecast::{Ballot, Ballots, Candidate, RegionResults, RegionShare};

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn opt_fmt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Other(format!("bad float field: {s:?}")))
}

/// population.csv: region_id, one label-valued column per attribute,
/// mail_in (0/1).
pub fn write_population_csv(path: impl AsRef<Path>, population: &Population) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let mut header = vec!["region_id".to_string()];
    header.extend(population.schema.attributes.iter().map(|a| a.name.clone()));
    header.push("mail_in".into());
    w.write_record(&header)?;
    for region in &population.regions {
        for ind in &region.individuals {
            let mut record = vec![region.region_id.to_string()];
            for (a, &cat) in ind.attrs.iter().enumerate() {
                record.push(population.schema.attributes[a].label(cat as usize));
            }
            record.push(if ind.mail_in { "1" } else { "0" }.into());
            w.write_record(&record)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a population back; desirability tables are not persisted and
/// come back zeroed.
pub fn read_population_csv(
    path: impl AsRef<Path>,
    schema: &AttributeSchema,
    seed: u64,
) -> Result<Population> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let mut regions: Vec<Region> = Vec::new();
    for record in r.records() {
        let record = record?;
        let region_id: u32 = record[0]
            .parse()
            .map_err(|_| Error::Other(format!("bad region_id {:?}", &record[0])))?;
        let mut attrs = Vec::with_capacity(schema.n_attributes());
        for (a, attr) in schema.attributes.iter().enumerate() {
            let label = &record[1 + a];
            let cat = attr
                .category_of_label(label)
                .ok_or_else(|| Error::Other(format!("unknown label {label:?} for {}", attr.name)))?;
            attrs.push(cat as u16);
        }
        let mail_in = &record[1 + schema.n_attributes()] == "1";
        while regions.len() <= region_id as usize {
            let id = regions.len() as u32;
            regions.push(Region {
                region_id: id,
                individuals: Vec::new(),
                desirability: schema.dims().iter().map(|&d| vec![0.0; d]).collect(),
            });
        }
        regions[region_id as usize].individuals.push(Individual {
            attrs,
            mail_in,
            region_id,
        });
    }
    Ok(Population {
        regions,
        schema: schema.clone(),
        master_seed: seed,
    })
}

/// ballots.csv: region_id, individual (blank for synthetic), mail_in,
/// vote (A/B), synthetic (0/1).
pub fn write_ballots_csv(path: impl AsRef<Path>, ballots: &Ballots) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["region_id", "individual", "mail_in", "vote", "synthetic"])?;
    for (region_id, region) in ballots.per_region.iter().enumerate() {
        for ballot in region {
            w.write_record([
                region_id.to_string(),
                ballot.individual.map(|i| i.to_string()).unwrap_or_default(),
                if ballot.mail_in { "1" } else { "0" }.to_string(),
                ballot.vote.as_str().to_string(),
                if ballot.is_synthetic() { "1" } else { "0" }.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_ballots_csv(path: impl AsRef<Path>, n_regions: usize) -> Result<Ballots> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let mut per_region: Vec<Vec<Ballot>> = vec![Vec::new(); n_regions];
    for record in r.records() {
        let record = record?;
        let region_id: usize = record[0]
            .parse()
            .map_err(|_| Error::Other(format!("bad region_id {:?}", &record[0])))?;
        if region_id >= n_regions {
            return Err(Error::Other(format!(
                "ballot region {region_id} out of range"
            )));
        }
        let individual = if record[1].is_empty() {
            None
        } else {
            Some(record[1]
                .parse()
                .map_err(|_| Error::Other(format!("bad individual {:?}", &record[1])))?)
        };
        let vote = Candidate::parse(&record[3])
            .ok_or_else(|| Error::Other(format!("bad vote {:?}", &record[3])))?;
        per_region[region_id].push(Ballot {
            individual,
            mail_in: &record[2] == "1",
            vote,
        });
    }
    Ok(Ballots {
        threshold: 0.0,
        per_region,
    })
}

/// results.csv: region_id, share_a, total.
pub fn write_results_csv(path: impl AsRef<Path>, results: &RegionResults) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["region_id", "share_a", "total"])?;
    let mut rows: Vec<&RegionShare> = results.regions.iter().collect();
    rows.sort_by_key(|r| r.region_id);
    for row in rows {
        w.write_record([
            row.region_id.to_string(),
            fmt(row.share_a()),
            row.total().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results_csv(path: impl AsRef<Path>) -> Result<RegionResults> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let mut regions = Vec::new();
    for record in r.records() {
        let record = record?;
        let region_id: u32 = record[0]
            .parse()
            .map_err(|_| Error::Other(format!("bad region_id {:?}", &record[0])))?;
        let share_a = parse_f64(&record[1])?;
        let total: u64 = record[2]
            .parse()
            .map_err(|_| Error::Other(format!("bad total {:?}", &record[2])))?;
        let votes_a = (share_a * total as f64).round() as u64;
        regions.push(RegionShare {
            region_id,
            votes_a,
            votes_b: total - votes_a,
        });
    }
    Ok(RegionResults { regions })
}

/// poll.csv: one row per attribute combination (label-valued columns)
/// plus count_a and count_b. Every cell of the cross-product is written.
pub fn write_poll_csv(
    path: impl AsRef<Path>,
    poll: &PollTable,
    schema: &AttributeSchema,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let mut header: Vec<String> = schema.attributes.iter().map(|a| a.name.clone()).collect();
    header.push("count_a".into());
    header.push("count_b".into());
    w.write_record(&header)?;
    for cell in 0..poll.n_cells() {
        let attrs = PollTable::cell_attrs(&poll.dims, cell);
        let mut record: Vec<String> = attrs
            .iter()
            .enumerate()
            .map(|(a, &cat)| schema.attributes[a].label(cat as usize))
            .collect();
        record.push(fmt(poll.count_a[cell]));
        record.push(fmt(poll.count_b[cell]));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Sidecar metadata stored next to poll.csv.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PollSidecar {
    pub rate: f64,
    pub target_error: f64,
    pub seed: u64,
}

pub fn read_poll_csv(path: impl AsRef<Path>, schema: &AttributeSchema) -> Result<PollTable> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let dims = schema.dims();
    let n_cells: usize = dims.iter().product();
    let mut count_a = vec![0.0; n_cells];
    let mut count_b = vec![0.0; n_cells];
    let n_attrs = schema.n_attributes();
    for record in r.records() {
        let record = record?;
        let mut attrs = Vec::with_capacity(n_attrs);
        for (a, attr) in schema.attributes.iter().enumerate() {
            let cat = attr.category_of_label(&record[a]).ok_or_else(|| {
                Error::Other(format!("unknown label {:?} for {}", &record[a], attr.name))
            })?;
            attrs.push(cat as u16);
        }
        let cell = PollTable::cell_index(&dims, &attrs);
        count_a[cell] += parse_f64(&record[n_attrs])?;
        count_b[cell] += parse_f64(&record[n_attrs + 1])?;
    }
    Ok(PollTable {
        dims,
        count_a,
        count_b,
        rate: 0.0,
        target_error: 0.0,
        seed: 0,
    })
}

/// labels.csv: region_id, fraudulent (0/1), mode, affected_votes.
pub fn write_labels_csv(path: impl AsRef<Path>, labels: &FraudLabels) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["region_id", "fraudulent", "mode", "affected_votes"])?;
    for row in &labels.regions {
        w.write_record([
            row.region_id.to_string(),
            if row.fraudulent { "1" } else { "0" }.to_string(),
            row.mode.map(|m| m.as_str().to_string()).unwrap_or_default(),
            row.affected_votes.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Sidecar stored next to labels.csv, carrying the spec and global shares.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelsSidecar {
    pub favored: Candidate,
    pub pre_share_a: f64,
    pub post_share_a: f64,
}

pub fn read_labels_csv(path: impl AsRef<Path>, sidecar: &LabelsSidecar) -> Result<FraudLabels> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let mut regions = Vec::new();
    for record in r.records() {
        let record = record?;
        let region_id: u32 = record[0]
            .parse()
            .map_err(|_| Error::Other(format!("bad region_id {:?}", &record[0])))?;
        let mode = if record[2].is_empty() {
            None
        } else {
            Some(
                FraudMode::parse(&record[2])
                    .ok_or_else(|| Error::Other(format!("bad mode {:?}", &record[2])))?,
            )
        };
        regions.push(RegionLabel {
            region_id,
            fraudulent: &record[1] == "1",
            mode,
            affected_votes: record[3]
                .parse()
                .map_err(|_| Error::Other(format!("bad affected_votes {:?}", &record[3])))?,
        });
    }
    Ok(FraudLabels {
        regions,
        favored: sidecar.favored,
        pre_share_a: sidecar.pre_share_a,
        post_share_a: sidecar.post_share_a,
    })
}

/// report.csv: region_id, cluster, y_hat, z_hat, actual, decision,
/// flagged. Blank decision / predictions mean the producer had none
/// (the density baseline).
pub fn write_report_csv(path: impl AsRef<Path>, report: &DetectionReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record([
        "region_id", "cluster", "y_hat", "z_hat", "actual", "decision", "flagged",
    ])?;
    for row in &report.rows {
        w.write_record([
            row.region_id.to_string(),
            row.cluster.to_string(),
            opt_fmt(row.y_hat),
            opt_fmt(row.z_hat),
            fmt(row.actual),
            opt_fmt(row.decision),
            if row.flagged { "1" } else { "0" }.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_report_rows_csv(path: impl AsRef<Path>) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                parse_f64(s).map(Some)
            }
        };
        rows.push(ReportRow {
            region_id: record[0]
                .parse()
                .map_err(|_| Error::Other(format!("bad region_id {:?}", &record[0])))?,
            cluster: record[1]
                .parse()
                .map_err(|_| Error::Other(format!("bad cluster {:?}", &record[1])))?,
            y_hat: opt(&record[2])?,
            z_hat: opt(&record[3])?,
            actual: parse_f64(&record[4])?,
            decision: opt(&record[5])?,
            flagged: &record[6] == "1",
        });
    }
    Ok(rows)
}

pub fn write_models_json(path: impl AsRef<Path>, models: &[OcSvmModel]) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, models)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn read_models_json(path: impl AsRef<Path>) -> Result<Vec<OcSvmModel>> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// boundary.csv: x, y, decision over a regular grid.
pub fn write_boundary_csv(
    path: impl AsRef<Path>,
    grid: &[(f64, f64, f64)],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["x", "y", "decision"])?;
    for &(x, y, d) in grid {
        w.write_record([fmt(x), fmt(y), fmt(d)])?;
    }
    w.flush()?;
    Ok(())
}

fn metric_fields(m: Option<&crate::metrics::Metrics>) -> [String; 8] {
    match m {
        Some(m) => [
            m.tp.to_string(),
            m.fp.to_string(),
            m.fn_.to_string(),
            m.tn.to_string(),
            opt_fmt(m.precision),
            opt_fmt(m.recall),
            fmt(m.accuracy),
            opt_fmt(m.f1),
        ],
        None => Default::default(),
    }
}

/// cells.csv: one row per grid cell and seed.
pub fn write_experiment_cells_csv(path: impl AsRef<Path>, cells: &[CellResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record([
        "level_pct", "region_pct", "mode", "seed_index", "seed", "n_fraud_regions",
        "probability", "realized_level_pct", "pre_share_a", "post_share_a",
        "tp", "fp", "fn", "tn", "precision", "recall", "accuracy", "f1",
        "b_tp", "b_fp", "b_fn", "b_tn", "b_precision", "b_recall", "b_accuracy", "b_f1",
        "error",
    ])?;
    for cell in cells {
        let mut record = vec![
            fmt(cell.level_pct),
            fmt(cell.region_pct),
            cell.mode.as_str().to_string(),
            cell.seed_index.to_string(),
            cell.seed.to_string(),
            cell.n_fraud_regions.to_string(),
            fmt(cell.probability),
            opt_fmt(cell.realized_level_pct),
            opt_fmt(cell.pre_share_a),
            opt_fmt(cell.post_share_a),
        ];
        record.extend(metric_fields(cell.detector.as_ref()));
        record.extend(metric_fields(cell.baseline.as_ref()));
        record.push(cell.error.clone().unwrap_or_default());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// summary.csv: one row per (level, region share, mode), averaged over
/// seeds; flagged_pct / true_detected_pct is the errors-detected /
/// true-detected pair as percentages of all regions.
pub fn write_experiment_summary_csv(
    path: impl AsRef<Path>,
    summaries: &[CellSummary],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record([
        "level_pct", "region_pct", "mode", "seeds", "flagged_pct", "true_detected_pct",
        "precision", "precision_na_seeds", "recall", "accuracy", "f1",
        "baseline_precision", "baseline_recall", "baseline_f1",
    ])?;
    for s in summaries {
        w.write_record([
            fmt(s.level_pct),
            fmt(s.region_pct),
            s.mode.as_str().to_string(),
            s.seeds.to_string(),
            fmt(s.flagged_pct),
            fmt(s.true_detected_pct),
            opt_fmt(s.mean_precision),
            s.precision_na_seeds.to_string(),
            opt_fmt(s.mean_recall),
            fmt(s.mean_accuracy),
            opt_fmt(s.mean_f1),
            opt_fmt(s.baseline_mean_precision),
            opt_fmt(s.baseline_mean_recall),
            opt_fmt(s.baseline_mean_f1),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Write both experiment CSVs into a directory.
pub fn write_experiment_csvs(dir: impl AsRef<Path>, results: &ExperimentResults) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    write_experiment_cells_csv(dir.join("cells.csv"), &results.cells)?;
    write_experiment_summary_csv(dir.join("summary.csv"), &results.summaries)?;
    Ok(())
}

/// Pretty-printed JSON with trailing newline (manifests, sidecars).
pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::popgen::generate_population;
    use crate::schema::{AttributeDef, AttributeKind};
    use crate::votecast::{cast_votes, init_vote_network, NoiseWidth};
    use crate::schema::Activation;

    fn schema() -> AttributeSchema {
        AttributeSchema::new(vec![AttributeDef {
            name: "g".into(),
            kind: AttributeKind::Categorical {
                labels: vec!["a".into(), "b".into()],
                probs: vec![0.6, 0.4],
            },
        }])
        .unwrap()
    }

    #[test]
    fn population_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("population.csv");
        let pop = generate_population(&schema(), 3, 60, 5).unwrap();
        write_population_csv(&path, &pop).unwrap();
        let back = read_population_csv(&path, &schema(), 5).unwrap();
        assert_eq!(back.n_regions(), 3);
        for (a, b) in pop.regions.iter().zip(&back.regions) {
            assert_eq!(a.individuals, b.individuals);
        }
    }

    #[test]
    fn ballots_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ballots.csv");
        let pop = generate_population(&schema(), 2, 40, 5).unwrap();
        let net = init_vote_network(&schema(), 0.0, Activation::Identity, 7).unwrap();
        let ballots = cast_votes(&pop, &net, 0.5, NoiseWidth::Absolute(0.0), 3).unwrap();
        write_ballots_csv(&path, &ballots).unwrap();
        let back = read_ballots_csv(&path, 2).unwrap();
        assert_eq!(back.per_region, ballots.per_region);
    }

    #[test]
    fn results_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.csv");
        let results = RegionResults {
            regions: vec![
                RegionShare { region_id: 0, votes_a: 123, votes_b: 877 },
                RegionShare { region_id: 1, votes_a: 999, votes_b: 1 },
            ],
        };
        write_results_csv(&path, &results).unwrap();
        let back = read_results_csv(&path).unwrap();
        assert_eq!(back.regions, results.regions);
    }

    #[test]
    fn poll_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("poll.csv");
        let poll = PollTable {
            dims: vec![2],
            count_a: vec![10.5, 3.0],
            count_b: vec![2.25, 7.0],
            rate: 0.05,
            target_error: 0.029,
            seed: 1,
        };
        write_poll_csv(&path, &poll, &schema()).unwrap();
        let back = read_poll_csv(&path, &schema()).unwrap();
        assert_eq!(back.count_a, poll.count_a);
        assert_eq!(back.count_b, poll.count_b);
    }
}

//! End-to-end runs of the binary over a temp directory: the full
//! generate -> poll -> fraud -> detect -> baseline1 -> evaluate ->
//! boundary chain, plus an experiment smoke run.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ballotsim"))
}

fn run_ok(args: &[&str]) -> String {
    let output = bin().args(args).output().expect("spawn ballotsim");
    assert!(
        output.status.success(),
        "ballotsim {args:?} failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr),
    );
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn write_config(dir: &Path) -> String {
    let config = r#"
[simulation]
regions = 12
population = 3600

[voting]
dropout = 0.1
noise_scale = 0.25
activation = "identity"
target_share = 0.5

[polling]
rate = 0.05
target_error = 0.029

[[attribute]]
name = "group"
kind = "categorical"
labels = ["g0", "g1", "g2"]
probs = [0.3, 0.4, 0.3]

[[attribute]]
name = "flag"
kind = "categorical"
labels = ["no", "yes"]
probs = [0.6, 0.4]
"#;
    let path = dir.join("config.toml");
    std::fs::write(&path, config).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn full_pipeline_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out = dir.path().join("run");
    let out_str = out.to_string_lossy().into_owned();

    run_ok(&["generate", "--config", &config, "--seed", "7", "--out", &out_str]);
    for file in ["population.csv", "ballots.csv", "results.csv", "poll.csv", "manifest.json"] {
        assert!(out.join(file).exists(), "{file} missing after generate");
    }

    run_ok(&["poll", "--config", &config, "--seed", "8", "--out", &out_str]);
    assert!(out.join("poll.json").exists());

    run_ok(&[
        "fraud", "--config", &config, "--seed", "9", "--out", &out_str,
        "--mode", "switching", "--regions", "3", "--prob", "0.9", "--favored", "A",
    ]);
    for file in ["ballots_fraud.csv", "results_fraud.csv", "labels.csv", "labels.json"] {
        assert!(out.join(file).exists(), "{file} missing after fraud");
    }

    run_ok(&["detect", "--config", &config, "--seed", "10", "--out", &out_str]);
    for file in ["report.csv", "models.json", "report.json"] {
        assert!(out.join(file).exists(), "{file} missing after detect");
    }

    run_ok(&["baseline1", "--config", &config, "--seed", "10", "--out", &out_str]);
    assert!(out.join("baseline_report.csv").exists());

    let stdout = run_ok(&["evaluate", "--out", &out_str]);
    assert!(out.join("metrics.json").exists());
    assert!(stdout.contains("tp "), "evaluate output: {stdout}");

    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    let total = metrics["tp"].as_u64().unwrap()
        + metrics["fp"].as_u64().unwrap()
        + metrics["fn_"].as_u64().unwrap()
        + metrics["tn"].as_u64().unwrap();
    assert_eq!(total, 12);

    let boundary = out.join("boundary.csv");
    run_ok(&[
        "boundary",
        "--models",
        out.join("models.json").to_str().unwrap(),
        "--cluster",
        "0",
        "--resolution",
        "10",
        "--out",
        boundary.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&boundary).unwrap();
    assert_eq!(text.lines().count(), 101, "header plus 10x10 grid");
    assert!(text.starts_with("x,y,decision"));
}

#[test]
fn generate_is_reproducible_at_the_file_level() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        run_ok(&[
            "generate", "--config", &config, "--seed", "3",
            "--out", out.to_str().unwrap(),
        ]);
    }
    for file in ["population.csv", "ballots.csv", "results.csv", "poll.csv"] {
        let a = std::fs::read(dir.path().join("a").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
}

#[test]
fn experiment_smoke_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out = dir.path().join("grid");
    run_ok(&[
        "experiment", "--config", &config, "--seed", "5",
        "--out", out.to_str().unwrap(),
        "--levels", "25", "--frs", "25", "--seeds", "2", "--modes", "switching",
    ]);
    for file in ["cells.csv", "summary.csv", "experiment_manifest.json"] {
        assert!(out.join(file).exists(), "{file} missing after experiment");
    }
    let cells = std::fs::read_to_string(out.join("cells.csv")).unwrap();
    assert_eq!(cells.lines().count(), 3, "header plus two seed rows");
    assert!(!cells.contains("svm fit failed"));
}

#[test]
fn single_region_single_seed_smoke_cell() {
    // Smallest possible grid cell: the pipeline completes and metrics
    // are computable by hand from the labels.
    let dir = tempfile::tempdir().unwrap();
    let config = r#"
[simulation]
regions = 6
population = 600

[[attribute]]
name = "g"
kind = "categorical"
labels = ["x", "y"]
probs = [0.5, 0.5]
"#;
    let config_path = dir.path().join("tiny.toml");
    std::fs::write(&config_path, config).unwrap();
    let out = dir.path().join("grid");
    run_ok(&[
        "experiment",
        "--config",
        config_path.to_str().unwrap(),
        "--seed",
        "1",
        "--out",
        out.to_str().unwrap(),
        "--levels",
        "40",
        "--frs",
        "17",
        "--seeds",
        "1",
        "--no-baseline",
    ]);
    let cells = std::fs::read_to_string(out.join("cells.csv")).unwrap();
    let row: Vec<&str> = cells.lines().nth(1).unwrap().split(',').collect();
    // n_fraud_regions = round(17% of 6) = 1
    assert_eq!(row[5], "1");
    let tp: usize = row[10].parse().unwrap();
    let fn_: usize = row[12].parse().unwrap();
    assert_eq!(tp + fn_, 1, "exactly one fraudulent region in the cell");
}

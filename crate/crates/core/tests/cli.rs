use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use psd_core::cli::{read_samples, ExperimentConfig};
use psd_core::densities::DensitySpec;
use psd_core::sampler::{adaptive_rho, Metric};
use psd_core::{GaussianPsdModel, HyperRectangle};
use serde_json::Value;
use tempfile::TempDir;

fn psd(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psd")).args(args).current_dir(dir).output().unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn small_config(density: DensitySpec) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(density);
    cfg.seed = 5;
    cfg.fit.n = 200;
    cfg.fit.m = 20;
    cfg.sampler.n_samples = 300;
    cfg.sampler.rho = 0.05;
    cfg.evaluate.n_samples = 200;
    cfg.evaluate.rho = 0.1;
    cfg.evaluate.repetitions = 5;
    cfg.benchmark.budgets = vec![100];
    cfg.benchmark.n_samples = 200;
    cfg.benchmark.repetitions = 2;
    cfg
}

fn write_config(dir: &Path, cfg: &ExperimentConfig) {
    fs::write(dir.join("cfg.json"), cfg.to_json()).unwrap();
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn fit_sample_evaluate_on_p1() {
    let dir = TempDir::new().unwrap();
    write_config(dir.path(), &small_config(DensitySpec::P1));
    ok(&psd(&["fit", "--config", "cfg.json", "--out", "run"], dir.path()));
    let model = GaussianPsdModel::from_json(&fs::read_to_string(dir.path().join("run/model.json")).unwrap()).unwrap();
    assert!(model.as_rank_one().is_some());
    let report = json(&dir.path().join("run/fit_report.json"));
    assert_eq!(report["fit"]["method"], "rank_one");

    ok(&psd(&["sample", "--config", "cfg.json", "--out", "run"], dir.path()));
    let xs = read_samples(&dir.path().join("run/samples.csv"), 1).unwrap();
    assert_eq!(xs.rows(), 300);
    let q = HyperRectangle::new(vec![-3.0], vec![3.0]).unwrap();
    assert!(xs.iter_rows().all(|x| q.contains(x)));
    let sr = json(&dir.path().join("run/sample_report.json"));
    assert_eq!(sr["bound_satisfied"], true);
    assert_eq!(sr["rho_used"], 0.05);

    ok(&psd(&["evaluate", "--config", "cfg.json", "--out", "run"], dir.path()));
    let ev = json(&dir.path().join("run/evaluate_report.json"));
    assert_eq!(ev["mmd"]["values"].as_array().unwrap().len(), 5);
    assert!(ev["exact"]["tv"]["value"].as_f64().unwrap() >= 0.0);
}

#[test]
fn zero_density_fits_zero_and_cannot_be_sampled() {
    let dir = TempDir::new().unwrap();
    write_config(dir.path(), &small_config(DensitySpec::Zero { dim: 2 }));
    ok(&psd(&["fit", "--config", "cfg.json"], dir.path()));
    let model = GaussianPsdModel::from_json(&fs::read_to_string(dir.path().join("model.json")).unwrap()).unwrap();
    assert!(model.as_rank_one().unwrap().coefficients().iter().all(|&v| v == 0.0));
    let out = psd(&["sample", "--config", "cfg.json"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn input_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    assert_eq!(psd(&["fit", "--config", "missing.json"], dir.path()).status.code(), Some(2));
    fs::write(dir.path().join("bad.json"), r#"{"format_version": 1, "density": {"name": "p1"}, "typo": 1}"#).unwrap();
    assert_eq!(psd(&["fit", "--config", "bad.json"], dir.path()).status.code(), Some(2));
    fs::write(dir.path().join("v9.json"), r#"{"format_version": 9, "density": {"name": "p1"}}"#).unwrap();
    assert_eq!(psd(&["fit", "--config", "v9.json"], dir.path()).status.code(), Some(2));
    write_config(dir.path(), &small_config(DensitySpec::P1));
    assert_eq!(psd(&["sample", "--config", "cfg.json", "--rho", "0.1", "--eps", "0.1"], dir.path()).status.code(), Some(2));
    assert_eq!(psd(&["bogus"], dir.path()).status.code(), Some(2));
    ok(&psd(&["fit", "--config", "cfg.json"], dir.path()));
    assert_eq!(psd(&["sample", "--config", "cfg.json", "--rho", "-1"], dir.path()).status.code(), Some(2));
    assert_eq!(psd(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn zero_samples_write_an_empty_file() {
    let dir = TempDir::new().unwrap();
    write_config(dir.path(), &small_config(DensitySpec::P1));
    ok(&psd(&["fit", "--config", "cfg.json"], dir.path()));
    ok(&psd(&["sample", "--config", "cfg.json", "--n", "0"], dir.path()));
    assert_eq!(read_samples(&dir.path().join("samples.csv"), 1).unwrap().rows(), 0);
    assert_eq!(json(&dir.path().join("sample_report.json"))["integral_evals"], 1);
}

#[test]
fn eps_selects_the_adaptive_resolution() {
    let dir = TempDir::new().unwrap();
    write_config(dir.path(), &small_config(DensitySpec::P1));
    ok(&psd(&["fit", "--config", "cfg.json"], dir.path()));
    ok(&psd(&["sample", "--config", "cfg.json", "--eps", "0.05", "--metric", "hellinger"], dir.path()));
    let model = GaussianPsdModel::from_json(&fs::read_to_string(dir.path().join("model.json")).unwrap()).unwrap();
    let q = HyperRectangle::new(vec![-3.0], vec![3.0]).unwrap();
    let want = adaptive_rho(&model, &q, 0.05, Metric::Hellinger).unwrap();
    let sr = json(&dir.path().join("sample_report.json"));
    assert_eq!(sr["rho_used"].as_f64().unwrap(), want);
    assert_eq!(sr["metric"], "hellinger");
}

#[test]
fn identical_sample_files_have_zero_mmd() {
    let dir = TempDir::new().unwrap();
    write_config(dir.path(), &small_config(DensitySpec::P1));
    ok(&psd(&["fit", "--config", "cfg.json"], dir.path()));
    ok(&psd(&["sample", "--config", "cfg.json"], dir.path()));
    fs::copy(dir.path().join("samples.csv"), dir.path().join("copy.csv")).unwrap();
    ok(&psd(&["evaluate", "--config", "cfg.json", "--samples", "samples.csv", "--samples", "copy.csv"], dir.path()));
    let ev = json(&dir.path().join("evaluate_report.json"));
    assert_eq!(ev["mmd"]["mean"], 0.0);
    assert_eq!(ev["mmd"]["sd"], 0.0);
}

#[test]
fn benchmark_rows_follow_the_config() {
    let dir = TempDir::new().unwrap();
    let mut cfg = small_config(DensitySpec::P1);
    cfg.benchmark.methods = vec![psd_core::cli::Method::Grid];
    write_config(dir.path(), &cfg);
    ok(&psd(&["benchmark", "--config", "cfg.json"], dir.path()));
    let csv = fs::read_to_string(dir.path().join("benchmark.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines, ["method,n,evaluations,mmd_mean,mmd_sd", lines[1]]);
    assert!(lines[1].starts_with("grid,100,100,"));
}

#[test]
fn seed_flag_changes_the_draws() {
    let dir = TempDir::new().unwrap();
    write_config(dir.path(), &small_config(DensitySpec::P1));
    ok(&psd(&["fit", "--config", "cfg.json"], dir.path()));
    // the model is looked up in --out unless given
    assert_eq!(psd(&["sample", "--config", "cfg.json", "--out", "a"], dir.path()).status.code(), Some(2));
    ok(&psd(&["sample", "--config", "cfg.json", "--out", "b", "--seed", "6", "--model", "model.json"], dir.path()));
    ok(&psd(&["sample", "--config", "cfg.json", "--out", "a", "--model", "model.json"], dir.path()));
    assert_ne!(fs::read(dir.path().join("a/samples.csv")).unwrap(), fs::read(dir.path().join("b/samples.csv")).unwrap());
}

#[test]
fn binary_samples_round_trip() {
    let dir = TempDir::new().unwrap();
    let mut cfg = small_config(DensitySpec::P1);
    cfg.sampler.format = psd_core::sampler::SampleFormat::Binary;
    write_config(dir.path(), &cfg);
    ok(&psd(&["fit", "--config", "cfg.json"], dir.path()));
    // the default file name says CSV
    assert_eq!(psd(&["sample", "--config", "cfg.json"], dir.path()).status.code(), Some(2));
    cfg.outputs.samples = "samples.bin".into();
    write_config(dir.path(), &cfg);
    ok(&psd(&["sample", "--config", "cfg.json"], dir.path()));
    assert_eq!(fs::metadata(dir.path().join("samples.bin")).unwrap().len(), 300 * 8);
    assert_eq!(read_samples(&dir.path().join("samples.bin"), 1).unwrap().rows(), 300);
}

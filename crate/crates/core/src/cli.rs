//! The `psd` command line: `fit`, `sample`, `evaluate` and `benchmark` pipelines
//! driven by a JSON [`ExperimentConfig`].
//!
//! Randomness comes from one master seed. Each consumer gets its own seed from
//! [`derive_seed`]: the master seeds a ChaCha8 generator, the consumer picks a
//! stream ([`SeedStream`]) and takes the `index`-th 64-bit word pair of it.

use std::ffi::OsString;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::statistics::Statistics;

use crate::baseline::{build_grid, grid_sample};
use crate::densities::{sample_truth, DensitySpec};
use crate::error::PsdError;
use crate::estimator::{fit_psd, fit_rank_one, select_rank_one, FitConfig, PsdFitOptions, PsdFitReport, RankOneReport, SelectionReport};
use crate::integration::HyperRectangle;
use crate::linalg::{Points, PrecisionVector};
use crate::metrics::{empirical_mmd, exact_distances, ExactDistances};
use crate::model::GaussianPsdModel;
use crate::sampler::{
    adaptive_rho, find_support, integral_eval_bound, read_samples_binary, read_samples_csv, sample,
    write_samples_binary, write_samples_csv, IntegralStrategy, Metric, SampleFormat, SamplerParams, SupportSearch,
};

pub const CONFIG_FORMAT_VERSION: u32 = 1;
pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Failure of a command, split by exit code.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    /// Bad configuration, flags or input files (exit code 2).
    #[error("{0}")]
    Input(String),
    /// A numerical routine failed (exit code 3).
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<PsdError> for CliError {
    fn from(e: PsdError) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Independent seed streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedStream {
    FitDesign = 0,
    Sampler = 1,
    Truth = 2,
    Grid = 3,
    Reference = 4,
    Evaluate = 5,
}

pub fn derive_seed(master: u64, stream: SeedStream, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream as u64);
    rng.set_word_pos(2 * index as u128);
    rng.next_u64()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionGrid {
    pub taus: Vec<f64>,
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSettings {
    pub n: usize,
    pub m: usize,
    pub tau: f64,
    pub lambda: f64,
    /// Fit a general PSD model instead of a rank-one model.
    pub psd: bool,
    pub psd_options: PsdFitOptions,
    /// Rank-one fits only: pick `tau, lambda` on a held-out half of the evaluations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection: Option<SelectionGrid>,
}

impl Default for FitSettings {
    fn default() -> Self {
        FitSettings {
            n: 1000,
            m: 50,
            tau: 1.0,
            lambda: 1e-9,
            psd: false,
            psd_options: PsdFitOptions::default(),
            selection: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSettings {
    pub n_samples: usize,
    pub rho: f64,
    /// When set, `rho` is replaced by the adaptive value for this target distance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    pub metric: Metric,
    pub strategy: IntegralStrategy,
    /// Sample on the box found by `find_support` instead of the configured domain.
    pub find_support: bool,
    pub support_eps: f64,
    pub format: SampleFormat,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        SamplerSettings {
            n_samples: 1000,
            rho: 1e-3,
            eps: None,
            metric: Metric::Tv,
            strategy: IntegralStrategy::default(),
            find_support: false,
            support_eps: 1e-6,
            format: SampleFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSettings {
    /// Dyadic resolution for the quadrature distances.
    pub rho: f64,
    pub mmd_eta: f64,
    pub repetitions: usize,
    pub n_samples: usize,
}

impl Default for EvaluateSettings {
    fn default() -> Self {
        EvaluateSettings { rho: 1e-2, mmd_eta: 2.0, repetitions: 5, n_samples: 10_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Grid,
    Psd,
    /// Fresh draws from the target itself.
    Truth,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Grid => "grid",
            Method::Psd => "psd",
            Method::Truth => "truth",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkSettings {
    /// Evaluation budgets `n`.
    pub budgets: Vec<usize>,
    pub methods: Vec<Method>,
    pub n_samples: usize,
    pub repetitions: usize,
    pub mmd_eta: f64,
}

impl Default for BenchmarkSettings {
    fn default() -> Self {
        BenchmarkSettings {
            budgets: vec![1000, 10_000],
            methods: vec![Method::Grid, Method::Psd, Method::Truth],
            n_samples: 10_000,
            repetitions: 5,
            mmd_eta: 2.0,
        }
    }
}

/// File names, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub model: PathBuf,
    pub fit_report: PathBuf,
    pub samples: PathBuf,
    pub sample_report: PathBuf,
    pub evaluate_report: PathBuf,
    pub benchmark: PathBuf,
}

impl Default for OutputPaths {
    fn default() -> Self {
        OutputPaths {
            model: "model.json".into(),
            fit_report: "fit_report.json".into(),
            samples: "samples.csv".into(),
            sample_report: "sample_report.json".into(),
            evaluate_report: "evaluate_report.json".into(),
            benchmark: "benchmark.csv".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub format_version: u32,
    #[serde(default)]
    pub seed: u64,
    pub density: DensitySpec,
    /// Defaults to the density's own box.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<HyperRectangle>,
    #[serde(default)]
    pub fit: FitSettings,
    #[serde(default)]
    pub sampler: SamplerSettings,
    #[serde(default)]
    pub evaluate: EvaluateSettings,
    #[serde(default)]
    pub benchmark: BenchmarkSettings,
    #[serde(default)]
    pub outputs: OutputPaths,
}

impl ExperimentConfig {
    pub fn new(density: DensitySpec) -> Self {
        ExperimentConfig {
            format_version: CONFIG_FORMAT_VERSION,
            seed: 0,
            density,
            domain: None,
            fit: FitSettings::default(),
            sampler: SamplerSettings::default(),
            evaluate: EvaluateSettings::default(),
            benchmark: BenchmarkSettings::default(),
            outputs: OutputPaths::default(),
        }
    }

    pub fn from_json(s: &str) -> CliResult<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(s).map_err(|e| CliError::Input(format!("bad config: {e}")))?;
        if cfg.format_version != CONFIG_FORMAT_VERSION {
            return Err(CliError::Input(format!(
                "config format_version {} is not supported (expected {CONFIG_FORMAT_VERSION})",
                cfg.format_version
            )));
        }
        cfg.density.validate()?;
        if let Some(q) = &cfg.domain {
            if q.dim() != cfg.density.dim() {
                return Err(PsdError::DimensionMismatch { expected: cfg.density.dim(), found: q.dim() }.into());
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        Self::from_json(&fs::read_to_string(path).map_err(|e| io_err(path, e))?)
    }

    pub fn domain(&self) -> HyperRectangle {
        self.domain.clone().unwrap_or_else(|| self.density.default_domain())
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    write_file(path, s.as_bytes())
}

fn load_model(path: &Path) -> CliResult<GaussianPsdModel> {
    let s = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    GaussianPsdModel::from_json(&s).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn format_for(path: &Path) -> SampleFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("bin") => SampleFormat::Binary,
        _ => SampleFormat::Csv,
    }
}

pub fn write_samples(path: &Path, samples: &Points, format: SampleFormat) -> CliResult<()> {
    let mut buf = Vec::new();
    match format {
        SampleFormat::Csv => write_samples_csv(samples, &mut buf),
        SampleFormat::Binary => write_samples_binary(samples, &mut buf),
    }
    .expect("writing to memory");
    write_file(path, &buf)
}

pub fn read_samples(path: &Path, dim: usize) -> CliResult<Points> {
    let f = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let r = BufReader::new(f);
    let pts = match format_for(path) {
        SampleFormat::Csv => read_samples_csv(r, dim),
        SampleFormat::Binary => read_samples_binary(r, dim),
    };
    pts.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Mean and sample standard deviation; the deviation of a single value is 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub values: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
}

impl Summary {
    pub fn new(values: Vec<f64>) -> Self {
        let mean = values.iter().mean();
        let sd = if values.len() < 2 { 0.0 } else { values.iter().std_dev() };
        Summary { values, mean, sd }
    }
}

// ---- fit ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum FitDetails {
    RankOne {
        #[serde(flatten)]
        report: RankOneReport,
        #[serde(skip_serializing_if = "Option::is_none")]
        selection: Option<SelectionReport>,
    },
    Psd {
        #[serde(flatten)]
        report: PsdFitReport,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub format_version: u32,
    pub density: DensitySpec,
    pub domain: HyperRectangle,
    pub seed: u64,
    pub fit: FitDetails,
}

/// Fits a model to `cfg.density` with `n` evaluations and the given design seed.
pub fn fit_model(cfg: &ExperimentConfig, n: usize, m: usize, design_seed: u64, psd: bool) -> CliResult<(GaussianPsdModel, FitDetails)> {
    let q = cfg.domain();
    let oracle = cfg.density.oracle(q)?;
    let fc = FitConfig { n, m, tau: cfg.fit.tau, lambda: cfg.fit.lambda, seed: design_seed };
    if psd {
        let fit = fit_psd(&oracle, &fc, &cfg.fit.psd_options)?;
        return Ok((fit.model, FitDetails::Psd { report: fit.report }));
    }
    let (fit, selection) = match &cfg.fit.selection {
        Some(grid) => {
            let (fit, sel) = select_rank_one(&oracle, &fc, &grid.taus, &grid.lambdas)?;
            (fit, Some(sel))
        }
        None => (fit_rank_one(&oracle, &fc)?, None),
    };
    Ok((fit.model.to_psd(), FitDetails::RankOne { report: fit.report, selection }))
}

pub fn cmd_fit(cfg: &ExperimentConfig, out: &Path, psd: bool) -> CliResult<FitReport> {
    let seed = derive_seed(cfg.seed, SeedStream::FitDesign, 0);
    let (model, details) = fit_model(cfg, cfg.fit.n, cfg.fit.m, seed, psd || cfg.fit.psd)?;
    let report = FitReport {
        format_version: REPORT_FORMAT_VERSION,
        density: cfg.density.clone(),
        domain: cfg.domain(),
        seed: cfg.seed,
        fit: details,
    };
    let mut json = model.to_json();
    json.push('\n');
    write_file(&out.join(&cfg.outputs.model), json.as_bytes())?;
    write_json(&out.join(&cfg.outputs.fit_report), &report)?;
    Ok(report)
}

// ---- sample ----

/// Command-line overrides for `sample`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleOverrides {
    pub model: Option<PathBuf>,
    pub n_samples: Option<usize>,
    pub rho: Option<f64>,
    pub eps: Option<f64>,
    pub metric: Option<Metric>,
    pub find_support: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub format_version: u32,
    pub seed: u64,
    pub n_samples: usize,
    pub dim: usize,
    pub domain: HyperRectangle,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support: Option<SupportSearch>,
    pub rho_used: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<Metric>,
    pub strategy: IntegralStrategy,
    pub integral_evals: u64,
    pub erf_calls: u64,
    pub leaf_count: usize,
    pub integral_eval_bound: f64,
    pub bound_satisfied: bool,
}

pub fn cmd_sample(cfg: &ExperimentConfig, out: &Path, ov: &SampleOverrides) -> CliResult<SampleReport> {
    let path = out.join(&cfg.outputs.samples);
    if format_for(&path) != cfg.sampler.format {
        return Err(CliError::Input(format!(
            "{}: binary samples need a .bin file name and CSV samples any other",
            path.display()
        )));
    }
    let model_path = ov.model.clone().unwrap_or_else(|| out.join(&cfg.outputs.model));
    let model = load_model(&model_path)?;
    let s = &cfg.sampler;
    let n = ov.n_samples.unwrap_or(s.n_samples);
    let domain = cfg.domain.clone().unwrap_or_else(|| cfg.density.default_domain());
    if domain.dim() != model.dim() {
        return Err(PsdError::DimensionMismatch { expected: model.dim(), found: domain.dim() }.into());
    }
    let (q, support) = if ov.find_support || s.find_support {
        let found = find_support(&model, s.support_eps)?;
        (found.rect.clone(), Some(found))
    } else if !domain.is_bounded() {
        return Err(CliError::Input("the sampling box is unbounded; pass --find-support".into()));
    } else {
        (domain, None)
    };
    let eps = if ov.rho.is_some() { None } else { ov.eps.or(s.eps) };
    let metric = ov.metric.unwrap_or(s.metric);
    let rho = match eps {
        Some(e) => adaptive_rho(&model, &q, e, metric)?,
        None => ov.rho.unwrap_or(s.rho),
    };
    let seed = derive_seed(cfg.seed, SeedStream::Sampler, 0);
    let params = SamplerParams::new(rho, n, seed)?.with_strategy(s.strategy);
    let run = sample(&model, &q, &params)?;
    let bound = integral_eval_bound(n, &q, rho);
    let report = SampleReport {
        format_version: REPORT_FORMAT_VERSION,
        seed: cfg.seed,
        n_samples: n,
        dim: q.dim(),
        domain: q,
        support,
        rho_used: run.rho_used,
        eps,
        metric: eps.map(|_| metric),
        strategy: s.strategy,
        integral_evals: run.accounting.integral_evals,
        erf_calls: run.accounting.erf_calls,
        leaf_count: run.leaf_count,
        integral_eval_bound: bound,
        bound_satisfied: run.accounting.integral_evals as f64 <= bound,
    };
    write_samples(&path, &run.samples, s.format)?;
    write_json(&out.join(&cfg.outputs.sample_report), &report)?;
    Ok(report)
}

// ---- evaluate ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmdReport {
    pub eta: f64,
    pub n_samples: usize,
    #[serde(flatten)]
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateReport {
    pub format_version: u32,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// Quadrature distances between the model on the domain and its dyadic approximation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<ExactDistances>,
    pub mmd: MmdReport,
}

/// With two sample files, the MMD between them. Otherwise the model is compared with
/// its dyadic approximation by quadrature (`d <= 2`) and with the target density by
/// repeated MMD.
pub fn cmd_evaluate(
    cfg: &ExperimentConfig,
    out: &Path,
    model: Option<&Path>,
    samples: &[PathBuf],
) -> CliResult<EvaluateReport> {
    let e = &cfg.evaluate;
    let d = cfg.density.dim();
    let eta = PrecisionVector::isotropic(e.mmd_eta, d)?;
    let report = match samples {
        [a, b] => {
            let (pa, pb) = (read_samples(a, d)?, read_samples(b, d)?);
            let v = empirical_mmd(&pa, &pb, &eta)?;
            EvaluateReport {
                format_version: REPORT_FORMAT_VERSION,
                seed: cfg.seed,
                rho: None,
                exact: None,
                mmd: MmdReport { eta: e.mmd_eta, n_samples: pa.rows().max(pb.rows()), summary: Summary::new(vec![v]) },
            }
        }
        [] => {
            let path = model.map(Path::to_path_buf).unwrap_or_else(|| out.join(&cfg.outputs.model));
            let model = load_model(&path)?;
            let q = cfg.domain();
            if q.dim() != model.dim() {
                return Err(PsdError::DimensionMismatch { expected: model.dim(), found: q.dim() }.into());
            }
            let exact = if d <= 2 { Some(exact_distances(&model, &q, e.rho)?) } else { None };
            let mut values = Vec::with_capacity(e.repetitions);
            for r in 0..e.repetitions as u64 {
                let params = SamplerParams::new(e.rho, e.n_samples, derive_seed(cfg.seed, SeedStream::Evaluate, 2 * r))?;
                let xs = sample(&model, &q, &params)?.samples;
                let ys = sample_truth(&cfg.density, &q, e.n_samples, derive_seed(cfg.seed, SeedStream::Evaluate, 2 * r + 1))?;
                values.push(empirical_mmd(&xs, &ys, &eta)?);
            }
            EvaluateReport {
                format_version: REPORT_FORMAT_VERSION,
                seed: cfg.seed,
                rho: Some(e.rho),
                exact,
                mmd: MmdReport { eta: e.mmd_eta, n_samples: e.n_samples, summary: Summary::new(values) },
            }
        }
        _ => return Err(CliError::Input("evaluate takes zero or two sample files".into())),
    };
    write_json(&out.join(&cfg.outputs.evaluate_report), &report)?;
    Ok(report)
}

// ---- benchmark ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub method: Method,
    pub n: usize,
    /// Density evaluations actually spent; the grid rounds down to a perfect power.
    pub evaluations: usize,
    pub mmd: Summary,
}

/// Runs the sweep and returns rows sorted by `(method, n)`. Each repetition compares
/// against its own fresh draw from the target, shared by all methods.
pub fn benchmark_rows(cfg: &ExperimentConfig) -> CliResult<Vec<BenchmarkRow>> {
    let b = &cfg.benchmark;
    let q = cfg.domain();
    if !q.is_bounded() {
        return Err(CliError::Input("benchmark needs a bounded domain".into()));
    }
    if b.repetitions == 0 {
        return Err(CliError::Input("benchmark repetitions must be >= 1".into()));
    }
    let eta = PrecisionVector::isotropic(b.mmd_eta, q.dim())?;
    let reps = b.repetitions as u64;
    let truth: Vec<Points> = (0..reps)
        .map(|r| sample_truth(&cfg.density, &q, b.n_samples, derive_seed(cfg.seed, SeedStream::Truth, r)))
        .collect::<Result<_, _>>()?;
    let mut budgets = b.budgets.clone();
    budgets.sort_unstable();
    budgets.dedup();
    let mut methods = b.methods.clone();
    methods.sort_unstable();
    methods.dedup();

    let mut truth_summary = None;
    let mut rows = Vec::new();
    for &method in &methods {
        for (bi, &n) in budgets.iter().enumerate() {
            let stream_index = |r: u64| bi as u64 * reps + r;
            let (evaluations, values) = match method {
                Method::Truth => {
                    if truth_summary.is_none() {
                        let mut v = Vec::new();
                        for (r, t) in truth.iter().enumerate() {
                            let seed = derive_seed(cfg.seed, SeedStream::Reference, r as u64);
                            let fresh = sample_truth(&cfg.density, &q, b.n_samples, seed)?;
                            v.push(empirical_mmd(&fresh, t, &eta)?);
                        }
                        truth_summary = Some(v);
                    }
                    (0, truth_summary.clone().expect("computed above"))
                }
                Method::Grid => {
                    let oracle = cfg.density.oracle(q.clone())?;
                    let grid = build_grid(&oracle, &q, n)?;
                    let mut v = Vec::new();
                    for (r, t) in truth.iter().enumerate() {
                        let seed = derive_seed(cfg.seed, SeedStream::Grid, stream_index(r as u64));
                        v.push(empirical_mmd(&grid_sample(&grid, b.n_samples, seed), t, &eta)?);
                    }
                    (grid.evaluations_used(), v)
                }
                Method::Psd => {
                    let seed = derive_seed(cfg.seed, SeedStream::FitDesign, bi as u64 + 1);
                    let m = cfg.fit.m.min(n);
                    let (model, _) = fit_model(cfg, n, m, seed, cfg.fit.psd)?;
                    let mut v = Vec::new();
                    for (r, t) in truth.iter().enumerate() {
                        let seed = derive_seed(cfg.seed, SeedStream::Sampler, stream_index(r as u64) + 1);
                        let params = SamplerParams::new(cfg.sampler.rho, b.n_samples, seed)?.with_strategy(cfg.sampler.strategy);
                        v.push(empirical_mmd(&sample(&model, &q, &params)?.samples, t, &eta)?);
                    }
                    (n, v)
                }
            };
            rows.push(BenchmarkRow { method, n, evaluations, mmd: Summary::new(values) });
        }
    }
    rows.sort_by(|a, b| (a.method.name(), a.n).cmp(&(b.method.name(), b.n)));
    Ok(rows)
}

pub fn benchmark_csv(rows: &[BenchmarkRow]) -> String {
    let mut s = String::from("method,n,evaluations,mmd_mean,mmd_sd\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{},{}\n", r.method.name(), r.n, r.evaluations, r.mmd.mean, r.mmd.sd));
    }
    s
}

pub fn cmd_benchmark(cfg: &ExperimentConfig, out: &Path) -> CliResult<Vec<BenchmarkRow>> {
    let rows = benchmark_rows(cfg)?;
    write_file(&out.join(&cfg.outputs.benchmark), benchmark_csv(&rows).as_bytes())?;
    Ok(rows)
}

// ---- argument parsing ----

#[derive(Debug, Parser)]
#[command(name = "psd", version, about = "Fit, sample and evaluate Gaussian PSD models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model to the configured density.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Fit a general PSD model instead of a rank-one model.
        #[arg(long)]
        psd: bool,
    },
    /// Draw samples from a fitted model.
    Sample {
        #[command(flatten)]
        common: Common,
        /// Model file; defaults to the model output of `fit`.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, conflicts_with = "eps")]
        rho: Option<f64>,
        /// Target distance for the adaptive resolution.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        metric: Option<Metric>,
        #[arg(long)]
        find_support: bool,
    },
    /// Distances between a model and the target, or between two sample files.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        samples: Vec<PathBuf>,
    },
    /// MMD of the fitted model and of the grid baseline against the target.
    Benchmark {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn dispatch(cmd: Command) -> CliResult<String> {
    match cmd {
        Command::Fit { common, psd } => {
            let cfg = load(&common)?;
            cmd_fit(&cfg, &common.out, psd)?;
            Ok(format!("wrote {}", common.out.join(&cfg.outputs.model).display()))
        }
        Command::Sample { common, model, n, rho, eps, metric, find_support } => {
            let cfg = load(&common)?;
            let ov = SampleOverrides { model, n_samples: n, rho, eps, metric, find_support };
            let r = cmd_sample(&cfg, &common.out, &ov)?;
            Ok(format!(
                "wrote {} samples (rho = {}, {} integrals)",
                r.n_samples, r.rho_used, r.integral_evals
            ))
        }
        Command::Evaluate { common, model, samples } => {
            let cfg = load(&common)?;
            let r = cmd_evaluate(&cfg, &common.out, model.as_deref(), &samples)?;
            Ok(format!("mmd = {} +- {}", r.mmd.summary.mean, r.mmd.summary.sd))
        }
        Command::Benchmark { common } => {
            let cfg = load(&common)?;
            let rows = cmd_benchmark(&cfg, &common.out)?;
            Ok(benchmark_csv(&rows).trim_end().to_string())
        }
    }
}

/// Entry point of the `psd` binary.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(msg) => {
            let _ = writeln!(BufWriter::new(std::io::stdout()), "{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("psd: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

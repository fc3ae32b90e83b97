//! Seeded Monte-Carlo comparison of the triangle and square smoothers.
//!
//! Each replication simulates one dataset (seed `base_seed ^ replication`)
//! and runs every configured method on that same dataset, so method
//! comparisons are paired. Records are assembled in replication order.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{EvaluationGrid, NoiseModel, SurfaceEstimate, SurfaceKind, DEFAULT_GRID_SIZE};
use crate::error::{Error, Result};
use crate::kernels::KernelConfig;
use crate::simulate::{analytic_covariance, example2_mean, simulate_dataset, ProcessSpec};
use crate::smoothers::{
    estimate_covariance, estimate_noise_variance, select_bandwidth_cv, Bandwidths, CovarianceFit, Method,
};
use crate::spectral::{
    align_signs, brownian_eigenpair, eigendecompose, hs_distance, l2_distance, sup_distance, EigenSystem,
    SignReference,
};

/// Eigenfunctions compared against the truth.
pub const EIGENFUNCTIONS_COMPARED: usize = 4;
pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_FILE: &str = "summary.csv";
/// Replications used by the CLI `--fast` mode.
pub const FAST_REPLICATIONS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Example {
    /// Standard Brownian motion.
    Example1Bm,
    /// Smooth three-component process.
    Example2Smooth,
    /// Any catalog process given in `process`.
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthChoice {
    /// `(ln n / n)^{1/4}` clamped, for both bandwidths.
    Auto,
    /// Curve-wise cross-validation per method; the mean uses the same value.
    CrossValidation,
    Fixed { h_g: f64, h_mu: f64 },
}

fn default_replications() -> usize {
    100
}
fn default_sigma() -> f64 {
    0.2
}
fn default_grid_size() -> usize {
    DEFAULT_GRID_SIZE
}
fn default_bandwidth() -> BandwidthChoice {
    BandwidthChoice::Auto
}
fn default_methods() -> Vec<Method> {
    vec![Method::Triangle, Method::Square]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub example: Example,
    /// Required when `example` is `custom`, ignored otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub process: Option<ProcessSpec>,
    pub n: usize,
    pub r: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_sigma")]
    pub sigma_noise: f64,
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default = "default_bandwidth")]
    pub bandwidth: BandwidthChoice,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub base_seed: u64,
    /// Eigenvalues reported; 20 for Brownian motion, 17 otherwise by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_eigen: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(example: Example, n: usize, r: usize) -> Self {
        Self {
            example,
            process: None,
            n,
            r,
            replications: default_replications(),
            sigma_noise: default_sigma(),
            grid_size: default_grid_size(),
            kernel: KernelConfig::default(),
            bandwidth: default_bandwidth(),
            methods: default_methods(),
            base_seed: 0,
            num_eigen: None,
        }
    }

    pub fn process(&self) -> Result<ProcessSpec> {
        match self.example {
            Example::Example1Bm => Ok(ProcessSpec::BrownianMotion),
            Example::Example2Smooth => Ok(ProcessSpec::Example2),
            Example::Custom => self
                .process
                .clone()
                .ok_or_else(|| Error::InvalidArgument("custom experiments need a `process`".into())),
        }
    }

    pub fn eigen_count(&self) -> usize {
        let k = self.num_eigen.unwrap_or(match self.example {
            Example::Example1Bm => 20,
            _ => 17,
        });
        k.min(self.grid_size)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.replications < 1 {
            return bad("replications must be >= 1");
        }
        if self.n < 1 {
            return bad("n must be >= 1");
        }
        if self.r < 2 {
            return bad("r must be >= 2");
        }
        if self.methods.is_empty() {
            return bad("at least one method is required");
        }
        if self.grid_size < 2 {
            return bad("grid_size must be >= 2");
        }
        if self.eigen_count() < 1 {
            return bad("num_eigen must be >= 1");
        }
        if let BandwidthChoice::Fixed { h_g, h_mu } = self.bandwidth {
            self.kernel.at_bandwidth(h_g)?;
            self.kernel.at_bandwidth(h_mu)?;
        }
        NoiseModel::gaussian(self.sigma_noise)?;
        self.process()?.check()
    }

    /// Seed of replication `rep`.
    pub fn replication_seed(&self, rep: usize) -> u64 {
        self.base_seed ^ rep as u64
    }
}

/// Ground truth on the experiment grid.
#[derive(Debug, Clone)]
pub struct Truth {
    pub mean: Vec<f64>,
    pub covariance: SurfaceEstimate,
    pub eigenvalues: Vec<f64>,
    pub eigenfunctions: Vec<Vec<f64>>,
}

/// Mean `5 (s - 0.6)^2`, covariance `0.2 Σ_j g_j(s) g_j(t)` and the spectrum
/// of its discretisation (three nonzero eigenvalues).
pub fn example2_truth(grid: &EvaluationGrid) -> Result<(Vec<f64>, SurfaceEstimate, EigenSystem)> {
    let proc = ProcessSpec::Example2;
    let mean = grid.points().iter().map(|&s| example2_mean(s)).collect();
    let cov = SurfaceEstimate::from_fn(grid, SurfaceKind::Covariance, |s, t| analytic_covariance(&proc, s, t));
    let eigen = eigendecompose(&cov, grid.len())?;
    Ok((mean, cov, eigen))
}

pub fn truth_for(cfg: &ExperimentConfig, grid: &EvaluationGrid) -> Result<Truth> {
    let k = cfg.eigen_count();
    let proc = cfg.process()?;
    match cfg.example {
        Example::Example1Bm => {
            let (eigenvalues, eigenfunctions) = (1..=k).map(|j| brownian_eigenpair(j, grid)).unzip();
            Ok(Truth {
                mean: vec![0.0; grid.len()],
                covariance: SurfaceEstimate::from_fn(grid, SurfaceKind::Covariance, f64::min),
                eigenvalues,
                eigenfunctions,
            })
        }
        Example::Example2Smooth => {
            let (mean, covariance, eigen) = example2_truth(grid)?;
            Ok(Truth {
                mean,
                covariance,
                eigenvalues: eigen.eigenvalues[..k].to_vec(),
                eigenfunctions: eigen.eigenfunctions[..k].to_vec(),
            })
        }
        Example::Custom => {
            let covariance =
                SurfaceEstimate::from_fn(grid, SurfaceKind::Covariance, |s, t| analytic_covariance(&proc, s, t));
            let eigen = eigendecompose(&covariance, k)?;
            Ok(Truth {
                mean: grid.points().iter().map(|&s| crate::simulate::analytic_mean(&proc, s)).collect(),
                covariance,
                eigenvalues: eigen.eigenvalues,
                eigenfunctions: eigen.eigenfunctions,
            })
        }
    }
}

/// Metrics of one method on one replication. Metric fields are `None` when
/// the replication failed (see `error`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub seed: u64,
    pub method: Method,
    pub h_g: Option<f64>,
    pub h_mu: Option<f64>,
    pub hs_error: Option<f64>,
    pub sup_error: Option<f64>,
    pub sigma_hat: Option<f64>,
    pub eigenvalues: Vec<f64>,
    /// `Δ`-weighted L² errors after sign alignment for `k = 1..=4`; `None`
    /// for negative estimated eigenvalues or null true eigenvalues.
    pub eigenfunction_errors: Vec<Option<f64>>,
    pub remediated_nodes: usize,
    pub error: Option<String>,
}

impl ReplicationRecord {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub metric: String,
    pub count: usize,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub truth_eigenvalues: Vec<f64>,
    pub records: Vec<ReplicationRecord>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentReport {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.failed()).count()
    }

    pub fn records_for(&self, method: Method) -> impl Iterator<Item = &ReplicationRecord> {
        self.records.iter().filter(move |r| r.method == method)
    }

    /// Values of a named metric (see [`metric_names`]) for one method, in
    /// replication order, skipping missing entries.
    pub fn metric(&self, method: Method, name: &str) -> Vec<f64> {
        self.records_for(method).filter_map(|r| metric_value(r, name)).collect()
    }

    pub fn median(&self, method: Method, name: &str) -> Option<f64> {
        median(&self.metric(method, name))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `report.json` and `summary.csv` into `dir`, creating it.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut json = self.to_json()?;
        json.push('\n');
        std::fs::write(dir.join(REPORT_FILE), json)?;
        self.write_summary_csv(std::fs::File::create(dir.join(SUMMARY_FILE))?)
    }

    pub fn write_summary_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["method", "metric", "count", "min", "q25", "median", "q75", "max"])?;
        for row in &self.summary {
            wtr.write_record(&[
                row.method.to_string(),
                row.metric.clone(),
                row.count.to_string(),
                row.min.to_string(),
                row.q25.to_string(),
                row.median.to_string(),
                row.q75.to_string(),
                row.max.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub fn metric_names(k: usize) -> Vec<String> {
    let mut names = vec!["hs_error".to_string(), "sup_error".to_string(), "sigma_hat".to_string()];
    names.extend((1..=k).map(|j| format!("lambda_{j}")));
    names.extend((1..=EIGENFUNCTIONS_COMPARED).map(|j| format!("psi_error_{j}")));
    names
}

fn metric_value(r: &ReplicationRecord, name: &str) -> Option<f64> {
    match name {
        "hs_error" => r.hs_error,
        "sup_error" => r.sup_error,
        "sigma_hat" => r.sigma_hat,
        "h_g" => r.h_g,
        _ => {
            if let Some(k) = name.strip_prefix("lambda_").and_then(|k| k.parse::<usize>().ok()) {
                r.eigenvalues.get(k.checked_sub(1)?).copied()
            } else if let Some(k) = name.strip_prefix("psi_error_").and_then(|k| k.parse::<usize>().ok()) {
                r.eigenfunction_errors.get(k.checked_sub(1)?).copied().flatten()
            } else {
                None
            }
        }
    }
}

/// Linear-interpolation quantile of finite values; `None` when empty.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (pos - lo as f64) * (v[hi] - v[lo]))
}

pub fn median(values: &[f64]) -> Option<f64> {
    quantile(values, 0.5)
}

fn summarize(cfg: &ExperimentConfig, records: &[ReplicationRecord]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for &method in &cfg.methods {
        for name in metric_names(cfg.eigen_count()) {
            let vals: Vec<f64> =
                records.iter().filter(|r| r.method == method).filter_map(|r| metric_value(r, &name)).collect();
            let Some(med) = median(&vals) else { continue };
            rows.push(SummaryRow {
                method,
                metric: name,
                count: vals.len(),
                min: quantile(&vals, 0.0).unwrap_or(med),
                q25: quantile(&vals, 0.25).unwrap_or(med),
                median: med,
                q75: quantile(&vals, 0.75).unwrap_or(med),
                max: quantile(&vals, 1.0).unwrap_or(med),
            });
        }
    }
    rows
}

fn evaluate(
    cfg: &ExperimentConfig,
    truth: &Truth,
    ds: &crate::data::SparseFunctionalDataset,
    grid: &EvaluationGrid,
    method: Method,
) -> Result<(ReplicationRecord, CovarianceFit)> {
    let bandwidths = match cfg.bandwidth {
        BandwidthChoice::Auto => Bandwidths::default_for(ds, grid),
        BandwidthChoice::Fixed { h_g, h_mu } => Bandwidths { h_g, h_mu },
        BandwidthChoice::CrossValidation => {
            Bandwidths::equal(select_bandwidth_cv(ds, &cfg.kernel, grid, method)?.bandwidth)
        }
    };
    let fit = estimate_covariance(ds, &cfg.kernel, bandwidths, grid, method)?;
    let sigma_hat = estimate_noise_variance(ds, &fit.mu_kernel, &fit.second_moment)?;
    let k = cfg.eigen_count();
    let eigen = eigendecompose(&fit.covariance, k)?;
    let eigen = align_signs(&eigen, SignReference::Functions(&truth.eigenfunctions))?;
    let null_level = 1e-10 * truth.eigenvalues.first().copied().unwrap_or(0.0).abs();
    let eigenfunction_errors = (0..EIGENFUNCTIONS_COMPARED.min(k))
        .map(|j| {
            let usable = eigen.eigenvalues[j] >= 0.0 && truth.eigenvalues[j] > null_level;
            usable.then(|| l2_distance(grid, &eigen.eigenfunctions[j], &truth.eigenfunctions[j]))
        })
        .collect();
    let record = ReplicationRecord {
        replication: 0,
        seed: 0,
        method,
        h_g: Some(bandwidths.h_g),
        h_mu: Some(bandwidths.h_mu),
        hs_error: Some(hs_distance(&fit.covariance, &truth.covariance)?),
        sup_error: Some(sup_distance(&fit.covariance, &truth.covariance)?),
        sigma_hat: Some(sigma_hat),
        eigenvalues: eigen.eigenvalues,
        eigenfunction_errors,
        remediated_nodes: fit.remediated_nodes(),
        error: None,
    };
    Ok((record, fit))
}

/// Runs the experiment, handing every successful fit to `observe`
/// (replication, method, fit) as it is produced.
pub fn run_experiment_with(
    cfg: &ExperimentConfig,
    mut observe: impl FnMut(usize, Method, &CovarianceFit),
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let grid = EvaluationGrid::uniform(cfg.grid_size)?;
    let truth = truth_for(cfg, &grid)?;
    let proc = cfg.process()?;
    let noise = NoiseModel::gaussian(cfg.sigma_noise)?;

    let mut records = Vec::with_capacity(cfg.replications * cfg.methods.len());
    for rep in 0..cfg.replications {
        let seed = cfg.replication_seed(rep);
        let sim = simulate_dataset(&proc, cfg.n, cfg.r, noise, seed);
        for &method in &cfg.methods {
            let outcome = sim.as_ref().map_err(|e| e.to_string()).and_then(|sim| {
                evaluate(cfg, &truth, &sim.dataset, &grid, method).map_err(|e| e.to_string())
            });
            let record = match outcome {
                Ok((mut record, fit)) => {
                    observe(rep, method, &fit);
                    record.replication = rep;
                    record.seed = seed;
                    record
                }
                Err(message) => ReplicationRecord {
                    replication: rep,
                    seed,
                    method,
                    h_g: None,
                    h_mu: None,
                    hs_error: None,
                    sup_error: None,
                    sigma_hat: None,
                    eigenvalues: Vec::new(),
                    eigenfunction_errors: Vec::new(),
                    remediated_nodes: 0,
                    error: Some(message),
                },
            };
            records.push(record);
        }
    }

    let summary = summarize(cfg, &records);
    Ok(ExperimentReport { config: cfg.clone(), truth_eigenvalues: truth.eigenvalues, records, summary })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_with(cfg, |_, _, _| {})
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub method: Method,
    pub bandwidth: f64,
    pub median_hs_error: f64,
    pub median_sup_error: f64,
    /// `median_hs_error / sqrt(ln n / n)`.
    pub hs_ratio: f64,
}

/// Repeats `template` for each `n` with both bandwidths set to
/// `(ln n / n)^{1/4}` and tabulates median errors against the
/// `sqrt(ln n / n)` rate.
pub fn rate_study(template: &ExperimentConfig, n_values: &[usize]) -> Result<Vec<RateRow>> {
    if n_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("n values must be strictly increasing".into()));
    }
    let mut rows = Vec::new();
    for &n in n_values {
        if n < 2 {
            return Err(Error::InvalidArgument("rate study needs n >= 2".into()));
        }
        let rate = (n as f64).ln() / n as f64;
        let h = rate.powf(0.25).min(1.0);
        let cfg = ExperimentConfig { n, bandwidth: BandwidthChoice::Fixed { h_g: h, h_mu: h }, ..template.clone() };
        let report = run_experiment(&cfg)?;
        for &method in &cfg.methods {
            let hs = report.median(method, "hs_error").unwrap_or(f64::NAN);
            let sup = report.median(method, "sup_error").unwrap_or(f64::NAN);
            rows.push(RateRow {
                n,
                method,
                bandwidth: h,
                median_hs_error: hs,
                median_sup_error: sup,
                hs_ratio: hs / rate.sqrt(),
            });
        }
    }
    Ok(rows)
}

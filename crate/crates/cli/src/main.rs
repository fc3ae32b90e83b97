use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use tricov::data::{read_dataset, read_matrix_csv, write_dataset, write_matrix_csv, write_mean_csv, SurfaceKind};
use tricov::experiments::{run_experiment_with, ExperimentConfig, FAST_REPLICATIONS};
use tricov::kernels::KernelConfig;
use tricov::simulate::{simulate_dataset, ProcessSpec};
use tricov::smoothers::{estimate_covariance, estimate_noise_variance, Bandwidths};
use tricov::spectral::eigendecompose;
use tricov::{EvaluationGrid, KernelFamily, Method, NoiseModel, SurfaceEstimate};

#[derive(Parser)]
#[command(name = "tricov", version, about = "Covariance estimation for rough functional data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a noisy, irregularly sampled dataset.
    Simulate {
        /// bm, bridge, ou, gbm, matern or example2
        #[arg(long)]
        process: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 0.2)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV; a JSON sidecar is written next to it.
        #[arg(long)]
        out: PathBuf,
        /// Ornstein-Uhlenbeck mean reversion rate.
        #[arg(long)]
        beta: Option<f64>,
        /// Matern length scale.
        #[arg(long)]
        rho: Option<f64>,
    },
    /// Estimate mean and covariance from a dataset CSV.
    Estimate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "triangle")]
        method: Method,
        #[arg(long, default_value = "exp")]
        kernel: KernelFamily,
        /// Covariance bandwidth; the default rule when omitted.
        #[arg(long)]
        h_g: Option<f64>,
        /// Mean bandwidth; the default rule when omitted.
        #[arg(long)]
        h_mu: Option<f64>,
        #[arg(long, default_value_t = tricov::data::DEFAULT_GRID_SIZE)]
        grid_size: usize,
        /// Writes <prefix>_mean.csv, <prefix>_cov.csv and <prefix>_meta.json.
        #[arg(long)]
        out_prefix: PathBuf,
    },
    /// Eigen-decompose a covariance matrix CSV.
    Spectrum {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a Monte-Carlo experiment from a JSON config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Also write every estimated covariance to <out-dir>/surfaces.
        #[arg(long)]
        dump_surfaces: bool,
        /// Run 20 replications instead of the configured count.
        #[arg(long)]
        fast: bool,
    },
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    process: &str,
    n: usize,
    r: usize,
    sigma: f64,
    seed: u64,
    out: &Path,
    beta: Option<f64>,
    rho: Option<f64>,
) -> Result<()> {
    let proc = ProcessSpec::from_name(process, beta, rho)?;
    let sim = simulate_dataset(&proc, n, r, NoiseModel::gaussian(sigma)?, seed)?;
    write_dataset(&sim.dataset, create(out)?)?;
    let meta = json!({
        "process": proc,
        "name": proc.name(),
        "n": n,
        "r": r,
        "sigma": sigma,
        "seed": seed,
        "design": "uniform_iid",
    });
    write_json(&out.with_extension("json"), &meta)
}

#[allow(clippy::too_many_arguments)]
fn estimate(
    input: &Path,
    method: Method,
    family: KernelFamily,
    h_g: Option<f64>,
    h_mu: Option<f64>,
    grid_size: usize,
    prefix: &Path,
) -> Result<()> {
    let file = File::open(input).with_context(|| format!("opening {}", input.display()))?;
    let ds = read_dataset(BufReader::new(file))?;
    let grid = EvaluationGrid::uniform(grid_size)?;
    let auto = Bandwidths::default_for(&ds, &grid);
    let bandwidths = Bandwidths { h_g: h_g.unwrap_or(auto.h_g), h_mu: h_mu.unwrap_or(auto.h_mu) };
    let kernel = KernelConfig { family, sigma_n: None };
    let fit = estimate_covariance(&ds, &kernel, bandwidths, &grid, method)?;
    let sigma_hat = estimate_noise_variance(&ds, &fit.mu_kernel, &fit.second_moment)?;

    write_mean_csv(&fit.mean, create(&with_suffix(prefix, "_mean.csv"))?)?;
    write_matrix_csv(&fit.covariance, create(&with_suffix(prefix, "_cov.csv"))?)?;
    let meta = json!({
        "method": method,
        "kernel": family,
        "sigma_n_g": fit.g_kernel.sigma_n,
        "sigma_n_mu": fit.mu_kernel.sigma_n,
        "h_g": bandwidths.h_g,
        "h_mu": bandwidths.h_mu,
        "grid_size": grid_size,
        "n_curves": ds.n_curves(),
        "n_observations": ds.n_observations(),
        "singular_nodes": fit.remediated_nodes(),
        "sigma_hat": sigma_hat,
    });
    write_json(&with_suffix(prefix, "_meta.json"), &meta)
}

fn spectrum(input: &Path, k: usize, out: &Path) -> Result<()> {
    let file = File::open(input).with_context(|| format!("opening {}", input.display()))?;
    let (grid, values) = read_matrix_csv(BufReader::new(file))?;
    let cov = SurfaceEstimate::matrix(grid, values, 1.0, SurfaceKind::Covariance);
    let eigen = eigendecompose(&cov, k)?;
    if eigen.negative_count() > 0 {
        eprintln!("warning: {} negative eigenvalue(s) retained", eigen.negative_count());
    }
    write_json(out, &serde_json::to_value(&eigen)?)
}

fn experiment(config: &Path, out_dir: &Path, dump_surfaces: bool, fast: bool) -> Result<ExitCode> {
    let text = std::fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let mut cfg: ExperimentConfig = serde_json::from_str(&text).context("parsing experiment config")?;
    if fast {
        cfg.replications = FAST_REPLICATIONS;
    }
    let surfaces = out_dir.join("surfaces");
    if dump_surfaces {
        std::fs::create_dir_all(&surfaces)?;
    }
    let mut dump_error = None;
    let report = run_experiment_with(&cfg, |rep, method, fit| {
        if dump_surfaces && dump_error.is_none() {
            let path = surfaces.join(format!("rep{rep:04}_{method}_cov.csv"));
            if let Err(e) = create(&path).and_then(|w| Ok(write_matrix_csv(&fit.covariance, w)?)) {
                dump_error = Some(e);
            }
        }
    })?;
    if let Some(e) = dump_error {
        return Err(e);
    }
    report.write_to_dir(out_dir)?;
    let failures = report.failures();
    if failures > 0 {
        eprintln!("{failures} of {} replication records failed", report.records.len());
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate { process, n, r, sigma, seed, out, beta, rho } => {
            simulate(&process, n, r, sigma, seed, &out, beta, rho)?
        }
        Command::Estimate { input, method, kernel, h_g, h_mu, grid_size, out_prefix } => {
            estimate(&input, method, kernel, h_g, h_mu, grid_size, &out_prefix)?
        }
        Command::Spectrum { input, k, out } => spectrum(&input, k, &out)?,
        Command::Experiment { config, out_dir, dump_surfaces, fast } => {
            return experiment(&config, &out_dir, dump_surfaces, fast)
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

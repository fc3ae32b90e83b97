//! Sampling designs, latent processes with known covariance, and additive
//! Gaussian measurement error.
//!
//! Every draw comes from a ChaCha stream keyed by `(seed, stage, curve)`, so
//! results do not depend on the order in which curves are generated.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{Curve, NoiseModel, SparseFunctionalDataset};
use crate::error::{Error, Result};

const STAGE_DESIGN: u64 = 1;
const STAGE_PATHS: u64 = 2;
const STAGE_NOISE: u64 = 3;

/// Variance of each random coefficient in the smooth three-component process.
pub const EXAMPLE2_COEF_VARIANCE: f64 = 0.2;

/// Jitter added to the diagonal, in order, when a custom covariance fails to
/// factor.
pub const CHOLESKY_JITTER: [f64; 3] = [1e-12, 1e-10, 1e-8];

pub(crate) fn stream_rng(seed: u64, stage: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((stage << 56) ^ index as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignLaw {
    /// Times i.i.d. Uniform[0, 1], sorted within each curve.
    #[default]
    UniformIid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub n: usize,
    pub r: usize,
    #[serde(default)]
    pub law: DesignLaw,
    pub seed: u64,
}

impl DesignSpec {
    pub fn uniform(n: usize, r: usize, seed: u64) -> Self {
        Self { n, r, law: DesignLaw::UniformIid, seed }
    }

    fn check(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidArgument("design needs n >= 1".into()));
        }
        if self.r < 2 {
            return Err(Error::InvalidArgument("design needs r >= 2".into()));
        }
        Ok(())
    }
}

/// Draws `n` sorted vectors of `r` observation times.
pub fn sample_design(spec: &DesignSpec) -> Result<Vec<Vec<f64>>> {
    spec.check()?;
    Ok((0..spec.n)
        .map(|i| {
            let mut rng = stream_rng(spec.seed, STAGE_DESIGN, i);
            let mut times: Vec<f64> = match spec.law {
                DesignLaw::UniformIid => (0..spec.r).map(|_| rng.gen::<f64>()).collect(),
            };
            times.sort_by(f64::total_cmp);
            times
        })
        .collect())
}

type CovFn = dyn Fn(f64, f64) -> f64 + Send + Sync;
type MeanFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A user-supplied covariance (and optional mean) sampled through Cholesky.
#[derive(Clone)]
pub struct CustomCovariance {
    pub name: String,
    covariance: Arc<CovFn>,
    mean: Option<Arc<MeanFn>>,
}

impl CustomCovariance {
    pub fn new(name: impl Into<String>, covariance: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), covariance: Arc::new(covariance), mean: None }
    }

    pub fn with_mean(mut self, mean: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.mean = Some(Arc::new(mean));
        self
    }
}

impl fmt::Debug for CustomCovariance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomCovariance").field("name", &self.name).finish_non_exhaustive()
    }
}

/// Catalog of latent processes with closed-form covariance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessSpec {
    BrownianMotion,
    BrownianBridge,
    OrnsteinUhlenbeck { beta: f64 },
    /// `exp(W(t))`, whose covariance is `e^{(s+t)/2} (e^{min(s,t)} - 1)`.
    GeometricBm,
    /// Stationary Matérn with smoothness 1/2: `exp(-|s - t| / rho)`.
    MaternHalf { rho: f64 },
    /// `5 (s - 0.6)^2 + Z_1 + Z_2 sin(2 pi s) + Z_3 g_3(s)`, `Z_j ~ N(0, 0.2)`.
    Example2,
    #[serde(skip)]
    CustomCovariance(CustomCovariance),
}

impl ProcessSpec {
    pub fn name(&self) -> String {
        match self {
            ProcessSpec::BrownianMotion => "brownian_motion".into(),
            ProcessSpec::BrownianBridge => "brownian_bridge".into(),
            ProcessSpec::OrnsteinUhlenbeck { .. } => "ornstein_uhlenbeck".into(),
            ProcessSpec::GeometricBm => "geometric_bm".into(),
            ProcessSpec::MaternHalf { .. } => "matern_half".into(),
            ProcessSpec::Example2 => "example2".into(),
            ProcessSpec::CustomCovariance(c) => format!("custom:{}", c.name),
        }
    }

    /// Builds a catalog entry from its name and the optional parameters.
    pub fn from_name(name: &str, beta: Option<f64>, rho: Option<f64>) -> Result<Self> {
        let spec = match name {
            "brownian_motion" | "bm" => ProcessSpec::BrownianMotion,
            "brownian_bridge" | "bridge" => ProcessSpec::BrownianBridge,
            "ornstein_uhlenbeck" | "ou" => ProcessSpec::OrnsteinUhlenbeck { beta: beta.unwrap_or(1.0) },
            "geometric_bm" | "gbm" => ProcessSpec::GeometricBm,
            "matern_half" | "matern" => ProcessSpec::MaternHalf { rho: rho.unwrap_or(5.0) },
            "example2" => ProcessSpec::Example2,
            other => return Err(Error::InvalidArgument(format!("unknown process `{other}`"))),
        };
        spec.check()?;
        Ok(spec)
    }

    pub fn check(&self) -> Result<()> {
        match *self {
            ProcessSpec::OrnsteinUhlenbeck { beta } if !(beta > 0.0 && beta.is_finite()) => {
                Err(Error::InvalidArgument(format!("OU drift must be > 0, got {beta}")))
            }
            ProcessSpec::MaternHalf { rho } if !(rho > 0.0 && rho.is_finite()) => {
                Err(Error::InvalidArgument(format!("Matérn range must be > 0, got {rho}")))
            }
            _ => Ok(()),
        }
    }

    pub fn is_gaussian(&self) -> bool {
        !matches!(self, ProcessSpec::GeometricBm)
    }
}

/// Third basis function of the smooth example: a piecewise cubic with knots
/// at 1/4, 1/2, 3/4 (a scaled four-fold convolution of the indicator of
/// `[0, 1/4]`), twice continuously differentiable.
pub fn eval_g3(s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidArgument(format!("g3 is defined on [0, 1], got {s}")));
    }
    Ok(g3(s))
}

pub(crate) fn g3(s: f64) -> f64 {
    let cube = |x: f64| x * x * x;
    let mut v = cube(s);
    if s >= 0.25 {
        v -= 4.0 * cube(s - 0.25);
    }
    if s >= 0.5 {
        v += 6.0 * cube(s - 0.5);
    }
    if s >= 0.75 {
        v -= 4.0 * cube(s - 0.75);
    }
    v
}

/// `[g_1(s), g_2(s), g_3(s)] = [1, sin(2 pi s), g_3(s)]`.
pub fn example2_basis(s: f64) -> [f64; 3] {
    [1.0, (2.0 * PI * s).sin(), g3(s)]
}

pub fn example2_mean(s: f64) -> f64 {
    5.0 * (s - 0.6) * (s - 0.6)
}

pub fn analytic_mean(proc: &ProcessSpec, s: f64) -> f64 {
    match proc {
        ProcessSpec::GeometricBm => (0.5 * s).exp(),
        ProcessSpec::Example2 => example2_mean(s),
        ProcessSpec::CustomCovariance(c) => c.mean.as_ref().map_or(0.0, |m| m(s)),
        _ => 0.0,
    }
}

pub fn analytic_covariance(proc: &ProcessSpec, s: f64, t: f64) -> f64 {
    let lo = s.min(t);
    match proc {
        ProcessSpec::BrownianMotion => lo,
        ProcessSpec::BrownianBridge => lo - s * t,
        ProcessSpec::OrnsteinUhlenbeck { beta } => {
            (-beta * (s + t)).exp() * ((2.0 * beta * lo).exp() - 1.0) / (2.0 * beta)
        }
        ProcessSpec::GeometricBm => (0.5 * (s + t)).exp() * (lo.exp() - 1.0),
        ProcessSpec::MaternHalf { rho } => (-(s - t).abs() / rho).exp(),
        ProcessSpec::Example2 => {
            let (a, b) = (example2_basis(s), example2_basis(t));
            EXAMPLE2_COEF_VARIANCE * (a[0] * b[0] + a[1] * b[1] + a[2] * b[2])
        }
        ProcessSpec::CustomCovariance(c) => (c.covariance)(s, t),
    }
}

/// Values `X_i(T_ij)` of independent latent paths at the design times.
pub fn simulate_paths(proc: &ProcessSpec, design: &[Vec<f64>], seed: u64) -> Result<Vec<Vec<f64>>> {
    proc.check()?;
    design
        .iter()
        .enumerate()
        .map(|(i, times)| {
            let mut rng = stream_rng(seed, STAGE_PATHS, i);
            simulate_curve(proc, times, &mut rng)
        })
        .collect()
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Brownian motion at sorted times, started from `W(0) = 0`.
fn brownian(times: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut w = 0.0;
    let mut prev = 0.0;
    times
        .iter()
        .map(|&t| {
            w += (t - prev).max(0.0).sqrt() * normal(rng);
            prev = t;
            w
        })
        .collect()
}

fn simulate_curve(proc: &ProcessSpec, times: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("design times must be sorted".into()));
    }
    Ok(match proc {
        ProcessSpec::BrownianMotion => brownian(times, rng),
        ProcessSpec::BrownianBridge => {
            let mut w = brownian(times, rng);
            let last = times.last().copied().unwrap_or(0.0);
            let w_last = w.last().copied().unwrap_or(0.0);
            let w1 = w_last + (1.0 - last).max(0.0).sqrt() * normal(rng);
            for (x, &t) in w.iter_mut().zip(times) {
                *x -= t * w1;
            }
            w
        }
        ProcessSpec::OrnsteinUhlenbeck { beta } => {
            let mut x = 0.0;
            let mut prev = 0.0;
            times
                .iter()
                .map(|&t| {
                    let decay = (-beta * (t - prev)).exp();
                    let sd = ((1.0 - decay * decay) / (2.0 * beta)).sqrt();
                    x = decay * x + sd * normal(rng);
                    prev = t;
                    x
                })
                .collect()
        }
        ProcessSpec::GeometricBm => brownian(times, rng).into_iter().map(f64::exp).collect(),
        ProcessSpec::MaternHalf { rho } => {
            let mut x = 0.0;
            let mut prev: Option<f64> = None;
            times
                .iter()
                .map(|&t| {
                    x = match prev {
                        None => normal(rng),
                        Some(p) => {
                            let decay = (-(t - p) / rho).exp();
                            decay * x + (1.0 - decay * decay).sqrt() * normal(rng)
                        }
                    };
                    prev = Some(t);
                    x
                })
                .collect()
        }
        ProcessSpec::Example2 => {
            let sd = EXAMPLE2_COEF_VARIANCE.sqrt();
            let z = [sd * normal(rng), sd * normal(rng), sd * normal(rng)];
            times
                .iter()
                .map(|&t| {
                    let g = example2_basis(t);
                    example2_mean(t) + z[0] * g[0] + z[1] * g[1] + z[2] * g[2]
                })
                .collect()
        }
        ProcessSpec::CustomCovariance(c) => {
            let m = times.len();
            let cov = DMatrix::from_fn(m, m, |a, b| (c.covariance)(times[a], times[b]));
            let chol = cholesky_with_jitter(cov)?;
            let z = DVector::from_fn(m, |_, _| normal(rng));
            let x = chol.l() * z;
            times
                .iter()
                .zip(x.iter())
                .map(|(&t, &v)| v + c.mean.as_ref().map_or(0.0, |mu| mu(t)))
                .collect()
        }
    })
}

/// Cholesky factorisation, retrying with the [`CHOLESKY_JITTER`] ladder.
pub fn cholesky_with_jitter(cov: DMatrix<f64>) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    if let Some(chol) = Cholesky::new(cov.clone()) {
        return Ok(chol);
    }
    for jitter in CHOLESKY_JITTER {
        let mut jittered = cov.clone();
        for i in 0..jittered.nrows() {
            jittered[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(jittered) {
            return Ok(chol);
        }
    }
    let min_diag = (0..cov.nrows()).map(|i| cov[(i, i)]).fold(f64::INFINITY, f64::min);
    let asym = (0..cov.nrows())
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .map(|(i, j)| (cov[(i, j)] - cov[(j, i)]).abs())
        .fold(0.0, f64::max);
    Err(Error::Numerical(format!(
        "covariance of size {} is not positive definite after jitter {:e}: \
         smallest diagonal entry {min_diag:e}, max asymmetry {asym:e}",
        cov.nrows(),
        CHOLESKY_JITTER[CHOLESKY_JITTER.len() - 1]
    )))
}

/// `Y_ij = X_ij + U_ij` with `U_ij ~ N(0, sigma^2)` i.i.d.
pub fn add_noise(
    design: &[Vec<f64>],
    latent: &[Vec<f64>],
    noise: NoiseModel,
    seed: u64,
) -> Result<SparseFunctionalDataset> {
    if design.len() != latent.len() {
        return Err(Error::InvalidArgument(format!(
            "{} time vectors but {} latent curves",
            design.len(),
            latent.len()
        )));
    }
    NoiseModel::gaussian(noise.std_dev)?;
    let curves = design
        .iter()
        .zip(latent)
        .enumerate()
        .map(|(i, (times, values))| {
            if times.len() != values.len() {
                return Err(Error::InvalidArgument(format!("curve {i}: times/values length mismatch")));
            }
            let values = if noise.std_dev == 0.0 {
                values.clone()
            } else {
                let mut rng = stream_rng(seed, STAGE_NOISE, i);
                values.iter().map(|&x| x + noise.std_dev * normal(&mut rng)).collect()
            };
            Ok(Curve::new(times.clone(), values))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SparseFunctionalDataset::new(curves))
}

/// A simulated dataset together with its noiseless values.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub dataset: SparseFunctionalDataset,
    pub latent: Vec<Vec<f64>>,
}

/// Design, paths and noise from one seed (each stage on its own stream).
pub fn simulate_dataset(proc: &ProcessSpec, n: usize, r: usize, noise: NoiseModel, seed: u64) -> Result<Simulation> {
    let design = sample_design(&DesignSpec::uniform(n, r, seed))?;
    let latent = simulate_paths(proc, &design, seed)?;
    let dataset = add_noise(&design, &latent, noise, seed)?;
    Ok(Simulation { dataset, latent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::validate_dataset;

    #[test]
    fn design_sorted_and_deterministic() {
        let spec = DesignSpec::uniform(1, 3, 42);
        let a = sample_design(&spec).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].len(), 3);
        assert!(a[0].windows(2).all(|w| w[0] <= w[1]));
        assert!(a[0].iter().all(|t| (0.0..=1.0).contains(t)));
        assert_eq!(a, sample_design(&spec).unwrap());
        assert_ne!(a, sample_design(&DesignSpec::uniform(1, 3, 43)).unwrap());
        assert!(sample_design(&DesignSpec::uniform(0, 3, 1)).is_err());
        assert!(sample_design(&DesignSpec::uniform(3, 1, 1)).is_err());
    }

    #[test]
    fn design_is_uniform() {
        let design = sample_design(&DesignSpec::uniform(10_000, 5, 7)).unwrap();
        let total = 50_000.0;
        let inside = design.iter().flatten().filter(|&&t| (0.2..=0.3).contains(&t)).count() as f64;
        assert!((inside / total - 0.1).abs() < 0.01, "{}", inside / total);
    }

    #[test]
    fn covariance_values() {
        assert_eq!(analytic_covariance(&ProcessSpec::BrownianMotion, 0.3, 0.7), 0.3);
        assert_eq!(analytic_covariance(&ProcessSpec::BrownianBridge, 0.5, 0.5), 0.25);
        assert!((analytic_covariance(&ProcessSpec::Example2, 0.0, 0.0) - 0.2).abs() < 1e-15);
        let c = analytic_covariance(&ProcessSpec::MaternHalf { rho: 5.0 }, 0.1, 0.6);
        assert!((c - (-0.1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn gbm_covariance_matches_second_moment_identity() {
        // E[e^{W(s)} e^{W(t)}] = e^{(s + t + 2 min) / 2}, E[e^{W(t)}] = e^{t/2}.
        let proc = ProcessSpec::GeometricBm;
        for &(s, t) in &[(0.3, 0.7), (0.9, 0.2), (0.5, 0.5)] {
            let second = ((s + t + 2.0 * f64::min(s, t)) / 2.0).exp();
            let cov = second - analytic_mean(&proc, s) * analytic_mean(&proc, t);
            assert!((cov - analytic_covariance(&proc, s, t)).abs() < 1e-14);
        }
    }

    #[test]
    fn g3_values_and_smoothness() {
        assert_eq!(eval_g3(0.0).unwrap(), 0.0);
        assert_eq!(eval_g3(0.25).unwrap(), 0.015625);
        assert!(eval_g3(1.0).unwrap().abs() < 1e-15);
        assert!(eval_g3(1.1).is_err());
        assert!(eval_g3(-0.1).is_err());

        let step = 1e-4;
        for knot in [0.25, 0.5, 0.75] {
            let left1 = (g3(knot) - g3(knot - step)) / step;
            let right1 = (g3(knot + step) - g3(knot)) / step;
            assert!((left1 - right1).abs() < 10.0 * step, "first derivative jump at {knot}");
            let left2 = (g3(knot) - 2.0 * g3(knot - step) + g3(knot - 2.0 * step)) / (step * step);
            let right2 = (g3(knot + 2.0 * step) - 2.0 * g3(knot + step) + g3(knot)) / (step * step);
            assert!((left2 - right2).abs() < 100.0 * step, "second derivative jump at {knot}");
        }
    }

    #[test]
    fn example2_with_zero_coefficients_is_the_mean() {
        assert_eq!(example2_mean(0.6), 0.0);
        assert!((example2_mean(0.0) - 1.8).abs() < 1e-15);
    }

    fn monte_carlo_cov(proc: &ProcessSpec, times: &[f64], reps: usize) -> DMatrix<f64> {
        let design = vec![times.to_vec(); reps];
        let paths = simulate_paths(proc, &design, 11).unwrap();
        let m = times.len();
        let mut mean = vec![0.0; m];
        for p in &paths {
            for (a, v) in mean.iter_mut().zip(p) {
                *a += v / reps as f64;
            }
        }
        DMatrix::from_fn(m, m, |a, b| {
            paths.iter().map(|p| (p[a] - mean[a]) * (p[b] - mean[b])).sum::<f64>() / (reps - 1) as f64
        })
    }

    #[test]
    fn brownian_variance() {
        let times = [0.1, 0.4, 0.8];
        let cov = monte_carlo_cov(&ProcessSpec::BrownianMotion, &times, 100_000);
        for (i, &t) in times.iter().enumerate() {
            assert!((cov[(i, i)] / t - 1.0).abs() < 0.02, "Var X({t}) = {}", cov[(i, i)]);
        }
    }

    #[test]
    fn ou_covariance() {
        let times = [0.3, 0.8];
        let cov = monte_carlo_cov(&ProcessSpec::OrnsteinUhlenbeck { beta: 1.0 }, &times, 100_000);
        let (t, s) = (0.3f64, 0.8f64);
        let expected = (-(t + s)).exp() * ((2.0 * t).exp() - 1.0) / 2.0;
        assert!((cov[(1, 0)] / expected - 1.0).abs() < 0.03, "{} vs {expected}", cov[(1, 0)]);
    }

    #[test]
    fn gaussian_processes_match_analytic_covariance() {
        let times: Vec<f64> = (0..6).map(|i| i as f64 / 5.0).collect();
        let custom = CustomCovariance::new("sq-exp", |s, t| (-(s - t) * (s - t) / 0.1).exp());
        let procs = [
            ProcessSpec::BrownianMotion,
            ProcessSpec::BrownianBridge,
            ProcessSpec::OrnsteinUhlenbeck { beta: 2.0 },
            ProcessSpec::MaternHalf { rho: 0.5 },
            ProcessSpec::Example2,
            ProcessSpec::CustomCovariance(custom),
        ];
        for proc in &procs {
            let cov = monte_carlo_cov(proc, &times, 100_000);
            let truth = DMatrix::from_fn(6, 6, |a, b| analytic_covariance(proc, times[a], times[b]));
            let scale = truth.amax();
            let err = (&cov - &truth).amax();
            assert!(err < 0.05 * scale, "{}: {err} vs scale {scale}", proc.name());
        }
    }

    #[test]
    fn custom_non_psd_fails_with_diagnostic() {
        let bad = CustomCovariance::new("bad", |s, t| if s == t { 1.0 } else { -1.0 });
        let design = vec![vec![0.1, 0.5, 0.9]];
        let err = simulate_paths(&ProcessSpec::CustomCovariance(bad), &design, 1).unwrap_err();
        assert!(matches!(err, Error::Numerical(ref m) if m.contains("positive definite")), "{err}");
    }

    #[test]
    fn custom_near_singular_uses_jitter() {
        // rank one: min eigenvalue 0
        let flat = CustomCovariance::new("flat", |_, _| 1.0);
        let design = vec![vec![0.1, 0.5, 0.9]];
        let x = simulate_paths(&ProcessSpec::CustomCovariance(flat), &design, 1).unwrap();
        assert!((x[0][0] - x[0][2]).abs() < 1e-3);
    }

    #[test]
    fn noise_behaviour() {
        let design = sample_design(&DesignSpec::uniform(10_000, 10, 3)).unwrap();
        let latent = simulate_paths(&ProcessSpec::BrownianMotion, &design, 3).unwrap();

        let clean = add_noise(&design, &latent, NoiseModel::gaussian(0.0).unwrap(), 9).unwrap();
        for (c, l) in clean.curves().iter().zip(&latent) {
            assert_eq!(&c.values, l);
        }

        let noisy = add_noise(&design, &latent, NoiseModel::gaussian(0.5).unwrap(), 9).unwrap();
        let resid: Vec<Vec<f64>> = noisy
            .curves()
            .iter()
            .zip(&latent)
            .map(|(c, l)| c.values.iter().zip(l).map(|(y, x)| y - x).collect())
            .collect();
        let all: Vec<f64> = resid.iter().flatten().copied().collect();
        let mean = all.iter().sum::<f64>() / all.len() as f64;
        let sd = (all.iter().map(|u| (u - mean).powi(2)).sum::<f64>() / (all.len() - 1) as f64).sqrt();
        assert!((sd / 0.5 - 1.0).abs() < 0.01, "{sd}");

        let (a, b): (Vec<f64>, Vec<f64>) = resid.iter().map(|u| (u[2], u[7])).unzip();
        let corr = correlation(&a, &b);
        assert!(corr.abs() < 0.02, "{corr}");
    }

    fn correlation(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn simulated_datasets_validate() {
        let procs = [
            ProcessSpec::BrownianMotion,
            ProcessSpec::BrownianBridge,
            ProcessSpec::OrnsteinUhlenbeck { beta: 1.0 },
            ProcessSpec::GeometricBm,
            ProcessSpec::MaternHalf { rho: 5.0 },
            ProcessSpec::Example2,
        ];
        for seed in 0..20 {
            for proc in &procs {
                let sim = simulate_dataset(proc, 5, 4, NoiseModel::gaussian(0.2).unwrap(), seed).unwrap();
                assert!(validate_dataset(&sim.dataset).is_ok());
                let again = simulate_dataset(proc, 5, 4, NoiseModel::gaussian(0.2).unwrap(), seed).unwrap();
                assert_eq!(sim.dataset, again.dataset);
            }
        }
    }

    #[test]
    fn process_parsing() {
        assert!(matches!(
            ProcessSpec::from_name("ornstein_uhlenbeck", Some(2.0), None).unwrap(),
            ProcessSpec::OrnsteinUhlenbeck { beta } if beta == 2.0
        ));
        assert!(ProcessSpec::from_name("ou", Some(-1.0), None).is_err());
        assert!(ProcessSpec::from_name("matern", None, Some(0.0)).is_err());
        assert!(ProcessSpec::from_name("levy", None, None).is_err());
        let json = serde_json::to_string(&ProcessSpec::MaternHalf { rho: 2.0 }).unwrap();
        assert_eq!(json, r#"{"kind":"matern_half","rho":2.0}"#);
    }
}

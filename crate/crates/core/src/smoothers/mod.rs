//! Mean, second-moment and covariance smoothers.
//!
//! The reflected-triangle estimator smooths only the cross-products lying
//! strictly below the diagonal, evaluates the fit on the closed lower
//! triangle and mirrors it. Diagonal products `Y_ij^2` carry the measurement
//! error variance and are excluded by both methods; the square method also
//! smooths across the diagonal, which blurs the ridge of rough covariances.

mod bandwidth;
mod local;
mod mean;
mod pairs;
mod surface;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{EvaluationGrid, SparseFunctionalDataset, SurfaceEstimate, SurfaceKind};
use crate::error::{Error, Result};
use crate::kernels::{KernelConfig, KernelSpec};

pub use bandwidth::{default_bandwidth, select_bandwidth_cv, CvResult, CV_CANDIDATES, CV_FOLDS, CV_MAX_BANDWIDTH};
pub use local::{fit_second_moment_at, fit_via_determinant_representation, LocalFit, RIDGE, SINGULAR_TOLERANCE};
pub use mean::estimate_mean;
pub use pairs::{build_pairs, PairRestriction, RawPair, RawPairSet};
pub use surface::{estimate_surface_g, MAX_BANDWIDTH_DOUBLINGS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Reflected triangle.
    Triangle,
    /// Classical full-square smoother.
    Square,
}

impl Method {
    pub fn restriction(self) -> PairRestriction {
        match self {
            Method::Triangle => PairRestriction::LowerTriangleStrict,
            Method::Square => PairRestriction::OffDiagonal,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Triangle => "triangle",
            Method::Square => "square",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "triangle" => Ok(Method::Triangle),
            "square" => Ok(Method::Square),
            other => Err(Error::InvalidArgument(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bandwidths {
    pub h_g: f64,
    pub h_mu: f64,
}

impl Bandwidths {
    pub fn equal(h: f64) -> Self {
        Self { h_g: h, h_mu: h }
    }

    /// Default rule for both bandwidths (see [`default_bandwidth`]).
    pub fn default_for(ds: &SparseFunctionalDataset, grid: &EvaluationGrid) -> Self {
        Self::equal(default_bandwidth(ds.n_curves(), ds.mean_observations_per_curve(), grid.len()))
    }
}

/// Mean, second moment and covariance from one run of the smoothers.
#[derive(Debug, Clone)]
pub struct CovarianceFit {
    pub mean: SurfaceEstimate,
    pub second_moment: SurfaceEstimate,
    pub covariance: SurfaceEstimate,
    pub g_kernel: KernelSpec,
    pub mu_kernel: KernelSpec,
}

impl CovarianceFit {
    pub fn remediated_nodes(&self) -> usize {
        self.mean.remediated_nodes + self.second_moment.remediated_nodes
    }
}

/// `C(s, t) = G(s, t) - mu(s) mu(t)` on the grid of `g`.
pub fn covariance_from_parts(g: &SurfaceEstimate, mean: &[f64]) -> Result<SurfaceEstimate> {
    let m = g.size();
    if !g.is_matrix() || mean.len() != m {
        return Err(Error::InvalidArgument("mean length must match the surface grid".into()));
    }
    let values = (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| g.get(i, j) - mean[i] * mean[j])
        .collect();
    let mut c = SurfaceEstimate::matrix(g.grid.clone(), values, g.bandwidth, SurfaceKind::Covariance);
    c.remediated_nodes = g.remediated_nodes;
    Ok(c)
}

/// Runs the mean and second-moment smoothers and combines them.
pub fn estimate_covariance(
    ds: &SparseFunctionalDataset,
    kernel: &KernelConfig,
    bandwidths: Bandwidths,
    grid: &EvaluationGrid,
    method: Method,
) -> Result<CovarianceFit> {
    let g_kernel = kernel.at_bandwidth(bandwidths.h_g)?;
    let mu_kernel = kernel.at_bandwidth(bandwidths.h_mu)?;
    let mean = estimate_mean(ds, &mu_kernel, grid)?;
    let second_moment = estimate_surface_g(ds, &g_kernel, grid, method)?;
    let covariance = covariance_from_parts(&second_moment, &mean.values)?;
    Ok(CovarianceFit { mean, second_moment, covariance, g_kernel, mu_kernel })
}

/// Noise standard deviation from the gap between a smooth of the squared
/// observations (which include the error variance) and the diagonal of the
/// second-moment estimate: `sigma^2 = max(0, int (V(t) - G(t, t)) dt)`,
/// trapezoid rule on the grid of `g_hat`.
pub fn estimate_noise_variance(ds: &SparseFunctionalDataset, mu_kernel: &KernelSpec, g_hat: &SurfaceEstimate) -> Result<f64> {
    if g_hat.kind != SurfaceKind::SecondMoment {
        return Err(Error::InvalidArgument("noise variance needs a second-moment surface".into()));
    }
    crate::data::validate_dataset(ds).into_result()?;
    let pooled = mean::Pooled::new(ds);
    let squares: Vec<f64> = ds.curves().iter().flat_map(|c| c.values.iter().map(|y| y * y)).collect();
    let v_hat = mean::smooth_on_grid(&pooled, &squares, mu_kernel, &g_hat.grid)?;
    let gap: Vec<f64> = v_hat.values.iter().zip(g_hat.diagonal()).map(|(v, g)| v - g).collect();
    let dx = g_hat.grid.spacing();
    let integral: f64 = gap.windows(2).map(|w| 0.5 * dx * (w[0] + w[1])).sum();
    Ok(integral.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Curve;
    use crate::kernels::KernelFamily;

    fn design(n: usize, r: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| (0..r).map(|j| ((j as f64 + 0.5) / r as f64 + 0.013 * i as f64) % 1.0).collect::<Vec<_>>())
            .map(|mut t| {
                t.sort_by(f64::total_cmp);
                t
            })
            .collect()
    }

    fn dataset(f: impl Fn(usize, f64) -> f64) -> SparseFunctionalDataset {
        let curves = design(12, 6)
            .into_iter()
            .enumerate()
            .map(|(i, t)| {
                let v = t.iter().map(|&x| f(i, x)).collect();
                Curve::new(t, v)
            })
            .collect();
        SparseFunctionalDataset::validated(curves).unwrap()
    }

    fn exp_spec(h: f64) -> KernelSpec {
        KernelSpec::scheduled(KernelFamily::ExpSequence, h).unwrap()
    }

    #[test]
    fn mean_recovers_constants_and_lines() {
        let grid = EvaluationGrid::uniform(11).unwrap();
        let c = estimate_mean(&dataset(|_, _| 2.5), &exp_spec(0.2), &grid).unwrap();
        assert!(c.values.iter().all(|v| (v - 2.5).abs() < 1e-10));
        let l = estimate_mean(&dataset(|_, t| 1.0 - 3.0 * t), &exp_spec(0.2), &grid).unwrap();
        for (v, s) in l.values.iter().zip(grid.points()) {
            assert!((v - (1.0 - 3.0 * s)).abs() < 1e-8);
        }
    }

    #[test]
    fn constant_process_gives_constant_surface() {
        let grid = EvaluationGrid::uniform(9).unwrap();
        for method in [Method::Triangle, Method::Square] {
            let g = estimate_surface_g(&dataset(|_, _| 1.0), &exp_spec(0.3), &grid, method).unwrap();
            assert!(g.values.iter().all(|v| (v - 1.0).abs() < 1e-8), "{method}");
            assert!(g.is_exactly_symmetric());
        }
    }

    #[test]
    fn covariance_of_zero_mean_parts() {
        let grid = EvaluationGrid::uniform(5).unwrap();
        let g = estimate_surface_g(&dataset(|i, t| (i as f64 - 5.5) * t), &exp_spec(0.3), &grid, Method::Triangle).unwrap();
        let c = covariance_from_parts(&g, &[0.0; 5]).unwrap();
        assert_eq!(c.values, g.values);
        assert_eq!(c.kind, SurfaceKind::Covariance);
        assert!(covariance_from_parts(&g, &[0.0; 4]).is_err());
    }

    #[test]
    fn noise_estimate_clamps_at_zero() {
        let ds = dataset(|i, t| (i as f64 - 5.5) * t);
        let grid = EvaluationGrid::uniform(5).unwrap();
        let spec = exp_spec(0.3);
        let mut g = estimate_surface_g(&ds, &spec, &grid, Method::Triangle).unwrap();
        for v in g.values.iter_mut() {
            *v += 100.0;
        }
        assert_eq!(estimate_noise_variance(&ds, &spec, &g).unwrap(), 0.0);
        let mean = estimate_mean(&ds, &spec, &grid).unwrap();
        assert!(estimate_noise_variance(&ds, &spec, &mean).is_err());
    }

    #[test]
    fn method_parsing() {
        assert_eq!("triangle".parse::<Method>().unwrap(), Method::Triangle);
        assert!("circle".parse::<Method>().is_err());
        assert_eq!(serde_json::to_string(&Method::Square).unwrap(), "\"square\"");
    }
}

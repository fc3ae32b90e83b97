use serde::{Deserialize, Serialize};

use crate::data::{EvaluationGrid, SparseFunctionalDataset, SurfaceEstimate};
use crate::error::{Error, Result};
use crate::kernels::KernelConfig;

use super::pairs::build_pairs;
use super::surface::estimate_surface_g;
use super::Method;

pub const CV_FOLDS: usize = 5;
pub const CV_CANDIDATES: usize = 10;
const MAX_BANDWIDTH: f64 = 0.5;
/// Upper end of the cross-validation search.
pub const CV_MAX_BANDWIDTH: f64 = 1.0;

fn bandwidth_floor(mean_r: f64, grid_size: usize) -> f64 {
    let inv_r = if mean_r > 0.0 { 1.0 / mean_r } else { 1.0 };
    (1.0 / grid_size as f64).max(inv_r)
}

/// `(ln n / n)^{1/4}` clamped to `[max(1/M, 1/r_mean), 0.5]`.
pub fn default_bandwidth(n: usize, mean_r: f64, grid_size: usize) -> f64 {
    let n = n.max(1) as f64;
    let rate = (n.ln() / n).max(0.0).powf(0.25);
    let floor = bandwidth_floor(mean_r, grid_size);
    rate.max(floor).min(MAX_BANDWIDTH.max(floor))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub bandwidth: f64,
    pub candidates: Vec<f64>,
    pub scores: Vec<f64>,
}

/// Bilinear interpolation of a matrix surface at `(s, t)`.
fn interpolate(surface: &SurfaceEstimate, s: f64, t: f64) -> f64 {
    let m = surface.size();
    let dx = surface.grid.spacing();
    let locate = |x: f64| {
        let pos = (x / dx).clamp(0.0, (m - 1) as f64);
        let i = (pos.floor() as usize).min(m - 2);
        (i, pos - i as f64)
    };
    let (i, fs) = locate(s);
    let (j, ft) = locate(t);
    let v = |a: usize, b: usize| surface.get(a, b);
    (1.0 - fs) * ((1.0 - ft) * v(i, j) + ft * v(i, j + 1)) + fs * ((1.0 - ft) * v(i + 1, j) + ft * v(i + 1, j + 1))
}

/// Curve-wise `CV_FOLDS`-fold cross-validation over `CV_CANDIDATES`
/// log-spaced bandwidths between the default floor and `CV_MAX_BANDWIDTH`. The score is the
/// weighted squared error of held-out raw cross-products against the
/// interpolated training surface. Curve `i` goes to fold `i % CV_FOLDS`.
pub fn select_bandwidth_cv(
    ds: &SparseFunctionalDataset,
    kernel: &KernelConfig,
    grid: &EvaluationGrid,
    method: Method,
) -> Result<CvResult> {
    let n = ds.n_curves();
    if n < CV_FOLDS {
        return Err(Error::InvalidArgument(format!(
            "cross-validation needs at least {CV_FOLDS} curves, got {n}"
        )));
    }
    let lo = bandwidth_floor(ds.mean_observations_per_curve(), grid.len()).min(CV_MAX_BANDWIDTH);
    let candidates: Vec<f64> = (0..CV_CANDIDATES)
        .map(|k| {
            let frac = k as f64 / (CV_CANDIDATES - 1) as f64;
            (lo.ln() + frac * (CV_MAX_BANDWIDTH.ln() - lo.ln())).exp()
        })
        .collect();

    let folds: Vec<(SparseFunctionalDataset, SparseFunctionalDataset)> = (0..CV_FOLDS)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|i| i % CV_FOLDS == f);
            (ds.select(&train), ds.select(&test))
        })
        .collect();

    let mut scores = Vec::with_capacity(candidates.len());
    for &h in &candidates {
        let spec = kernel.at_bandwidth(h)?;
        let mut score = 0.0;
        for (train, test) in &folds {
            let surface = estimate_surface_g(train, &spec, grid, method)?;
            let held_out = build_pairs(test, method.restriction());
            score += held_out
                .entries
                .iter()
                .map(|p| p.weight * (p.product - interpolate(&surface, p.point.0, p.point.1)).powi(2))
                .sum::<f64>();
        }
        scores.push(score / n as f64);
    }
    let best = scores
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("at least one candidate");
    Ok(CvResult { bandwidth: candidates[best], candidates, scores })
}

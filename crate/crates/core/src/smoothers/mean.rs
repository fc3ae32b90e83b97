use crate::data::{EvaluationGrid, SparseFunctionalDataset, SurfaceEstimate};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::linalg::{solve_symmetric, trace};

use super::local::{RIDGE, SINGULAR_TOLERANCE};
use super::surface::MAX_BANDWIDTH_DOUBLINGS;

/// Pooled observations with curve-equal weights `1 / (n r_i)`.
pub(crate) struct Pooled {
    times: Vec<f64>,
    weights: Vec<f64>,
}

impl Pooled {
    pub fn new(ds: &SparseFunctionalDataset) -> Self {
        let n = ds.n_curves() as f64;
        let mut times = Vec::with_capacity(ds.n_observations());
        let mut weights = Vec::with_capacity(ds.n_observations());
        for c in ds.curves() {
            let w = 1.0 / (n * c.len() as f64);
            times.extend_from_slice(&c.times);
            weights.extend(std::iter::repeat_n(w, c.len()));
        }
        Self { times, weights }
    }

    fn moments(&self, responses: &[f64], spec: &KernelSpec, s: f64) -> ([[f64; 2]; 2], [f64; 2]) {
        let (mut a0, mut a1, mut a2, mut s0, mut s1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for ((&t, &w), &y) in self.times.iter().zip(&self.weights).zip(responses) {
            let u = (t - s) / spec.h;
            let k = w * spec.eval(u);
            a0 += k;
            a1 += k * u;
            a2 += k * u * u;
            s0 += k * y;
            s1 += k * u * y;
        }
        ([[a0, a1], [a1, a2]], [s0, s1])
    }

    /// Local-linear intercept `(S0 A2 - S1 A1) / (A0 A2 - A1^2)` at `s`, with
    /// the ridge / bandwidth-doubling fallback. The flag reports whether the
    /// fallback was needed.
    pub fn fit_at(&self, responses: &[f64], spec: &KernelSpec, s: f64) -> Result<(f64, bool)> {
        let mut current = *spec;
        for attempt in 0..=MAX_BANDWIDTH_DOUBLINGS {
            if attempt > 0 {
                current = current.with_bandwidth((2.0 * current.h).min(1.0))?;
            }
            let (a, rhs) = self.moments(responses, &current, s);
            for ridge in [0.0, RIDGE] {
                if let Some(v) = solve_intercept(a, rhs, ridge) {
                    return Ok((v, attempt > 0 || ridge > 0.0));
                }
            }
        }
        Err(Error::SingularFit { s, t: s, pivot: 0.0 })
    }
}

fn solve_intercept(mut a: [[f64; 2]; 2], rhs: [f64; 2], ridge: f64) -> Option<f64> {
    let tr = trace(&a);
    if !(tr > 0.0 && tr.is_finite()) {
        return None;
    }
    a[0][0] += ridge * tr;
    a[1][1] += ridge * tr;
    let (_, pivot) = solve_symmetric(&a, &rhs);
    if !(pivot > SINGULAR_TOLERANCE * tr) {
        return None;
    }
    let (a0, a1, a2) = (a[0][0], a[0][1], a[1][1]);
    let v = (rhs[0] * a2 - rhs[1] * a1) / (a0 * a2 - a1 * a1);
    v.is_finite().then_some(v)
}

/// Local-linear estimate of the mean function; `spec.h` is the mean
/// bandwidth.
pub fn estimate_mean(ds: &SparseFunctionalDataset, spec: &KernelSpec, grid: &EvaluationGrid) -> Result<SurfaceEstimate> {
    crate::data::validate_dataset(ds).into_result()?;
    let pooled = Pooled::new(ds);
    let values: Vec<f64> = ds.curves().iter().flat_map(|c| c.values.iter().copied()).collect();
    smooth_on_grid(&pooled, &values, spec, grid)
}

pub(crate) fn smooth_on_grid(
    pooled: &Pooled,
    responses: &[f64],
    spec: &KernelSpec,
    grid: &EvaluationGrid,
) -> Result<SurfaceEstimate> {
    let mut remediated = 0;
    let values = grid
        .points()
        .iter()
        .map(|&s| {
            let (v, fallback) = pooled.fit_at(responses, spec, s)?;
            remediated += usize::from(fallback);
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut est = SurfaceEstimate::mean(grid.clone(), values, spec.h);
    est.remediated_nodes = remediated;
    Ok(est)
}

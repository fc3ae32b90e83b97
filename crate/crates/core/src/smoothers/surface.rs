//! Second-moment surfaces on a grid.
//!
//! The product kernel separates, so for a fixed column `t` the column-side
//! factors of every pair can be prefix-summed within each curve (sorted
//! times make `k < j` a prefix). Each grid node then costs one pass over the
//! observations instead of one pass over all pairs.

use crate::data::{EvaluationGrid, SparseFunctionalDataset, SurfaceEstimate, SurfaceKind};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;

use super::local::{accumulate, NormalEquations, RIDGE};
use super::pairs::{build_pairs, PairRestriction, RawPairSet};
use super::Method;

/// Bandwidth doublings tried at a node before giving up.
pub const MAX_BANDWIDTH_DOUBLINGS: u32 = 3;

/// Column-side partial sums for one observation `j` of curve `i`:
/// `sum_k w_i W(v_k) [1, v_k, v_k^2, Y_k, v_k Y_k]` over the admissible `k`.
#[derive(Clone, Copy, Default)]
struct Partial {
    b0: f64,
    b1: f64,
    b2: f64,
    y0: f64,
    y1: f64,
}

/// Outcome of the remediation ladder at one node.
pub(crate) enum NodeFit {
    Direct(f64),
    Remediated(f64),
}

/// Ridge first, then up to [`MAX_BANDWIDTH_DOUBLINGS`] doublings of `h`
/// (each tried plain and with the ridge).
pub(crate) fn remediate(
    ne: &NormalEquations,
    pairs: impl Fn() -> RawPairSet,
    spec: &KernelSpec,
    s: f64,
    t: f64,
) -> Result<NodeFit> {
    if let Ok(fit) = ne.solve(spec.h, 0.0, s, t) {
        return Ok(NodeFit::Direct(fit.a0));
    }
    if let Ok(fit) = ne.solve(spec.h, RIDGE, s, t) {
        return Ok(NodeFit::Remediated(fit.a0));
    }
    let pairs = pairs();
    let mut h = spec.h;
    let mut last = Error::SingularFit { s, t, pivot: 0.0 };
    for _ in 0..MAX_BANDWIDTH_DOUBLINGS {
        h = (2.0 * h).min(1.0);
        let wider = spec.with_bandwidth(h)?;
        let ne = accumulate(&pairs, &wider, s, t);
        match ne.solve(h, 0.0, s, t).or_else(|_| ne.solve(h, RIDGE, s, t)) {
            Ok(fit) => return Ok(NodeFit::Remediated(fit.a0)),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// Estimates the second-moment function `G` on `grid`.
///
/// `Triangle` fits only nodes with `t <= s` from pairs strictly below the
/// diagonal and mirrors them, so the result is bitwise symmetric. `Square`
/// fits every node from all off-diagonal pairs and averages with the
/// transpose.
pub fn estimate_surface_g(
    ds: &SparseFunctionalDataset,
    spec: &KernelSpec,
    grid: &EvaluationGrid,
    method: Method,
) -> Result<SurfaceEstimate> {
    crate::data::validate_dataset(ds).into_result()?;
    let restriction = method.restriction();
    let m = grid.len();
    let pts = grid.points();
    let h = spec.h;
    let n = ds.n_curves() as f64;

    let times: Vec<f64> = ds.curves().iter().flat_map(|c| c.times.iter().copied()).collect();
    let values: Vec<f64> = ds.curves().iter().flat_map(|c| c.values.iter().copied()).collect();
    let mut bounds = Vec::with_capacity(ds.n_curves());
    let mut offset = 0;
    for c in ds.curves() {
        let r = c.len();
        let pairs_per_curve = (r * (r - 1)) as f64;
        let w = match restriction {
            PairRestriction::LowerTriangleStrict => 2.0 / pairs_per_curve,
            PairRestriction::OffDiagonal => 1.0 / pairs_per_curve,
        } / n;
        bounds.push((offset, offset + r, w));
        offset += r;
    }
    let n_obs = times.len();

    // kernel[g * n_obs + o] = W((T_o - t_g) / h)
    let mut kernel = vec![0.0; m * n_obs];
    for (g, &c) in pts.iter().enumerate() {
        for (o, &t) in times.iter().enumerate() {
            kernel[g * n_obs + o] = spec.eval((t - c) / h);
        }
    }

    let mut values_out = vec![f64::NAN; m * m];
    let mut remediated = 0;
    let mut partial = vec![Partial::default(); n_obs];
    let lazy_pairs = || build_pairs(ds, restriction);

    for col in 0..m {
        let t = pts[col];
        let kcol = &kernel[col * n_obs..(col + 1) * n_obs];
        for &(start, end, w) in &bounds {
            let term = |o: usize| {
                let v = (times[o] - t) / h;
                let b0 = w * kcol[o];
                Partial { b0, b1: b0 * v, b2: b0 * v * v, y0: b0 * values[o], y1: b0 * v * values[o] }
            };
            match restriction {
                PairRestriction::LowerTriangleStrict => {
                    let mut acc = Partial::default();
                    for o in start..end {
                        partial[o] = acc;
                        let x = term(o);
                        acc.b0 += x.b0;
                        acc.b1 += x.b1;
                        acc.b2 += x.b2;
                        acc.y0 += x.y0;
                        acc.y1 += x.y1;
                    }
                }
                PairRestriction::OffDiagonal => {
                    let mut total = Partial::default();
                    for o in start..end {
                        let x = term(o);
                        total.b0 += x.b0;
                        total.b1 += x.b1;
                        total.b2 += x.b2;
                        total.y0 += x.y0;
                        total.y1 += x.y1;
                    }
                    for o in start..end {
                        let x = term(o);
                        partial[o] = Partial {
                            b0: total.b0 - x.b0,
                            b1: total.b1 - x.b1,
                            b2: total.b2 - x.b2,
                            y0: total.y0 - x.y0,
                            y1: total.y1 - x.y1,
                        };
                    }
                }
            }
        }

        let first_row = match method {
            Method::Triangle => col,
            Method::Square => 0,
        };
        for row in first_row..m {
            let s = pts[row];
            let krow = &kernel[row * n_obs..(row + 1) * n_obs];
            let mut mm = [0.0f64; 6]; // 00, 01(u), 02(v), 11(uu), 12(uv), 22(vv)
            let mut rhs = [0.0f64; 3];
            for o in 0..n_obs {
                let p = &partial[o];
                let a = krow[o];
                let u = (times[o] - s) / h;
                let au = a * u;
                let ay = a * values[o];
                mm[0] += a * p.b0;
                mm[1] += au * p.b0;
                mm[2] += a * p.b1;
                mm[3] += au * u * p.b0;
                mm[4] += au * p.b1;
                mm[5] += a * p.b2;
                rhs[0] += ay * p.y0;
                rhs[1] += ay * u * p.y0;
                rhs[2] += ay * p.y1;
            }
            let mut ne = NormalEquations {
                matrix: [[mm[0], mm[1], mm[2]], [0.0, mm[3], mm[4]], [0.0, 0.0, mm[5]]],
                rhs,
            };
            ne.symmetrize();
            let value = match remediate(&ne, lazy_pairs, spec, s, t)? {
                NodeFit::Direct(v) => v,
                NodeFit::Remediated(v) => {
                    remediated += 1;
                    v
                }
            };
            values_out[row * m + col] = value;
        }
    }

    match method {
        Method::Triangle => {
            for row in 0..m {
                for col in (row + 1)..m {
                    values_out[row * m + col] = values_out[col * m + row];
                }
            }
        }
        Method::Square => {
            for row in 0..m {
                for col in (row + 1)..m {
                    let avg = 0.5 * (values_out[row * m + col] + values_out[col * m + row]);
                    values_out[row * m + col] = avg;
                    values_out[col * m + row] = avg;
                }
            }
        }
    }

    let mut surface = SurfaceEstimate::matrix(grid.clone(), values_out, h, SurfaceKind::SecondMoment);
    surface.remediated_nodes = remediated;
    Ok(surface)
}

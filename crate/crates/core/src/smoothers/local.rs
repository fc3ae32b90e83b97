//! Pointwise planar fits of the second-moment surface.
//!
//! The basis is `{1, T_ij - s, T_ik - t}`. Internally the offsets are divided
//! by `h`, which leaves the intercept unchanged and keeps the normal matrix
//! well scaled; slopes are converted back to the original units.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::linalg::{solve_symmetric, trace};

use super::pairs::{PairRestriction, RawPairSet};

/// A pivot below `SINGULAR_TOLERANCE * trace` marks the normal matrix singular.
pub const SINGULAR_TOLERANCE: f64 = 1e-12;
/// Ridge added (relative to the trace) by the first remediation step.
pub const RIDGE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalFit {
    /// Intercept: the surface estimate at the fit centre.
    pub a0: f64,
    /// Slope along the first coordinate.
    pub a1: f64,
    /// Slope along the second coordinate.
    pub a2: f64,
    /// Smallest `LDL^T` pivot of the scaled normal matrix.
    pub min_pivot: f64,
}

/// Accumulated weighted normal equations for the scaled planar basis
/// `{1, u, v}`, `u = (T_ij - s) / h`, `v = (T_ik - t) / h`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct NormalEquations {
    pub matrix: [[f64; 3]; 3],
    pub rhs: [f64; 3],
}

impl NormalEquations {
    #[inline]
    pub fn add(&mut self, weight: f64, u: f64, v: f64, z: f64) {
        let basis = [1.0, u, v];
        for a in 0..3 {
            let wa = weight * basis[a];
            for b in a..3 {
                self.matrix[a][b] += wa * basis[b];
            }
            self.rhs[a] += wa * z;
        }
    }

    /// Fills the lower triangle from the upper one.
    pub fn symmetrize(&mut self) {
        for a in 0..3 {
            for b in 0..a {
                self.matrix[a][b] = self.matrix[b][a];
            }
        }
    }

    /// Solves with an optional relative ridge; errors when the smallest pivot
    /// is below tolerance.
    pub fn solve(&self, h: f64, ridge: f64, s: f64, t: f64) -> Result<LocalFit> {
        let tr = trace(&self.matrix);
        let mut m = self.matrix;
        if ridge > 0.0 {
            for (i, row) in m.iter_mut().enumerate() {
                row[i] += ridge * tr;
            }
        }
        let (sol, pivot) = solve_symmetric(&m, &self.rhs);
        if !(tr > 0.0 && tr.is_finite()) || !(pivot > SINGULAR_TOLERANCE * tr) || sol.iter().any(|x| !x.is_finite()) {
            return Err(Error::SingularFit { s, t, pivot });
        }
        Ok(LocalFit { a0: sol[0], a1: sol[1] / h, a2: sol[2] / h, min_pivot: pivot })
    }
}

fn check_fit_args(pairs: &RawPairSet, s: f64, t: f64) -> Result<()> {
    if pairs.is_empty() || pairs.n_curves == 0 {
        return Err(Error::InvalidArgument("no cross-products to smooth".into()));
    }
    if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!("({s}, {t}) lies outside the unit square")));
    }
    if pairs.restriction == PairRestriction::LowerTriangleStrict && t > s {
        return Err(Error::InvalidArgument(format!(
            "triangle fits are defined for t <= s, got (s={s}, t={t})"
        )));
    }
    Ok(())
}

pub(crate) fn accumulate(pairs: &RawPairSet, spec: &KernelSpec, s: f64, t: f64) -> NormalEquations {
    let inv_n = 1.0 / pairs.n_curves as f64;
    let mut ne = NormalEquations::default();
    for p in &pairs.entries {
        let u = (p.point.0 - s) / spec.h;
        let v = (p.point.1 - t) / spec.h;
        let w = p.weight * inv_n * spec.eval(u) * spec.eval(v);
        ne.add(w, u, v, p.product);
    }
    ne.symmetrize();
    ne
}

/// Weighted least-squares planar fit of the cross-products around `(s, t)`.
/// The returned intercept is the second-moment estimate at `(s, t)`.
pub fn fit_second_moment_at(pairs: &RawPairSet, spec: &KernelSpec, s: f64, t: f64) -> Result<LocalFit> {
    check_fit_args(pairs, s, t)?;
    accumulate(pairs, spec, s, t).solve(spec.h, 0.0, s, t)
}

/// The same intercept through explicit moment sums `A_{p,q}`, `S_{p,q}` and
/// the cofactor expansion of the 3x3 normal matrix. Shares no solver code
/// with [`fit_second_moment_at`].
pub fn fit_via_determinant_representation(pairs: &RawPairSet, spec: &KernelSpec, s: f64, t: f64) -> Result<f64> {
    check_fit_args(pairs, s, t)?;
    let h = spec.h;
    let scale = 1.0 / (pairs.n_curves as f64 * h * h);
    let mut a = [[0.0f64; 3]; 3]; // a[p][q] = A_{p,q}
    let (mut s00, mut s10, mut s01) = (0.0, 0.0, 0.0);
    for p in &pairs.entries {
        let ds = p.point.0 - s;
        let dt = p.point.1 - t;
        let w = scale * p.weight * spec.eval(ds / h) * spec.eval(dt / h);
        let powers_s = [1.0, ds, ds * ds];
        let powers_t = [1.0, dt, dt * dt];
        for pp in 0..3 {
            for qq in 0..(3 - pp) {
                a[pp][qq] += w * powers_s[pp] * powers_t[qq];
            }
        }
        s00 += w * p.product;
        s10 += w * ds * p.product;
        s01 += w * dt * p.product;
    }
    let (a00, a10, a01, a20, a11, a02) = (a[0][0], a[1][0], a[0][1], a[2][0], a[1][1], a[0][2]);
    let det = a00 * (a20 * a02 - a11 * a11) - a10 * (a10 * a02 - a11 * a01) + a01 * (a10 * a11 - a20 * a01);
    let m1 = a20 * a02 - a11 * a11;
    let m2 = a10 * a02 - a01 * a11;
    let m3 = a01 * a20 - a10 * a11;
    let hadamard = a00 * a20 * a02;
    if !(det > SINGULAR_TOLERANCE * hadamard) || !det.is_finite() {
        return Err(Error::SingularFit { s, t, pivot: det });
    }
    Ok((m1 * s00 - m2 * s10 - m3 * s01) / det)
}

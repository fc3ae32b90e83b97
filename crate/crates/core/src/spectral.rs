//! Eigen-analysis of covariance surfaces and surface error metrics.
//!
//! Integral operators are discretised with the rectangle rule (weight `Δ` at
//! every grid point, endpoints included), so operator eigenvalues are
//! `Δ` times matrix eigenvalues and eigenfunctions are matrix eigenvectors
//! scaled by `1/√Δ`. This carries an `O(Δ)` bias.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::data::{EvaluationGrid, SurfaceEstimate};
use crate::error::{Error, Result};

/// Relative asymmetry tolerated by [`eigendecompose`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSystem {
    pub grid: EvaluationGrid,
    /// Descending. Negative values are kept; see [`EigenSystem::is_negative`].
    pub eigenvalues: Vec<f64>,
    /// `eigenfunctions[k][m] = ψ_k(t_m)`, with `Δ Σ_m ψ_k(t_m)^2 = 1`.
    pub eigenfunctions: Vec<Vec<f64>>,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn is_negative(&self, k: usize) -> bool {
        self.eigenvalues[k] < 0.0
    }

    pub fn negative_count(&self) -> usize {
        self.eigenvalues.iter().filter(|&&l| l < 0.0).count()
    }

    /// `Σ_k λ_k ψ_k(t_i) ψ_k(t_j)`, which equals the input matrix when all
    /// `M` modes are kept.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let m = self.grid.len();
        let mut out = DMatrix::zeros(m, m);
        for (lambda, psi) in self.eigenvalues.iter().zip(&self.eigenfunctions) {
            for i in 0..m {
                for j in 0..m {
                    out[(i, j)] += lambda * psi[i] * psi[j];
                }
            }
        }
        out
    }
}

/// `Δ`-weighted inner product on the grid.
pub fn inner_product(grid: &EvaluationGrid, a: &[f64], b: &[f64]) -> f64 {
    grid.spacing() * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

/// `Δ`-weighted L² distance.
pub fn l2_distance(grid: &EvaluationGrid, a: &[f64], b: &[f64]) -> f64 {
    (grid.spacing() * a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>()).sqrt()
}

fn check_symmetric(c: &SurfaceEstimate) -> Result<()> {
    if !c.is_matrix() {
        return Err(Error::InvalidArgument("expected a matrix surface".into()));
    }
    let m = c.size();
    let scale = c.values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    for i in 0..m {
        for j in 0..i {
            let (a, b) = (c.get(i, j), c.get(j, i));
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite entry at ({i}, {j})")));
            }
            if (a - b).abs() > SYMMETRY_TOLERANCE * scale {
                return Err(Error::InvalidArgument(format!(
                    "matrix is not symmetric: entries ({i}, {j}) and ({j}, {i}) differ by {:e}",
                    (a - b).abs()
                )));
            }
        }
    }
    Ok(())
}

/// Makes the largest-magnitude entry positive (first one on ties).
fn canonical_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Leading `k` eigenpairs of the covariance operator discretised on the grid.
pub fn eigendecompose(c: &SurfaceEstimate, k: usize) -> Result<EigenSystem> {
    check_symmetric(c)?;
    let m = c.size();
    if k == 0 || k > m {
        return Err(Error::InvalidArgument(format!("number of eigenpairs must be in 1..={m}, got {k}")));
    }
    let dx = c.grid.spacing();
    let eig = SymmetricEigen::new(c.to_matrix());
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let scale = 1.0 / dx.sqrt();
    let (eigenvalues, eigenfunctions) = order
        .into_iter()
        .take(k)
        .map(|idx| {
            let mut psi: Vec<f64> = eig.eigenvectors.column(idx).iter().map(|v| v * scale).collect();
            canonical_sign(&mut psi);
            (eig.eigenvalues[idx] * dx, psi)
        })
        .unzip();
    Ok(EigenSystem { grid: c.grid.clone(), eigenvalues, eigenfunctions })
}

/// What to align eigenfunction signs against.
#[derive(Debug, Clone, Copy)]
pub enum SignReference<'a> {
    /// Largest-magnitude entry made positive.
    None,
    System(&'a EigenSystem),
    /// Reference functions tabulated on the same grid.
    Functions(&'a [Vec<f64>]),
}

/// Flips each eigenfunction so that its inner product with the matching
/// reference is non-negative. Where the inner product vanishes, or there is
/// no reference for that index, the largest-entry convention applies.
pub fn align_signs(est: &EigenSystem, reference: SignReference<'_>) -> Result<EigenSystem> {
    let refs: Option<&[Vec<f64>]> = match reference {
        SignReference::None => None,
        SignReference::System(sys) => {
            if sys.grid != est.grid {
                return Err(Error::InvalidArgument("reference grid differs".into()));
            }
            Some(&sys.eigenfunctions)
        }
        SignReference::Functions(f) => Some(f),
    };
    let mut out = est.clone();
    for (k, psi) in out.eigenfunctions.iter_mut().enumerate() {
        let reference = refs.and_then(|r| r.get(k));
        let ip = match reference {
            Some(r) if r.len() == psi.len() => inner_product(&est.grid, psi, r),
            Some(_) => return Err(Error::InvalidArgument("reference function length differs from grid".into())),
            None => 0.0,
        };
        let norm = reference.map_or(0.0, |r| (inner_product(&est.grid, psi, psi) * inner_product(&est.grid, r, r)).sqrt());
        if ip.abs() <= 1e-12 * norm || reference.is_none() {
            canonical_sign(psi);
        } else if ip < 0.0 {
            psi.iter_mut().for_each(|x| *x = -*x);
        }
    }
    Ok(out)
}

/// Riemann approximation `sqrt(Δ² Σ (A_ij - B_ij)²)` of the Hilbert-Schmidt
/// distance.
pub fn hs_distance(a: &SurfaceEstimate, b: &SurfaceEstimate) -> Result<f64> {
    if !a.is_matrix() || !b.is_matrix() {
        return Err(Error::InvalidArgument("HS distance needs matrix surfaces".into()));
    }
    if a.grid != b.grid {
        return Err(Error::InvalidArgument(format!(
            "grid mismatch: {} vs {} points",
            a.grid.len(),
            b.grid.len()
        )));
    }
    let dx = a.grid.spacing();
    let ss: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).powi(2)).sum();
    Ok(dx * ss.sqrt())
}

/// Largest absolute entrywise difference.
pub fn sup_distance(a: &SurfaceEstimate, b: &SurfaceEstimate) -> Result<f64> {
    if a.grid != b.grid || a.values.len() != b.values.len() {
        return Err(Error::InvalidArgument("grid mismatch".into()));
    }
    Ok(a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

/// Karhunen-Loève pair `k = 1, 2, ...` of Brownian motion on `[0, 1]`:
/// `λ_k = 4 / ((2k - 1)² π²)`, `ψ_k(t) = √2 sin((k - 1/2) π t)`.
pub fn brownian_eigenpair(k: usize, grid: &EvaluationGrid) -> (f64, Vec<f64>) {
    assert!(k >= 1, "eigenpairs are indexed from 1");
    let freq = (k as f64 - 0.5) * PI;
    let lambda = 1.0 / (freq * freq);
    let psi = grid.points().iter().map(|&t| 2f64.sqrt() * (freq * t).sin()).collect();
    (lambda, psi)
}

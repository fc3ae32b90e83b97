//! Domain types shared by every other module.

mod io;

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{
    read_dataset, read_matrix_csv, write_dataset, write_matrix_csv, write_mean_csv,
    DATASET_HEADER,
};

/// One observed curve: strictly increasing times in `[0, 1]` and the noisy
/// values observed at those times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl Curve {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Self {
        Self { times, values }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// A single rule broken by a dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoCurves,
    LengthMismatch { curve: usize, times: usize, values: usize },
    TooFewObservations { curve: usize, r: usize },
    TimeOutOfRange { curve: usize, index: usize, time: f64 },
    NotIncreasing { curve: usize, index: usize },
    NonFinite { curve: usize, index: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoCurves => write!(f, "dataset has no curves"),
            Violation::LengthMismatch { curve, times, values } => write!(
                f,
                "curve {curve}: length mismatch ({times} times, {values} values)"
            ),
            Violation::TooFewObservations { curve, r } => {
                write!(f, "curve {curve}: r < 2 (r = {r})")
            }
            Violation::TimeOutOfRange { curve, index, time } => {
                write!(f, "curve {curve}: time {time} at index {index} outside [0, 1]")
            }
            Violation::NotIncreasing { curve, index } => {
                write!(f, "curve {curve}: times not increasing at index {index}")
            }
            Violation::NonFinite { curve, index } => {
                write!(f, "curve {curve}: non-finite value at index {index}")
            }
        }
    }
}

/// Outcome of [`validate_dataset`]; violations are data, not errors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidDataset(
                self.violations.iter().map(ToString::to_string).collect(),
            ))
        }
    }
}

/// `n` curves, each with its own (ragged) set of observation times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseFunctionalDataset {
    curves: Vec<Curve>,
}

impl SparseFunctionalDataset {
    /// Wraps curves without checking them. Use [`validate_dataset`] or
    /// [`SparseFunctionalDataset::validated`] when the input is untrusted.
    pub fn new(curves: Vec<Curve>) -> Self {
        Self { curves }
    }

    pub fn validated(curves: Vec<Curve>) -> Result<Self> {
        let ds = Self::new(curves);
        validate_dataset(&ds).into_result()?;
        Ok(ds)
    }

    pub fn curves(&self) -> &[Curve] {
        &self.curves
    }

    pub fn n_curves(&self) -> usize {
        self.curves.len()
    }

    pub fn n_observations(&self) -> usize {
        self.curves.iter().map(Curve::len).sum()
    }

    pub fn mean_observations_per_curve(&self) -> f64 {
        if self.curves.is_empty() {
            0.0
        } else {
            self.n_observations() as f64 / self.curves.len() as f64
        }
    }

    /// Returns a copy with every value transformed by `f`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            curves: self
                .curves
                .iter()
                .map(|c| Curve::new(c.times.clone(), c.values.iter().map(|&y| f(y)).collect()))
                .collect(),
        }
    }

    /// Subset of curves by index, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            curves: indices.iter().map(|&i| self.curves[i].clone()).collect(),
        }
    }
}

pub fn validate_dataset(ds: &SparseFunctionalDataset) -> ValidationReport {
    let mut violations = Vec::new();
    if ds.curves.is_empty() {
        violations.push(Violation::NoCurves);
    }
    for (ci, curve) in ds.curves.iter().enumerate() {
        if curve.times.len() != curve.values.len() {
            violations.push(Violation::LengthMismatch {
                curve: ci,
                times: curve.times.len(),
                values: curve.values.len(),
            });
        }
        if curve.times.len() < 2 {
            violations.push(Violation::TooFewObservations {
                curve: ci,
                r: curve.times.len(),
            });
        }
        for (j, &t) in curve.times.iter().enumerate() {
            if !(0.0..=1.0).contains(&t) {
                violations.push(Violation::TimeOutOfRange { curve: ci, index: j, time: t });
            }
            if j > 0 && !(curve.times[j - 1] < t) {
                violations.push(Violation::NotIncreasing { curve: ci, index: j });
            }
        }
        if let Some(j) = curve.values.iter().position(|y| !y.is_finite()) {
            violations.push(Violation::NonFinite { curve: ci, index: j });
        }
    }
    ValidationReport { violations }
}

/// Equispaced points `0 = t_1 < ... < t_M = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationGrid {
    points: Vec<f64>,
    spacing: f64,
}

pub const DEFAULT_GRID_SIZE: usize = 51;

impl EvaluationGrid {
    pub fn uniform(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidArgument(format!("grid size must be >= 2, got {m}")));
        }
        let last = (m - 1) as f64;
        let points = (0..m).map(|i| i as f64 / last).collect();
        Ok(Self { points, spacing: 1.0 / last })
    }

    /// Rebuilds a grid from stored points, checking they form the uniform grid
    /// of the same size.
    pub fn from_points(points: &[f64]) -> Result<Self> {
        let grid = Self::uniform(points.len())?;
        let max_dev = grid
            .points
            .iter()
            .zip(points)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if max_dev > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "grid points are not the uniform grid on [0,1] (deviation {max_dev:e})"
            )));
        }
        Ok(grid)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn make_grid(m: usize) -> Result<EvaluationGrid> {
    EvaluationGrid::uniform(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    Mean,
    SecondMoment,
    Covariance,
}

/// A function estimate on a grid: an `M`-vector for means, an `M x M`
/// row-major matrix otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceEstimate {
    pub grid: EvaluationGrid,
    pub values: Vec<f64>,
    pub bandwidth: f64,
    pub kind: SurfaceKind,
    /// Grid nodes whose local fit needed the ridge or bandwidth fallback.
    pub remediated_nodes: usize,
}

impl SurfaceEstimate {
    pub fn mean(grid: EvaluationGrid, values: Vec<f64>, bandwidth: f64) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values, bandwidth, kind: SurfaceKind::Mean, remediated_nodes: 0 }
    }

    pub fn matrix(grid: EvaluationGrid, values: Vec<f64>, bandwidth: f64, kind: SurfaceKind) -> Self {
        debug_assert_eq!(values.len(), grid.len() * grid.len());
        Self { grid, values, bandwidth, kind, remediated_nodes: 0 }
    }

    /// Tabulates `f(s, t)` on the grid.
    pub fn from_fn(grid: &EvaluationGrid, kind: SurfaceKind, f: impl Fn(f64, f64) -> f64) -> Self {
        let pts = grid.points();
        let values = pts.iter().flat_map(|&s| pts.iter().map(move |&t| (s, t))).map(|(s, t)| f(s, t)).collect();
        Self::matrix(grid.clone(), values, 0.0, kind)
    }

    pub fn is_matrix(&self) -> bool {
        self.kind != SurfaceKind::Mean
    }

    pub fn size(&self) -> usize {
        self.grid.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.len() + j]
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let m = self.grid.len();
        DMatrix::from_row_slice(m, m, &self.values)
    }

    /// Diagonal of a matrix surface.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.size()).map(|i| self.get(i, i)).collect()
    }

    pub fn is_exactly_symmetric(&self) -> bool {
        let m = self.size();
        (0..m).all(|i| (0..i).all(|j| self.get(i, j).to_bits() == self.get(j, i).to_bits()))
    }
}

/// Gaussian measurement error with standard deviation `std_dev`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub std_dev: f64,
}

impl NoiseModel {
    pub fn gaussian(std_dev: f64) -> Result<Self> {
        if !std_dev.is_finite() || std_dev < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "noise standard deviation must be finite and >= 0, got {std_dev}"
            )));
        }
        Ok(Self { std_dev })
    }
}

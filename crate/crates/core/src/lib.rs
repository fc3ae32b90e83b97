//! Covariance estimation for functional data whose sample paths may be rough
//! (e.g. diffusions), observed discretely, sparsely and with measurement error.
//!
//! The central estimator fits a local planar surface to the cross-products
//! `Y_ij * Y_ik` lying strictly below the diagonal (`T_ik < T_ij`), evaluates it
//! on the closed lower triangle and mirrors it across the diagonal. The
//! classical full-square smoother is provided as a baseline.
//!
//! Modules:
//! - [`data`]: datasets, grids, surface estimates and CSV I/O.
//! - [`simulate`]: sampling designs, processes with known covariance, noise.
//! - [`kernels`]: exponential kernel sequences and the scale schedule.
//! - [`smoothers`]: mean, second-moment and covariance smoothers.
//! - [`spectral`]: eigen-analysis and error metrics.
//! - [`experiments`]: seeded Monte-Carlo comparison harness.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod data;
pub mod error;
pub mod experiments;
pub mod kernels;
mod linalg;
pub mod simulate;
pub mod smoothers;
pub mod spectral;

pub use data::{EvaluationGrid, NoiseModel, SparseFunctionalDataset, SurfaceEstimate, SurfaceKind};
pub use error::{Error, Result};
pub use kernels::{KernelFamily, KernelSpec};
pub use smoothers::Method;
pub use spectral::EigenSystem;

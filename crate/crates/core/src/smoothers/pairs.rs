use serde::{Deserialize, Serialize};

use crate::data::SparseFunctionalDataset;

/// Which cross-products enter the second-moment smoother.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairRestriction {
    /// `k < j` only: points `(T_ij, T_ik)` strictly below the diagonal.
    LowerTriangleStrict,
    /// Every `k != j`, both orders: the unit square minus its diagonal.
    OffDiagonal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawPair {
    /// `(T_ij, T_ik)`; `T_ik < T_ij` under the triangle restriction.
    pub point: (f64, f64),
    /// `Y_ij * Y_ik`.
    pub product: f64,
    /// `2 / (r (r - 1))` for the triangle, `1 / (r (r - 1))` for the square,
    /// so that each curve carries total weight one.
    pub weight: f64,
    pub curve: usize,
}

/// The raw covariance scatterplot of one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct RawPairSet {
    pub entries: Vec<RawPair>,
    pub restriction: PairRestriction,
    pub n_curves: usize,
}

impl RawPairSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries with their products replaced by `f(T_ij, T_ik)`.
    pub fn with_products(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|p| RawPair { product: f(p.point.0, p.point.1), ..*p })
            .collect();
        Self { entries, ..*self }
    }
}

/// Collects the cross-products `Y_ij Y_ik`. The diagonal `j == k` is never
/// included.
pub fn build_pairs(ds: &SparseFunctionalDataset, restriction: PairRestriction) -> RawPairSet {
    let mut entries = Vec::new();
    for (i, curve) in ds.curves().iter().enumerate() {
        let r = curve.len();
        if r < 2 {
            continue;
        }
        let pairs_per_curve = (r * (r - 1)) as f64;
        let (t, y) = (&curve.times, &curve.values);
        match restriction {
            PairRestriction::LowerTriangleStrict => {
                let weight = 2.0 / pairs_per_curve;
                for j in 1..r {
                    for k in 0..j {
                        entries.push(RawPair { point: (t[j], t[k]), product: y[j] * y[k], weight, curve: i });
                    }
                }
            }
            PairRestriction::OffDiagonal => {
                let weight = 1.0 / pairs_per_curve;
                for j in 0..r {
                    for k in 0..r {
                        if k != j {
                            entries.push(RawPair { point: (t[j], t[k]), product: y[j] * y[k], weight, curve: i });
                        }
                    }
                }
            }
        }
    }
    RawPairSet { entries, restriction, n_curves: ds.n_curves() }
}

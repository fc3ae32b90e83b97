//! Univariate kernel sequences and the product kernel used by the smoothers.
//!
//! The sequence families are strictly positive on the whole real line, so a
//! local fit always has data with nonzero weight. Their scale `sigma_n`
//! shrinks with the bandwidth so that the tail mass beyond `|u| = 1` stays
//! below `h^4` (see [`sigma_schedule`]).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelFamily {
    /// `exp(-|u| / sigma_n)`.
    #[serde(rename = "exp")]
    ExpSequence,
    /// `exp(-|u|)` inside `|u| < 1`, `exp(-|u| / sigma_n)` outside.
    #[serde(rename = "hybrid")]
    HybridSequence,
    /// `0.75 (1 - u^2)_+`; compactly supported, kept for comparison only.
    #[serde(rename = "epanechnikov")]
    EpanechnikovReference,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::ExpSequence => "exp",
            KernelFamily::HybridSequence => "hybrid",
            KernelFamily::EpanechnikovReference => "epanechnikov",
        }
    }

    pub fn is_sequence(self) -> bool {
        !matches!(self, KernelFamily::EpanechnikovReference)
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp" | "exp_sequence" => Ok(KernelFamily::ExpSequence),
            "hybrid" | "hybrid_sequence" => Ok(KernelFamily::HybridSequence),
            "epanechnikov" | "epanechnikov_reference" => Ok(KernelFamily::EpanechnikovReference),
            other => Err(Error::InvalidArgument(format!(
                "unknown kernel family `{other}` (expected exp, hybrid or epanechnikov)"
            ))),
        }
    }
}

/// A kernel family with its scale and the bandwidth it is applied at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub sigma_n: f64,
    pub h: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, sigma_n: f64, h: f64) -> Result<Self> {
        if !(sigma_n.is_finite() && sigma_n > 0.0) {
            return Err(Error::InvalidArgument(format!("sigma_n must be > 0, got {sigma_n}")));
        }
        if !(h > 0.0 && h <= 1.0) {
            return Err(Error::InvalidArgument(format!("bandwidth must lie in (0, 1], got {h}")));
        }
        Ok(Self { family, sigma_n, h })
    }

    /// Uses `sigma_schedule(h)` for the scale. At `h = 1` the schedule limit
    /// `sigma_n = 1` is used.
    pub fn scheduled(family: KernelFamily, h: f64) -> Result<Self> {
        let sigma = if h == 1.0 { 1.0 } else { sigma_schedule(h)? };
        Self::new(family, sigma, h)
    }

    /// Same family and scale at another bandwidth.
    pub fn with_bandwidth(&self, h: f64) -> Result<Self> {
        Self::new(self.family, self.sigma_n, h)
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        eval_kernel(self, u)
    }

    /// Weight of an observation at `x` for a fit centred at `center`.
    #[inline]
    pub fn weight(&self, x: f64, center: f64) -> f64 {
        eval_kernel(self, (x - center) / self.h)
    }
}

#[inline]
pub fn eval_kernel(spec: &KernelSpec, u: f64) -> f64 {
    let a = u.abs();
    match spec.family {
        KernelFamily::ExpSequence => (-a / spec.sigma_n).exp(),
        KernelFamily::HybridSequence => {
            if a < 1.0 {
                (-a).exp()
            } else {
                (-a / spec.sigma_n).exp()
            }
        }
        KernelFamily::EpanechnikovReference => {
            if a < 1.0 {
                0.75 * (1.0 - a * a)
            } else {
                0.0
            }
        }
    }
}

/// `sigma_n = 1 / (4 ln(1/h) + 1)`, which gives `exp(-1/sigma_n) = e^-1 h^4`.
pub fn sigma_schedule(h: f64) -> Result<f64> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "sigma schedule needs a bandwidth in (0, 1), got {h}"
        )));
    }
    Ok(1.0 / (4.0 * (1.0 / h).ln() + 1.0))
}

/// `K(u, v) = W(u) W(v)`.
#[inline]
pub fn eval_product_kernel(spec: &KernelSpec, u: f64, v: f64) -> f64 {
    eval_kernel(spec, u) * eval_kernel(spec, v)
}

/// Kernel selection as it appears in configuration files: `sigma_n` falls
/// back to the schedule of whatever bandwidth the kernel is used at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub family: KernelFamily,
    #[serde(default)]
    pub sigma_n: Option<f64>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self { family: KernelFamily::ExpSequence, sigma_n: None }
    }
}

impl KernelConfig {
    pub fn at_bandwidth(&self, h: f64) -> Result<KernelSpec> {
        match self.sigma_n {
            Some(sigma) => KernelSpec::new(self.family, sigma, h),
            None => KernelSpec::scheduled(self.family, h),
        }
    }
}

//! Additive (Laplace-type) estimators shared by every tree node.
//!
//! An [`AdditiveEstimator`] with smoothing constant `δ` predicts a symbol
//! seen `ν` times out of `T` among `σ` alternatives with probability
//! `(ν + δ) / (T + δσ)`. `δ = 1` is the Laplace rule of succession and
//! `δ = 0.50922` is Krichevsky's asymptotically minimax choice.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `log₂ e`, the factor that turns natural-log bounds into bits.
pub const LOG2_E: f64 = std::f64::consts::LOG2_E;

/// Krichevsky's smoothing constant, stored as the five-decimal literal.
pub const KRICHEVSKY_DELTA: f64 = 0.50922;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AdditiveEstimator {
    delta: f64,
}

impl AdditiveEstimator {
    pub const LAPLACE: AdditiveEstimator = AdditiveEstimator { delta: 1.0 };
    pub const KRICHEVSKY: AdditiveEstimator = AdditiveEstimator { delta: KRICHEVSKY_DELTA };

    pub fn new(delta: f64) -> Result<Self> {
        if delta.is_finite() && delta > 0.0 {
            Ok(AdditiveEstimator { delta })
        } else {
            Err(Error::InvalidEstimator(format!("smoothing constant {delta} must be positive")))
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn is_laplace(&self) -> bool {
        self.delta == 1.0
    }

    /// `(nu + δ) / (total + δ·sigma)`.
    pub fn estimate(&self, nu: u64, total: u64, sigma: u64) -> Result<f64> {
        if sigma == 0 || nu > total {
            return Err(Error::EstimateDomain { nu, total, sigma });
        }
        Ok(self.estimate_unchecked(nu, total, sigma))
    }

    #[inline]
    pub(crate) fn estimate_unchecked(&self, nu: u64, total: u64, sigma: u64) -> f64 {
        (nu as f64 + self.delta) / (total as f64 + self.delta * sigma as f64)
    }

    /// The Laplace estimate as an exact fraction; `None` unless `δ = 1`.
    pub fn estimate_exact(&self, nu: u64, total: u64, sigma: u64) -> Option<Ratio<u128>> {
        if !self.is_laplace() || sigma == 0 || nu > total {
            return None;
        }
        Some(Ratio::new(nu as u128 + 1, total as u128 + sigma as u128))
    }
}

impl fmt::Display for AdditiveEstimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == Self::LAPLACE {
            f.write_str("laplace")
        } else if *self == Self::KRICHEVSKY {
            f.write_str("krichevsky")
        } else {
            write!(f, "additive:{}", self.delta)
        }
    }
}

impl FromStr for AdditiveEstimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "laplace" => Ok(Self::LAPLACE),
            "krichevsky" | "kt" => Ok(Self::KRICHEVSKY),
            _ => {
                let delta = s
                    .strip_prefix("additive:")
                    .ok_or_else(|| Error::InvalidEstimator(format!("unknown estimator {s:?}")))?;
                let delta: f64 =
                    delta.parse().map_err(|_| Error::InvalidEstimator(format!("bad smoothing constant in {s:?}")))?;
                Self::new(delta)
            }
        }
    }
}

impl TryFrom<String> for AdditiveEstimator {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<AdditiveEstimator> for String {
    fn from(e: AdditiveEstimator) -> String {
        e.to_string()
    }
}

/// Upper bound `(σ − 1)·log₂e / (t + 1)` on the average redundancy of the
/// Laplace predictor over an alphabet of size `σ`, in bits.
pub fn laplace_bound(alphabet_size: u64, t: u64) -> Result<f64> {
    if alphabet_size < 2 {
        return Err(Error::AlphabetTooSmall(alphabet_size));
    }
    Ok((alphabet_size - 1) as f64 * LOG2_E / (t as f64 + 1.0))
}

/// `(σ − 1)·log₂e`, the limit of `2t·r^t` for the Krichevsky predictor.
pub fn krichevsky_asymptote(alphabet_size: u64) -> Result<f64> {
    if alphabet_size < 2 {
        return Err(Error::AlphabetTooSmall(alphabet_size));
    }
    Ok((alphabet_size - 1) as f64 * LOG2_E)
}

//! Trend classification of metric windows.
//!
//! A window is reduced to a least-squares slope and a residual spread, then
//! mapped onto one of six trend classes. The decision rule is mirror
//! symmetric: reversing a window swaps the decline/rise classes and fixes
//! `Stable` and `Fluctuating`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{self, Real};
use crate::Value;

/// Denominator floor used when normalizing by the window mean.
const MEAN_EPSILON: f64 = 1e-9;

/// One of the six trend classes, with the code/label bijection fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum TrendClass {
    Stable = 0,
    SharpDecline = 1,
    SlowDecline = 2,
    SharpRise = 3,
    SlowRise = 4,
    Fluctuating = 5,
}

impl TrendClass {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn label(self) -> &'static str {
        match self {
            TrendClass::Stable => "stable",
            TrendClass::SharpDecline => "sharp decline",
            TrendClass::SlowDecline => "slow decline",
            TrendClass::SharpRise => "sharp rise",
            TrendClass::SlowRise => "slow rise",
            TrendClass::Fluctuating => "fluctuating",
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(TrendClass::Stable),
            1 => Some(TrendClass::SharpDecline),
            2 => Some(TrendClass::SlowDecline),
            3 => Some(TrendClass::SharpRise),
            4 => Some(TrendClass::SlowRise),
            5 => Some(TrendClass::Fluctuating),
            _ => None,
        }
    }
}

impl From<TrendClass> for u8 {
    fn from(t: TrendClass) -> u8 {
        t.code()
    }
}

impl TryFrom<u8> for TrendClass {
    type Error = String;

    fn try_from(code: u8) -> Result<Self, String> {
        TrendClass::from_code(code).ok_or_else(|| format!("trend code out of range: {code}"))
    }
}

impl std::fmt::Display for TrendClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({})", self.code(), self.label())
    }
}

/// Thresholds for the trend decision rule.
///
/// With relative change `r = slope * (len - 1) / max(|mean|, eps)` and
/// residual coefficient of variation `q`:
///
/// - `|r| < slow_change` and `q < residual_cv_max` → stable
/// - `r <= -sharp_change` → sharp decline
/// - `-sharp_change < r <= -slow_change` → slow decline
/// - `r >= sharp_change` → sharp rise
/// - `slow_change <= r < sharp_change` → slow rise
/// - otherwise → fluctuating
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrendConfig {
    pub slow_change: Value,
    pub sharp_change: Value,
    pub residual_cv_max: Value,
}

impl Default for TrendConfig {
    fn default() -> Self {
        Self {
            slow_change: 0.05,
            sharp_change: 0.3,
            residual_cv_max: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrendError {
    #[error("insufficient data: needed {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },
}

/// Classify a window of at least two values.
pub fn classify_trend(values: &[Value], cfg: &TrendConfig) -> Result<TrendClass, TrendError> {
    if values.len() < 2 {
        return Err(TrendError::InsufficientData {
            needed: 2,
            got: values.len(),
        });
    }
    Ok(classify_in(
        values,
        cfg.slow_change,
        cfg.sharp_change,
        cfg.residual_cv_max,
    ))
}

/// Scalar-generic decision rule behind [`classify_trend`].
pub fn classify_in<S: Real>(values: &[S], slow: S, sharp: S, residual_cv_max: S) -> TrendClass {
    let (slope, residual_std) = numeric::least_squares_line(values);
    let m = numeric::mean(values);
    let denom = m.abs().max(S::from_f64(MEAN_EPSILON).unwrap());
    let r = slope * S::from_usize(values.len() - 1).unwrap() / denom;
    let q = residual_std / denom;
    if r.abs() < slow && q < residual_cv_max {
        TrendClass::Stable
    } else if r <= -sharp {
        TrendClass::SharpDecline
    } else if r <= -slow {
        TrendClass::SlowDecline
    } else if r >= sharp {
        TrendClass::SharpRise
    } else if r >= slow {
        TrendClass::SlowRise
    } else {
        TrendClass::Fluctuating
    }
}

//! Adaptive detector function.
//!
//! Decides whether a metric window is abnormal by combining volatility, a
//! dynamic baseline, a state value measuring the distance to that baseline,
//! and volatility-dependent weights into one anomaly score. The score gates
//! graph evolution: an abnormal metric keeps the traversal going.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{self, Real};
use crate::store::MetricPoint;
use crate::{Timestamp, Value};

/// Detector parameters.
///
/// `theta` is the volatility threshold steering the weights; the score
/// threshold defaults to `theta` since that choice reproduces the documented
/// worked outcome. Hourly baseline factors default to all ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdfConfig {
    pub theta: Value,
    pub score_threshold: Value,
    /// Number of trailing values before `t` feeding the baseline mean.
    pub baseline_window: usize,
    pub hour_factors: [Value; 24],
    pub sigma_floor: Value,
    /// Shuffle trials estimating the randomized autocorrelation.
    pub shuffle_trials: u32,
    pub rng_seed: u64,
}

impl Default for AdfConfig {
    fn default() -> Self {
        Self {
            theta: 10.0,
            score_threshold: 10.0,
            baseline_window: 5,
            hour_factors: [1.0; 24],
            sigma_floor: 1e-9,
            shuffle_trials: 100,
            rng_seed: 17,
        }
    }
}

/// Volatility measures of one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Volatility {
    pub sigma: Value,
    pub c_v: Value,
    pub rho_v: Value,
    pub rho_r: Value,
}

/// Full outcome of one detector evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    pub sigma: Value,
    pub c_v: Value,
    pub rho_v: Value,
    pub rho_r: Value,
    pub baseline: Value,
    pub deviation: Value,
    pub state_value: Value,
    pub w1: Value,
    pub w2: Value,
    pub score: Value,
    pub abnormal: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdfError {
    #[error("insufficient data: needed {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },
}

/// Absolute step sizes `|x_{i+1} - x_i|` of a window.
pub fn volatility_series<S: Real>(xs: &[S]) -> Vec<S> {
    xs.windows(2).map(|w| (w[1] - w[0]).abs()).collect()
}

/// State value: inside one effective deviation of the baseline the value
/// decreases with distance, outside it grows with distance. The boundary
/// `deviation == sigma_eff` takes the close branch.
pub fn state_value<S: Real>(deviation: S, sigma_eff: S) -> S {
    if deviation <= sigma_eff {
        S::one() - deviation / sigma_eff
    } else {
        deviation / sigma_eff
    }
}

/// Volatility weights `(w1, w2)`; `w1` grows with sigma against `theta`.
pub fn volatility_weights<S: Real>(sigma: S, theta: S) -> (S, S) {
    let w1 = sigma / (sigma + theta);
    (w1, S::one() - w1)
}

/// Weighted anomaly score.
pub fn anomaly_score<S: Real>(w1: S, sigma: S, w2: S, state: S) -> S {
    w1 * sigma + w2 * state
}

/// Volatility of a window: the sample standard deviation, the lag-1
/// autocorrelation of the step-size series, its randomized counterpart from
/// seeded shuffles, and their ratio.
pub fn volatility(xs: &[Value], cfg: &AdfConfig) -> Result<Volatility, AdfError> {
    if xs.len() < 2 {
        return Err(AdfError::InsufficientData {
            needed: 2,
            got: xs.len(),
        });
    }
    let sigma = numeric::sample_std_dev(xs);
    let steps = volatility_series(xs);
    let rho_v = numeric::lag1_autocorr(&steps);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut sum = 0.0;
    for _ in 0..cfg.shuffle_trials {
        let mut shuffled = steps.clone();
        shuffled.shuffle(&mut rng);
        sum += numeric::lag1_autocorr(&shuffled);
    }
    let rho_r = sum / Value::from(cfg.shuffle_trials.max(1));
    let denom = rho_r
        .abs()
        .max(cfg.sigma_floor)
        .copysign(if rho_r == 0.0 { 1.0 } else { rho_r });
    let c_v = rho_v / denom;
    Ok(Volatility {
        sigma,
        c_v,
        rho_v,
        rho_r,
    })
}

/// Dynamic baseline at `t`: the mean of the last `baseline_window` values
/// strictly before `t`, scaled by the hour-of-day factor.
pub fn baseline(history: &[MetricPoint], t: Timestamp, cfg: &AdfConfig) -> Result<Value, AdfError> {
    let before: Vec<Value> = history
        .iter()
        .filter(|p| p.ts < t)
        .map(|p| p.value)
        .collect();
    if before.is_empty() {
        return Err(AdfError::InsufficientData { needed: 1, got: 0 });
    }
    let tail = &before[before.len().saturating_sub(cfg.baseline_window.max(1))..];
    let hour = (t.rem_euclid(86_400) / 3_600) as usize;
    Ok(numeric::mean(tail) * cfg.hour_factors[hour])
}

/// Run the full detector for value `x_t` observed at `t`, with window `xs`
/// for volatility and `history` for the baseline.
pub fn evaluate(
    xs: &[Value],
    x_t: Value,
    t: Timestamp,
    history: &[MetricPoint],
    cfg: &AdfConfig,
) -> Result<AdfResult, AdfError> {
    let vol = volatility(xs, cfg)?;
    let base = baseline(history, t, cfg)?;
    let sigma_eff = vol.sigma.max(cfg.sigma_floor);
    let deviation = (x_t - base).abs();
    let state = state_value(deviation, sigma_eff);
    let (w1, w2) = volatility_weights(vol.sigma, cfg.theta);
    let score = anomaly_score(w1, vol.sigma, w2, state);
    Ok(AdfResult {
        sigma: vol.sigma,
        c_v: vol.c_v,
        rho_v: vol.rho_v,
        rho_r: vol.rho_r,
        baseline: base,
        deviation,
        state_value: state,
        w1,
        w2,
        score,
        abnormal: score > cfg.score_threshold,
    })
}

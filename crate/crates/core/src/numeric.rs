//! Scalar-generic numeric kernels.
//!
//! Everything here is generic over [`Real`] so the statistics underlying
//! trend classification, the adaptive detector, and the evaluation metrics
//! work for `f32` and `f64` alike. The engine instantiates them at
//! [`crate::Value`].

use std::fmt::Debug;
use std::ops::AddAssign;

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar usable by the numeric kernels.
pub trait Real: Float + FromPrimitive + AddAssign + Debug {}

impl<T> Real for T where T: Float + FromPrimitive + AddAssign + Debug {}

/// Arithmetic mean. Callers guarantee `xs` is non-empty.
pub fn mean<S: Real>(xs: &[S]) -> S {
    let mut sum = S::zero();
    for &x in xs {
        sum += x;
    }
    sum / S::from_usize(xs.len()).unwrap()
}

/// Sample standard deviation (n − 1 denominator). Callers guarantee `xs.len() >= 2`.
pub fn sample_std_dev<S: Real>(xs: &[S]) -> S {
    let m = mean(xs);
    let mut sum = S::zero();
    for &x in xs {
        let d = x - m;
        sum += d * d;
    }
    (sum / S::from_usize(xs.len() - 1).unwrap()).sqrt()
}

/// Nearest-rank percentile: the value at rank `ceil(p/100 * n)` of the sorted
/// sample. Callers guarantee `xs` non-empty and `0 < p <= 100`.
pub fn percentile_nearest_rank<S: Real>(xs: &[S], p: u8) -> S {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = sorted.len();
    let rank = (S::from_u8(p).unwrap() / S::from_u8(100).unwrap() * S::from_usize(n).unwrap())
        .ceil()
        .to_usize()
        .unwrap_or(1)
        .clamp(1, n);
    sorted[rank - 1]
}

/// Lag-1 autocorrelation. A series with fewer than two elements or zero
/// variance has autocorrelation 0 by convention.
pub fn lag1_autocorr<S: Real>(xs: &[S]) -> S {
    if xs.len() < 2 {
        return S::zero();
    }
    let m = mean(xs);
    let mut denom = S::zero();
    for &x in xs {
        let d = x - m;
        denom += d * d;
    }
    if denom == S::zero() {
        return S::zero();
    }
    let mut num = S::zero();
    for w in xs.windows(2) {
        num += (w[0] - m) * (w[1] - m);
    }
    num / denom
}

/// Least-squares line fit over index positions `0..len`.
///
/// Returns the slope and the sample standard deviation of the residuals.
/// Callers guarantee `ys.len() >= 2`.
pub fn least_squares_line<S: Real>(ys: &[S]) -> (S, S) {
    let n = ys.len();
    let nf = S::from_usize(n).unwrap();
    let x_mean = (nf - S::one()) / S::from_u8(2).unwrap();
    let y_mean = mean(ys);
    let mut sxy = S::zero();
    let mut sxx = S::zero();
    for (i, &y) in ys.iter().enumerate() {
        let dx = S::from_usize(i).unwrap() - x_mean;
        sxy += dx * (y - y_mean);
        sxx += dx * dx;
    }
    let slope = if sxx == S::zero() {
        S::zero()
    } else {
        sxy / sxx
    };
    let intercept = y_mean - slope * x_mean;
    let residuals: Vec<S> = ys
        .iter()
        .enumerate()
        .map(|(i, &y)| y - (intercept + slope * S::from_usize(i).unwrap()))
        .collect();
    (slope, sample_std_dev(&residuals))
}

/// Pearson correlation. `None` when either side has zero variance.
pub fn pearson<S: Real>(a: &[S], b: &[S]) -> Option<S> {
    debug_assert_eq!(a.len(), b.len());
    if a.len() < 2 {
        return None;
    }
    let ma = mean(a);
    let mb = mean(b);
    let mut num = S::zero();
    let mut da = S::zero();
    let mut db = S::zero();
    for (&x, &y) in a.iter().zip(b) {
        num += (x - ma) * (y - mb);
        da += (x - ma) * (x - ma);
        db += (y - mb) * (y - mb);
    }
    if da == S::zero() || db == S::zero() {
        return None;
    }
    Some(num / (da * db).sqrt())
}

//! Calculus on uniformly sampled time series: differences, trapezoid
//! integrals (optionally weighted by `t^p`), and windows.

// float methods come from std when a dev-dependency links it
#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use num_traits::Zero;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("interval [{a}, {b}] is outside the sampled range [{lo}, {hi}]")]
    OutOfRange { a: f64, b: f64, lo: f64, hi: f64 },
    #[error("sample times must be strictly increasing with a uniform stride")]
    NonUniform,
    #[error("series lengths differ: {0} times vs {1} values")]
    LengthMismatch(usize, usize),
}

/// Values that can be integrated and differenced: `f64` and `Complex64`.
pub trait Scalar: Copy + Zero + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}
impl Scalar for f64 {}
impl Scalar for Complex64 {}

/// Checks strictly increasing, uniformly spaced sample times and returns the stride.
pub fn uniform_stride(times: &[f64]) -> Result<f64, SeriesError> {
    if times.len() < 2 {
        return Err(SeriesError::TooFewSamples { needed: 2, got: times.len() });
    }
    let stride = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(stride > 0.0) {
        return Err(SeriesError::NonUniform);
    }
    for w in times.windows(2) {
        if ((w[1] - w[0]) - stride).abs() > 1e-9 * stride {
            return Err(SeriesError::NonUniform);
        }
    }
    Ok(stride)
}

/// Time derivative of a uniformly sampled series: centered differences in the
/// interior, second-order one-sided differences at both ends.
pub fn derivative<T: Scalar>(values: &[T], stride: f64) -> Result<Vec<T>, SeriesError> {
    let n = values.len();
    if n < 3 {
        return Err(SeriesError::TooFewSamples { needed: 3, got: n });
    }
    let inv2 = 1.0 / (2.0 * stride);
    let mut out = Vec::with_capacity(n);
    out.push((values[1] * 4.0 - values[0] * 3.0 - values[2]) * inv2);
    for k in 1..n - 1 {
        out.push((values[k + 1] - values[k - 1]) * inv2);
    }
    out.push((values[n - 1] * 3.0 - values[n - 2] * 4.0 + values[n - 3]) * inv2);
    Ok(out)
}

fn weight(t: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else {
        t.powf(p)
    }
}

/// Running trapezoid integral `∫_{t_0}^{t_k} t^p f(t) dt` for every sample `k`.
pub fn cumulative_integral<T: Scalar>(times: &[f64], values: &[T], p: f64) -> Result<Vec<T>, SeriesError> {
    if times.len() != values.len() {
        return Err(SeriesError::LengthMismatch(times.len(), values.len()));
    }
    if times.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(times.len());
    let mut acc = T::zero();
    let mut prev = values[0] * weight(times[0], p);
    out.push(acc);
    for k in 1..times.len() {
        let cur = values[k] * weight(times[k], p);
        acc = acc + (prev + cur) * (0.5 * (times[k] - times[k - 1]));
        out.push(acc);
        prev = cur;
    }
    Ok(out)
}

/// Composite trapezoid of `t^p f(t)` over `[a, b]`. Endpoints falling inside a
/// sampling cell are handled by linear interpolation of the weighted integrand.
pub fn time_integral<T: Scalar>(times: &[f64], values: &[T], p: f64, interval: (f64, f64)) -> Result<T, SeriesError> {
    if times.len() != values.len() {
        return Err(SeriesError::LengthMismatch(times.len(), values.len()));
    }
    let (a, b) = interval;
    let n = times.len();
    if n < 2 {
        return Err(SeriesError::TooFewSamples { needed: 2, got: n });
    }
    let (lo, hi) = (times[0], times[n - 1]);
    let slack = 1e-12 * (hi - lo).abs().max(1.0);
    if !(a >= lo - slack && b <= hi + slack && a <= b) {
        return Err(SeriesError::OutOfRange { a, b, lo, hi });
    }
    let a = a.max(lo);
    let b = b.min(hi);
    let g = |k: usize| values[k] * weight(times[k], p);
    let interp = |t: f64, k: usize| {
        // value of the weighted integrand at t in [times[k], times[k+1]]
        let s = (t - times[k]) / (times[k + 1] - times[k]);
        g(k) * (1.0 - s) + g(k + 1) * s
    };
    let mut acc = T::zero();
    for k in 0..n - 1 {
        let (t0, t1) = (times[k], times[k + 1]);
        let l = a.max(t0);
        let r = b.min(t1);
        if r <= l {
            continue;
        }
        let fl = if l == t0 { g(k) } else { interp(l, k) };
        let fr = if r == t1 { g(k + 1) } else { interp(r, k) };
        acc = acc + (fl + fr) * (0.5 * (r - l));
    }
    Ok(acc)
}

/// Indices of samples with `a <= t <= b` (with a relative slack of `1e-9` of the stride).
pub fn window_indices(times: &[f64], a: f64, b: f64) -> core::ops::Range<usize> {
    let slack = if times.len() > 1 { 1e-9 * (times[1] - times[0]).abs() } else { 0.0 };
    let start = times.iter().position(|&t| t >= a - slack).unwrap_or(times.len());
    let end = times.iter().rposition(|&t| t <= b + slack).map_or(0, |i| i + 1);
    start..end.max(start)
}

/// Largest value on a window, `0` for an empty window.
pub fn window_max(times: &[f64], values: &[f64], a: f64, b: f64) -> f64 {
    values[window_indices(times, a, b)].iter().copied().fold(0.0, f64::max)
}

/// Ordinary least-squares line `y = slope x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

//! Quantitative verdicts for the Neumann-trace and decay estimates.
//!
//! Generic constants are never asserted. Each check reports the observed
//! ratio or supremum and, where an infinite-horizon statement is involved, a
//! tail-increment test on a running integral over the last part of the run:
//!
//! | check                         | window            | threshold            |
//! |-------------------------------|-------------------|----------------------|
//! | `L^2` Neumann ratio growth    | `[T/10, T]` vs `[0, T/10]` | `< 10%`     |
//! | `F` boundedness               | `[T/10, T]`       | sup increment `<= 1%`|
//! | `t ||q||_4^4`                 | `[T/2, T]` vs `[1, 2]` | `<= 1.5x`       |
//! | weighted / `L^1` Neumann tail | `[T/2, T]`        | increment `<= 5%`    |

// float methods come from std when a dev-dependency links it
#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use num_complex::Complex64;
use thiserror::Error;

use crate::functionals::{DiagnosticsSeries, SpatialNorms};
use crate::scenario::AdmissibilityClass;
use crate::series::{self, SeriesError};

/// Allowed growth of the `L^2` Neumann ratio from the first to the last decade.
pub const RATIO_GROWTH_LIMIT: f64 = 0.10;
/// Allowed increment of `sup|F|` over the last decade, relative to `sup|F|`.
pub const F_INCREMENT_LIMIT: f64 = 0.01;
/// Allowed tail increment of a running Neumann integral over `[T/2, T]`.
pub const TAIL_INCREMENT_LIMIT: f64 = 0.05;
/// `sup_{[T/2,T]} t||q||_4^4 <= QUARTIC_FACTOR * sup_{[1,2]} t||q||_4^4`.
pub const QUARTIC_FACTOR: f64 = 1.5;
/// Minimum number of samples in a decay-fit window.
pub const MIN_FIT_SAMPLES: usize = 10;
/// Distance to a decay threshold under which a failed tail test is reported as inconclusive.
pub const THRESHOLD_MARGIN: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("nonpositive value {value:e} at t = {t} inside the fit window")]
    NonPositive { t: f64, value: f64 },
    #[error("fit window [{t0}, {t1}] holds {got} samples, need at least {MIN_FIT_SAMPLES}")]
    WindowTooShort { t0: f64, t1: f64, got: usize },
    #[error("fit window must start at t >= 1, got {0}")]
    WindowStart(f64),
    #[error("weight exponent p = {0} must exceed 1 for a verdict")]
    WeightExponent(f64),
    #[error("horizon {0} is shorter than the required 10")]
    HorizonTooShort(f64),
    #[error("boundary-data bound vanishes while the Neumann integral does not (t = {t})")]
    Violation { t: f64 },
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Verdict {
    Bounded,
    Divergent,
    Integrable,
    NotIntegrable,
    Decaying,
    NotDecaying,
    Inconclusive,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Self::Bounded => "bounded",
            Self::Divergent => "divergent",
            Self::Integrable => "integrable",
            Self::NotIntegrable => "not integrable",
            Self::Decaying => "decaying",
            Self::NotDecaying => "not decaying",
            Self::Inconclusive => "inconclusive",
        }
    }

    pub fn is_positive(self) -> bool {
        matches!(self, Self::Bounded | Self::Integrable | Self::Decaying)
    }
}

fn horizon(times: &[f64]) -> f64 {
    times.last().copied().unwrap_or(0.0)
}

/// Running value at the first sample with `t >= at`.
fn value_at(times: &[f64], running: &[f64], at: f64) -> f64 {
    let k = series::window_indices(times, at, f64::INFINITY).start.min(running.len().saturating_sub(1));
    running[k]
}

/// `(I(T) - I(T/2)) / I(T)`, zero when `I(T) = 0`.
fn tail_ratio(times: &[f64], running: &[f64]) -> (f64, f64) {
    let t_end = horizon(times);
    let total = *running.last().unwrap_or(&0.0);
    let inc = total - value_at(times, running, 0.5 * t_end);
    let ratio = if total.abs() > 0.0 { inc / total.abs() } else { 0.0 };
    (inc, ratio)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NeumannL2Ratio {
    /// `(∫_0^t |P|^2)^{1/2}`
    pub lhs: Vec<f64>,
    /// Unit-coefficient boundary/initial data bound.
    pub rhs: Vec<f64>,
    pub ratio: Vec<f64>,
    pub sup: f64,
    pub first_decade_sup: f64,
    pub last_decade_sup: f64,
    /// `last / first - 1`
    pub growth: f64,
    pub bounded: bool,
}

/// `ratio_mainineq1`: `(∫_0^t|P|^2)^{1/2}` against
/// `||Q||^2 + ||Q_t||^2 + ||Q||_4^4` (in time) `+ ||q0||^2 + ||q0_x||^2 + ||q0||_4^4`.
pub fn ratio_mainineq1(diag: &DiagnosticsSeries, init: &SpatialNorms) -> Result<NeumannL2Ratio, EstimateError> {
    let times = diag.times();
    let p2: Vec<f64> = diag.samples.iter().map(|s| s.traces.p.norm_sqr()).collect();
    let q2: Vec<f64> = diag.samples.iter().map(|s| s.traces.q.norm_sqr()).collect();
    let qt2: Vec<f64> = diag.samples.iter().map(|s| s.traces.q_t.norm_sqr()).collect();
    let q4: Vec<f64> = q2.iter().map(|v| v * v).collect();
    let int_p2 = series::cumulative_integral(&times, &p2, 0.0)?;
    let int_q2 = series::cumulative_integral(&times, &q2, 0.0)?;
    let int_qt2 = series::cumulative_integral(&times, &qt2, 0.0)?;
    let int_q4 = series::cumulative_integral(&times, &q4, 0.0)?;
    let initial = init.mass + init.grad_sq + init.quartic;

    let mut lhs = Vec::with_capacity(times.len());
    let mut rhs = Vec::with_capacity(times.len());
    let mut ratio = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        let l = int_p2[k].sqrt();
        let r = int_q2[k] + int_qt2[k] + int_q4[k] + initial;
        let q = if r > 0.0 {
            l / r
        } else if l > 0.0 {
            return Err(EstimateError::Violation { t: times[k] });
        } else {
            0.0
        };
        lhs.push(l);
        rhs.push(r);
        ratio.push(q);
    }
    let t_end = horizon(&times);
    let sup = ratio.iter().copied().fold(0.0, f64::max);
    let first_decade_sup = series::window_max(&times, &ratio, 0.0, 0.1 * t_end);
    let last_decade_sup = series::window_max(&times, &ratio, 0.1 * t_end, t_end);
    let growth = if first_decade_sup > 0.0 { last_decade_sup / first_decade_sup - 1.0 } else { 0.0 };
    Ok(NeumannL2Ratio {
        lhs,
        rhs,
        ratio,
        sup,
        first_decade_sup,
        last_decade_sup,
        growth,
        bounded: sup.is_finite() && growth < RATIO_GROWTH_LIMIT,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecayFit {
    /// `γ` in `f ≈ A t^{-γ}`; positive means decay.
    pub exponent: f64,
    pub amplitude: f64,
    /// Largest `|log f - log(A t^{-γ})|` over the window.
    pub max_log_residual: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// `decay_fit`: least squares of `log f` against `log t` on `[t0, t1]`.
pub fn decay_fit(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit, EstimateError> {
    let (t0, t1) = window;
    if t0 < 1.0 {
        return Err(EstimateError::WindowStart(t0));
    }
    if times.len() != values.len() {
        return Err(SeriesError::LengthMismatch(times.len(), values.len()).into());
    }
    let idx = series::window_indices(times, t0, t1);
    if idx.len() < MIN_FIT_SAMPLES {
        return Err(EstimateError::WindowTooShort { t0, t1, got: idx.len() });
    }
    let mut lx = Vec::with_capacity(idx.len());
    let mut ly = Vec::with_capacity(idx.len());
    for k in idx.clone() {
        let v = values[k];
        if !(v > 0.0) {
            return Err(EstimateError::NonPositive { t: times[k], value: v });
        }
        lx.push(times[k].ln());
        ly.push(v.ln());
    }
    let (slope, intercept) = series::linear_fit(&lx, &ly);
    let max_log_residual =
        lx.iter().zip(&ly).map(|(x, y)| (y - (slope * x + intercept)).abs()).fold(0.0, f64::max);
    Ok(DecayFit { exponent: -slope, amplitude: intercept.exp(), max_log_residual, window, samples: idx.len() })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FBoundedness {
    /// `F(t) = -∫ r Re(P Q̄) - 2 ∫ r^2 Re(P conj(Q_r))`
    pub series: Vec<f64>,
    pub sup_abs: f64,
    /// `sup_{[0,T]} |F| - sup_{[0,T/10]} |F|`
    pub last_decade_increment: f64,
    pub bounded: bool,
}

/// `check_F`
pub fn check_f(diag: &DiagnosticsSeries) -> Result<FBoundedness, EstimateError> {
    let times = diag.times();
    let pq: Vec<f64> = diag.samples.iter().map(|s| (s.traces.p * s.traces.q.conj()).re).collect();
    let pqt: Vec<f64> = diag.samples.iter().map(|s| (s.traces.p * s.traces.q_t.conj()).re).collect();
    let a = series::cumulative_integral(&times, &pq, 1.0)?;
    let b = series::cumulative_integral(&times, &pqt, 2.0)?;
    let f: Vec<f64> = a.iter().zip(&b).map(|(a, b)| -a - 2.0 * b).collect();
    let abs: Vec<f64> = f.iter().map(|v| v.abs()).collect();
    let sup_abs = abs.iter().copied().fold(0.0, f64::max);
    let early = series::window_max(&times, &abs, 0.0, 0.1 * horizon(&times));
    let inc = sup_abs - early;
    Ok(FBoundedness {
        series: f,
        sup_abs,
        last_decade_increment: inc,
        bounded: sup_abs.is_finite() && inc <= F_INCREMENT_LIMIT * sup_abs,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TailIntegral {
    pub p: f64,
    /// Running `∫_0^t s^p |P|^2 ds`.
    pub series: Vec<f64>,
    pub total: f64,
    pub tail_increment: f64,
    pub tail_ratio: f64,
    /// `None` in diagnostic mode (`p <= 1`).
    pub verdict: Option<Verdict>,
}

fn weighted_series(times: &[f64], neumann: &[Complex64], p: f64) -> Result<TailIntegral, EstimateError> {
    let p2: Vec<f64> = neumann.iter().map(|z| z.norm_sqr()).collect();
    let series = series::cumulative_integral(times, &p2, p)?;
    let (tail_increment, tail_ratio) = tail_ratio(times, &series);
    Ok(TailIntegral { p, total: *series.last().unwrap_or(&0.0), series, tail_increment, tail_ratio, verdict: None })
}

/// `weighted_neumann_integral` in diagnostic mode: any `p`, no verdict.
pub fn weighted_neumann_series(times: &[f64], neumann: &[Complex64], p: f64) -> Result<TailIntegral, EstimateError> {
    weighted_series(times, neumann, p)
}

/// `weighted_neumann_integral`: running `∫ s^p|P|^2` with a tail verdict.
pub fn weighted_neumann_integral(times: &[f64], neumann: &[Complex64], p: f64) -> Result<TailIntegral, EstimateError> {
    if !(p > 1.0) {
        return Err(EstimateError::WeightExponent(p));
    }
    let t_end = horizon(times);
    if t_end < 10.0 {
        return Err(EstimateError::HorizonTooShort(t_end));
    }
    let mut out = weighted_series(times, neumann, p)?;
    out.verdict = Some(if out.tail_ratio <= TAIL_INCREMENT_LIMIT { Verdict::Bounded } else { Verdict::Divergent });
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct L1Neumann {
    /// Running `J(t) = ∫_0^t |P|`.
    pub direct: Vec<f64>,
    /// Cauchy–Schwarz splitting bound at `t = 1` with weight `t^{1+ε}`.
    pub bound: Vec<f64>,
    pub epsilon: f64,
    pub total: f64,
    pub tail_increment: f64,
    pub tail_ratio: f64,
    /// `direct <= bound` at every sample (to rounding).
    pub dominated: bool,
    pub verdict: Verdict,
}

/// `l1_neumann_partial`
pub fn l1_neumann_partial(times: &[f64], neumann: &[Complex64], epsilon: f64) -> Result<L1Neumann, EstimateError> {
    let abs: Vec<f64> = neumann.iter().map(|z| z.norm()).collect();
    let sq: Vec<f64> = neumann.iter().map(|z| z.norm_sqr()).collect();
    let direct = series::cumulative_integral(times, &abs, 0.0)?;
    let l2 = series::cumulative_integral(times, &sq, 0.0)?;

    // split at the first sample with t >= 1; the tail integrals start there
    let split = series::window_indices(times, 1.0, f64::INFINITY).start.min(times.len().saturating_sub(1));
    let tail_times = &times[split..];
    let ones = alloc::vec![1.0; tail_times.len()];
    let weight = series::cumulative_integral(tail_times, &ones, -1.0 - epsilon)?;
    let weighted = series::cumulative_integral(tail_times, &sq[split..], 1.0 + epsilon)?;
    let t_split = times.get(split).copied().unwrap_or(0.0);
    let head_coef = t_split.sqrt().max(1.0);
    let bound: Vec<f64> = (0..times.len())
        .map(|k| {
            if k <= split {
                head_coef * l2[k].sqrt()
            } else {
                head_coef * l2[split].sqrt() + (weight[k - split] * weighted[k - split]).sqrt()
            }
        })
        .collect();
    let dominated = direct.iter().zip(&bound).all(|(j, b)| *j <= *b * (1.0 + 1e-12) + 1e-300);
    let (tail_increment, tail_ratio) = tail_ratio(times, &direct);
    Ok(L1Neumann {
        total: *direct.last().unwrap_or(&0.0),
        direct,
        bound,
        epsilon,
        tail_increment,
        tail_ratio,
        dominated,
        verdict: if tail_ratio <= TAIL_INCREMENT_LIMIT { Verdict::Integrable } else { Verdict::NotIntegrable },
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SupNormDecay {
    pub sup: Vec<f64>,
    /// `sup_x |q|^3`
    pub cubed: Vec<f64>,
    /// `|Q|^3 + 3 ||q||_4^2 ||q_x||`
    pub cubed_bound: Vec<f64>,
    pub bound_holds: bool,
    pub first_window_mean: f64,
    pub last_window_mean: f64,
    pub trend_slope: f64,
    pub fit: Option<DecayFit>,
    pub verdict: Verdict,
}

/// `sup_norm_series`
pub fn sup_norm_series(diag: &DiagnosticsSeries) -> SupNormDecay {
    let times = diag.times();
    let sup = diag.sup();
    let cubed: Vec<f64> = sup.iter().map(|s| s * s * s).collect();
    let cubed_bound: Vec<f64> = diag
        .samples
        .iter()
        .map(|s| s.traces.q.norm().powi(3) + 3.0 * s.norms.quartic.sqrt() * s.norms.grad_sq.sqrt())
        .collect();
    let bound_holds = cubed.iter().zip(&cubed_bound).all(|(l, r)| *l <= *r * (1.0 + 1e-12));

    let t_end = horizon(&times);
    let after = series::window_indices(&times, 1.0, t_end);
    let (mut first_mean, mut last_mean, mut slope) = (0.0, 0.0, 0.0);
    if after.len() >= 2 {
        let m = (after.len() / 10).max(1);
        let win = &sup[after.clone()];
        first_mean = win[..m].iter().sum::<f64>() / m as f64;
        last_mean = win[win.len() - m..].iter().sum::<f64>() / m as f64;
        slope = series::linear_fit(&times[after.clone()], win).0;
    }
    let fit = decay_fit(&times, &sup, (10.0, t_end)).ok();
    let verdict = if after.len() >= 2 && last_mean < first_mean && slope < 0.0 {
        Verdict::Decaying
    } else {
        Verdict::NotDecaying
    };
    SupNormDecay {
        sup,
        cubed,
        cubed_bound,
        bound_holds,
        first_window_mean: first_mean,
        last_window_mean: last_mean,
        trend_slope: slope,
        fit,
        verdict,
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuarticDecay {
    /// `t ||q(t)||_4^4`
    pub weighted: Vec<f64>,
    pub sup_over_unit: f64,
    pub sup_over_late: f64,
    pub sup_over_run: f64,
    pub within_factor: bool,
    pub fit: Option<DecayFit>,
}

/// `t ||q||_4^4` over `[1, T]` and the decay exponent of `||q||_4^4` on `[10, T]`.
pub fn quartic_decay(diag: &DiagnosticsSeries) -> QuarticDecay {
    let times = diag.times();
    let quartic = diag.quartic();
    let weighted: Vec<f64> = times.iter().zip(&quartic).map(|(t, k)| t * k).collect();
    let t_end = horizon(&times);
    let sup_over_unit = series::window_max(&times, &weighted, 1.0, 2.0);
    let sup_over_late = series::window_max(&times, &weighted, 0.5 * t_end, t_end);
    let sup_over_run = series::window_max(&times, &weighted, 1.0, t_end);
    QuarticDecay {
        within_factor: sup_over_late <= QUARTIC_FACTOR * sup_over_unit,
        fit: decay_fit(&times, &quartic, (10.0, t_end)).ok(),
        weighted,
        sup_over_unit,
        sup_over_late,
        sup_over_run,
    }
}

/// Running suprema of `||q||`, `||q_x||`, `||q||_4`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NormSups {
    pub l2: f64,
    pub gradient: f64,
    pub l4: f64,
}

pub fn norm_sups(diag: &DiagnosticsSeries) -> NormSups {
    diag.samples.iter().fold(NormSups::default(), |acc, s| NormSups {
        l2: acc.l2.max(s.norms.mass.sqrt()),
        gradient: acc.gradient.max(s.norms.grad_sq.sqrt()),
        l4: acc.l4.max(s.norms.quartic.sqrt().sqrt()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EstimateOptions {
    /// Weight exponent for the weighted Neumann integral; defaults to the
    /// scenario's feasible `p`.
    pub p_override: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EstimateReport {
    pub admissibility: Option<AdmissibilityClass>,
    pub decay_exponents: Option<(f64, f64)>,
    pub neumann_l2: NeumannL2Ratio,
    pub f_check: FBoundedness,
    pub quartic: QuarticDecay,
    pub sup_norm: SupNormDecay,
    pub weighted: TailIntegral,
    pub l1: L1Neumann,
    pub norm_sups: NormSups,
}

/// Fallback weight when the scenario has no feasible `p`; the weighted
/// integral is then computed without a verdict.
pub const DIAGNOSTIC_P: f64 = 1.1;

/// Runs every check on a completed run.
pub fn assess(
    diag: &DiagnosticsSeries,
    init: &SpatialNorms,
    exponents: Option<(f64, f64)>,
    options: &EstimateOptions,
) -> Result<EstimateReport, EstimateError> {
    let admissibility = exponents.map(|(a, b)| AdmissibilityClass::from_exponents(a, b));
    let times = diag.times();
    let neumann = diag.neumann();
    let p = options.p_override.or(admissibility.and_then(|a| a.p_feasible)).unwrap_or(DIAGNOSTIC_P);

    let mut weighted = if p > 1.0 && horizon(&times) >= 10.0 {
        weighted_neumann_integral(&times, &neumann, p)?
    } else {
        weighted_neumann_series(&times, &neumann, p)?
    };
    let mut l1 = l1_neumann_partial(&times, &neumann, (p - 1.0).max(f64::EPSILON))?;

    if let Some((alpha, beta)) = exponents {
        let near = |a_c: f64, b_c: f64| (alpha - a_c).abs() < THRESHOLD_MARGIN || (beta - b_c).abs() < THRESHOLD_MARGIN;
        if weighted.verdict == Some(Verdict::Divergent) && near(1.5, 2.5) {
            weighted.verdict = Some(Verdict::Inconclusive);
        }
        if l1.verdict == Verdict::NotIntegrable && near(2.5, 2.5) {
            l1.verdict = Verdict::Inconclusive;
        }
    }

    Ok(EstimateReport {
        admissibility,
        decay_exponents: exponents,
        neumann_l2: ratio_mainineq1(diag, init)?,
        f_check: check_f(diag)?,
        quartic: quartic_decay(diag),
        sup_norm: sup_norm_series(diag),
        weighted,
        l1,
        norm_sups: norm_sups(diag),
    })
}

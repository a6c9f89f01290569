//! Problem instances: closed-form initial profiles, Dirichlet signals, and the
//! checks that tie them to a truncated grid.

// float methods come from std when a dev-dependency links it
#[allow(unused_imports)]
use num_traits::Float;
use core::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::manufactured::{ForcingTerm, Manufactured};

/// Relative mass allowed beyond `L/2` before a configuration is rejected.
pub const TRUNCATION_TOLERANCE: f64 = 1e-12;

/// Default tolerance on `|q0(0) - Q(0)|`.
pub const DEFAULT_COMPAT_TOL: f64 = 1e-12;

/// Smallest grid the solver accepts.
pub const MIN_GRID_POINTS: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("compatibility violated: |q0(0) - Q(0)| = {mismatch:e} exceeds {tolerance:e}")]
    Compatibility { mismatch: f64, tolerance: f64 },
    #[error(
        "domain too short: initial mass beyond L/2 = {half_length} is {ratio:e} of the total (limit {limit:e})"
    )]
    Truncation { half_length: f64, ratio: f64, limit: f64 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },
}

fn check_positive(name: &'static str, value: f64) -> Result<(), ScenarioError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ScenarioError::InvalidParameter { name, reason: "must be a finite positive number" })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ProfileFamily {
    /// `A exp(-((x - c)/w)^2)`
    Gaussian,
    /// `A exp(-(x - c)/w)`
    ExpDecay,
    /// `A exp(1 - 1/(1 - s^2))` for `s = (x - c)/w` in `(-1, 1)`, zero outside.
    CompactBump,
    Zero,
}

/// Initial datum `q0(x)`. Every family is smooth with super-polynomial decay,
/// so `q0` is in `H^1 ∩ L^4` and `x q0` is in `L^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InitialProfile {
    pub family: ProfileFamily,
    pub amplitude: Complex64,
    pub width: f64,
    pub center: f64,
}

impl InitialProfile {
    pub fn zero() -> Self {
        Self { family: ProfileFamily::Zero, amplitude: Complex64::new(0.0, 0.0), width: 1.0, center: 0.0 }
    }

    pub fn gaussian(amplitude: Complex64, width: f64, center: f64) -> Self {
        Self { family: ProfileFamily::Gaussian, amplitude, width, center }
    }

    pub fn exp_decay(amplitude: Complex64, width: f64, center: f64) -> Self {
        Self { family: ProfileFamily::ExpDecay, amplitude, width, center }
    }

    pub fn compact_bump(amplitude: Complex64, width: f64, center: f64) -> Self {
        Self { family: ProfileFamily::CompactBump, amplitude, width, center }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        check_positive("initial.width", self.width)?;
        if !(self.center.is_finite() && self.center >= 0.0) {
            return Err(ScenarioError::InvalidParameter {
                name: "initial.center",
                reason: "must be finite and nonnegative",
            });
        }
        if !(self.amplitude.re.is_finite() && self.amplitude.im.is_finite()) {
            return Err(ScenarioError::InvalidParameter { name: "initial.amplitude", reason: "must be finite" });
        }
        Ok(())
    }

    /// Real shape factor `g(x)` with `q0 = A g(x)`.
    fn shape(&self, x: f64) -> f64 {
        let s = (x - self.center) / self.width;
        match self.family {
            ProfileFamily::Gaussian => (-s * s).exp(),
            ProfileFamily::ExpDecay => (-s).exp(),
            ProfileFamily::CompactBump => bump(s),
            ProfileFamily::Zero => 0.0,
        }
    }

    fn shape_derivative(&self, x: f64) -> f64 {
        let w = self.width;
        let s = (x - self.center) / w;
        match self.family {
            ProfileFamily::Gaussian => -2.0 * s / w * (-s * s).exp(),
            ProfileFamily::ExpDecay => -(-s).exp() / w,
            ProfileFamily::CompactBump => {
                let b = bump(s);
                if b == 0.0 {
                    0.0
                } else {
                    let d = 1.0 - s * s;
                    -2.0 * s / (d * d) * b / w
                }
            }
            ProfileFamily::Zero => 0.0,
        }
    }

    pub fn value(&self, x: f64) -> Complex64 {
        self.amplitude * self.shape(x)
    }

    pub fn derivative(&self, x: f64) -> Complex64 {
        self.amplitude * self.shape_derivative(x)
    }

    /// `∫_a^∞ |q0|^2 dx` for `a >= 0`.
    pub fn mass_beyond(&self, a: f64) -> f64 {
        let amp2 = self.amplitude.norm_sqr();
        let (c, w) = (self.center, self.width);
        match self.family {
            ProfileFamily::Gaussian => {
                amp2 * w / core::f64::consts::SQRT_2 * PI.sqrt() / 2.0
                    * libm::erfc(core::f64::consts::SQRT_2 * (a - c) / w)
            }
            ProfileFamily::ExpDecay => amp2 * w / 2.0 * (-2.0 * (a - c) / w).exp(),
            ProfileFamily::CompactBump => {
                let lo = a.max(c - w);
                let hi = c + w;
                if lo >= hi {
                    0.0
                } else {
                    amp2 * simpson(|x| bump((x - c) / w).powi(2), lo, hi, 4096)
                }
            }
            ProfileFamily::Zero => 0.0,
        }
    }

    /// `||q0||^2` over the half-line.
    pub fn mass(&self) -> f64 {
        self.mass_beyond(0.0)
    }
}

fn bump(s: f64) -> f64 {
    if s.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels + panels % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Dirichlet datum `Q(t)` together with its exact derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case"))]
pub enum DirichletSignal {
    Zero,
    /// `Q0 (1 + t/τ)^{-α}`, so `Q_t = O(t^{-α-1})`.
    PowerDecay { q0: Complex64, alpha: f64, timescale: f64 },
    /// `Q0 exp(-t/τ)`
    ExpDecay { q0: Complex64, timescale: f64 },
}

impl DirichletSignal {
    pub fn power_decay(q0: Complex64, alpha: f64, timescale: f64) -> Self {
        Self::PowerDecay { q0, alpha, timescale }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        match *self {
            Self::Zero => Ok(()),
            Self::PowerDecay { q0, alpha, timescale } => {
                check_positive("dirichlet.alpha", alpha)?;
                check_positive("dirichlet.timescale", timescale)?;
                check_finite_complex("dirichlet.q0", q0)
            }
            Self::ExpDecay { q0, timescale } => {
                check_positive("dirichlet.timescale", timescale)?;
                check_finite_complex("dirichlet.q0", q0)
            }
        }
    }

    /// Returns `(Q(t), Q_t(t))`.
    pub fn eval(&self, t: f64) -> (Complex64, Complex64) {
        match *self {
            Self::Zero => (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
            Self::PowerDecay { q0, alpha, timescale } => {
                let s = 1.0 + t / timescale;
                let q = q0 * s.powf(-alpha);
                let qt = q0 * (-alpha / timescale * s.powf(-alpha - 1.0));
                (q, qt)
            }
            Self::ExpDecay { q0, timescale } => {
                let e = (-t / timescale).exp();
                (q0 * e, q0 * (-e / timescale))
            }
        }
    }

    /// Decay exponents `(α, β)` of `Q` and `Q_t`. Exponentially decaying and
    /// vanishing signals report infinity.
    pub fn decay_exponents(&self) -> (f64, f64) {
        match *self {
            Self::PowerDecay { alpha, .. } => (alpha, alpha + 1.0),
            Self::Zero | Self::ExpDecay { .. } => (f64::INFINITY, f64::INFINITY),
        }
    }
}

fn check_finite_complex(name: &'static str, z: Complex64) -> Result<(), ScenarioError> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(ScenarioError::InvalidParameter { name, reason: "must be finite" })
    }
}

/// `eval_dirichlet`: closed-form `(Q(t), Q_t(t))`.
pub fn eval_dirichlet(signal: &DirichletSignal, t: f64) -> (Complex64, Complex64) {
    signal.eval(t)
}

/// Anything that can supply the boundary trace `(Q(t), Q_t(t))` at `x = 0`.
pub trait BoundaryData {
    fn trace(&self, t: f64) -> (Complex64, Complex64);
}

impl BoundaryData for DirichletSignal {
    fn trace(&self, t: f64) -> (Complex64, Complex64) {
        self.eval(t)
    }
}

/// Which decay hypotheses a boundary signal satisfies.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AdmissibilityClass {
    /// `α > 1/2` and `β > 1/2`: finite `∫|P|^2`.
    pub l2_neumann: bool,
    /// `α > 3/2` and `β > 5/2`: `t^{-1}` decay of `||q||_4^4`, pointwise decay.
    pub quartic_decay: bool,
    /// `α > 5/2` and `β > 5/2`: finite `∫|P|`.
    pub l1_neumann: bool,
    /// Largest grid value `p = 1 + ε` satisfying the weighted-bound constraints.
    pub p_feasible: Option<f64>,
}

/// Step of the `ε` grid searched for a feasible weight exponent.
pub const P_GRID_STEP: f64 = 0.01;
/// Number of grid points; the search covers `p` in `(1, 2]`.
pub const P_GRID_LEN: usize = 100;

/// The constraint system on `(α, β, p)` under which `∫ t^p |P|^2 dt` is finite.
pub fn weighted_constraints_hold(alpha: f64, beta: f64, p: f64) -> bool {
    p > 1.0
        && alpha > 1.5
        && beta > 2.5
        && alpha > 2.0 * p + 0.5
        && alpha + beta > p + 1.0
        && alpha > (p + 1.0) / 4.0
}

impl AdmissibilityClass {
    pub fn from_exponents(alpha: f64, beta: f64) -> Self {
        let p_feasible = (1..=P_GRID_LEN)
            .rev()
            .map(|k| 1.0 + k as f64 * P_GRID_STEP)
            .find(|&p| weighted_constraints_hold(alpha, beta, p));
        Self {
            l2_neumann: alpha > 0.5 && beta > 0.5,
            quartic_decay: alpha > 1.5 && beta > 2.5,
            l1_neumann: alpha > 2.5 && beta > 2.5,
            p_feasible,
        }
    }
}

pub fn classify_admissibility(signal: &DirichletSignal) -> AdmissibilityClass {
    let (alpha, beta) = signal.decay_exponents();
    AdmissibilityClass::from_exponents(alpha, beta)
}

/// Initial and boundary data of a run: either closed-form physical data or a
/// manufactured solution whose traces and forcing replace them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemData {
    Physical { initial: InitialProfile, dirichlet: DirichletSignal },
    Manufactured(Manufactured),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub length: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverTolerances {
    /// Relative sup-norm increment at which the fixed-point sweep stops.
    pub fp_tol: f64,
    pub fp_max_iters: usize,
}

impl Default for SolverTolerances {
    fn default() -> Self {
        Self { fp_tol: 1e-12, fp_max_iters: 50 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioConfig {
    pub data: ProblemData,
    pub grid: GridSpec,
    pub dt: f64,
    pub horizon: f64,
    pub sample_stride: usize,
    pub tolerances: SolverTolerances,
    pub compat_tol: f64,
}

impl ScenarioConfig {
    /// Gaussian data of unit width with `Q = (1 + t)^-3`, run to `T = 100`.
    ///
    /// The domain is `L = 1600` with `h ≈ 0.0488`. Free dispersion of the
    /// unit Gaussian gives `|q(x,t)| ≈ exp(-x^2 / 16t^2) / (2 sqrt t)`, which
    /// at `L = 400` crosses the leakage limit near `t = 25`; `L = 16 T` keeps
    /// the far edge below it for the whole run.
    pub fn default_verification() -> Self {
        let one = Complex64::new(1.0, 0.0);
        Self {
            data: ProblemData::Physical {
                initial: InitialProfile::gaussian(one, 1.0, 0.0),
                dirichlet: DirichletSignal::power_decay(one, 3.0, 1.0),
            },
            grid: GridSpec { length: 1600.0, points: 32765 },
            dt: 0.01,
            horizon: 100.0,
            sample_stride: 10,
            tolerances: SolverTolerances::default(),
            compat_tol: DEFAULT_COMPAT_TOL,
        }
    }

    pub fn initial_profile(&self) -> Option<&InitialProfile> {
        match &self.data {
            ProblemData::Physical { initial, .. } => Some(initial),
            ProblemData::Manufactured(_) => None,
        }
    }

    pub fn dirichlet(&self) -> Option<&DirichletSignal> {
        match &self.data {
            ProblemData::Physical { dirichlet, .. } => Some(dirichlet),
            ProblemData::Manufactured(_) => None,
        }
    }

    pub fn forcing(&self) -> Option<ForcingTerm> {
        match self.data {
            ProblemData::Manufactured(kind) => Some(ForcingTerm::new(kind)),
            ProblemData::Physical { .. } => None,
        }
    }

    /// `q(x, 0)`.
    pub fn initial_value(&self, x: f64) -> Complex64 {
        match &self.data {
            ProblemData::Physical { initial, .. } => initial.value(x),
            ProblemData::Manufactured(kind) => ForcingTerm::new(*kind).solution(x, 0.0),
        }
    }

    /// `(Q(t), Q_t(t))` actually imposed at `x = 0`.
    pub fn boundary(&self, t: f64) -> (Complex64, Complex64) {
        match &self.data {
            ProblemData::Physical { dirichlet, .. } => dirichlet.eval(t),
            ProblemData::Manufactured(kind) => ForcingTerm::new(*kind).trace(t),
        }
    }

    pub fn admissibility(&self) -> Option<AdmissibilityClass> {
        self.dirichlet().map(classify_admissibility)
    }

    /// Number of time steps; `horizon / dt` must be a whole multiple of the
    /// sample stride.
    pub fn steps(&self) -> usize {
        libm::round(self.horizon / self.dt) as usize
    }

    pub fn sample_interval(&self) -> f64 {
        self.sample_stride as f64 * self.dt
    }

    pub fn grid_spacing(&self) -> f64 {
        self.grid.length / (self.grid.points - 1) as f64
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        check_positive("grid.length", self.grid.length)?;
        if self.grid.points < MIN_GRID_POINTS {
            return Err(ScenarioError::InvalidParameter { name: "grid.points", reason: "must be at least 16" });
        }
        check_positive("solver.dt", self.dt)?;
        check_positive("solver.horizon", self.horizon)?;
        check_positive("solver.fp_tol", self.tolerances.fp_tol)?;
        check_positive("solver.compat_tol", self.compat_tol)?;
        if self.tolerances.fp_max_iters == 0 {
            return Err(ScenarioError::InvalidParameter { name: "solver.fp_max_iters", reason: "must be positive" });
        }
        if self.sample_stride == 0 {
            return Err(ScenarioError::InvalidParameter { name: "solver.sample_stride", reason: "must be positive" });
        }
        let ratio = self.horizon / self.dt;
        if (ratio - libm::round(ratio)).abs() > 1e-9 * ratio.max(1.0) {
            return Err(ScenarioError::InvalidParameter {
                name: "solver.horizon",
                reason: "must be a whole number of time steps",
            });
        }
        let steps = self.steps();
        if steps == 0 || steps % self.sample_stride != 0 {
            return Err(ScenarioError::InvalidParameter {
                name: "solver.sample_stride",
                reason: "must divide the number of time steps",
            });
        }

        if let ProblemData::Physical { initial, dirichlet } = &self.data {
            initial.validate()?;
            dirichlet.validate()?;
            let mismatch = (initial.value(0.0) - dirichlet.eval(0.0).0).norm();
            if !(mismatch <= self.compat_tol) {
                return Err(ScenarioError::Compatibility { mismatch, tolerance: self.compat_tol });
            }
            let total = initial.mass();
            if total > 0.0 {
                let half_length = self.grid.length / 2.0;
                let ratio = initial.mass_beyond(half_length) / total;
                if ratio > TRUNCATION_TOLERANCE {
                    return Err(ScenarioError::Truncation { half_length, ratio, limit: TRUNCATION_TOLERANCE });
                }
            }
        }
        Ok(())
    }
}

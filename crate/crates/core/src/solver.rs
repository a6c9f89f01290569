//! Implicit midpoint finite differences for `i q_t + q_xx - 2|q|^2 q = f` on
//! `[0, L]` with `q(0,t) = Q(t)` and `q(L,t) = 0`.
//!
//! One step solves, at every interior node,
//!
//! ```text
//! i (u_j - v_j)/dt + δ²m_j - 2|m_j|^2 m_j = f(x_j, t + dt/2),   m = (u + v)/2
//! ```
//!
//! for the new values `u`. The cubic term is resolved by fixed-point sweeps on
//! `m`; each sweep solves the same constant-coefficient tridiagonal system, which
//! is factored once per run.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use thiserror::Error;

use crate::functionals::{self, DiagnosticsSeries, SpatialNorms};
use crate::identities::{self, IdentityResiduals};
use crate::manufactured::ForcingTerm;
use crate::scenario::{BoundaryData, ScenarioConfig, ScenarioError};
use crate::series::SeriesError;
use crate::tridiag::ToeplitzTridiag;

/// Leakage allowed at the last interior node, relative to the initial sup-norm.
pub const LEAKAGE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Config(#[from] ScenarioError),
    #[error("fixed-point iteration did not converge in step {step}: last relative increment {increment:e}")]
    NoConvergence { step: usize, increment: f64 },
    #[error("non-finite value produced in step {step}")]
    NonFinite { step: usize },
    #[error("truncation failure at t = {t}: |q| = {value:e} next to x = L exceeds {limit:e}")]
    Truncation { t: f64, value: f64, limit: f64 },
    #[error("grid needs at least 16 nodes and a positive spacing")]
    BadGrid,
    #[error("singular time-stepping matrix")]
    Singular,
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Uniform nodes `x_j = j h`, `h = L/(N-1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    pub length: f64,
    pub points: usize,
}

impl SpatialGrid {
    pub fn new(length: f64, points: usize) -> Result<Self, SolverError> {
        if points < crate::scenario::MIN_GRID_POINTS || !(length > 0.0 && length.is_finite()) {
            return Err(SolverError::BadGrid);
        }
        Ok(Self { length, points })
    }

    pub fn spacing(&self) -> f64 {
        self.length / (self.points - 1) as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.spacing()
    }
}

/// Complex samples `q_j ≈ q(x_j, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub t: f64,
    pub h: f64,
    pub values: Vec<Complex64>,
}

impl StateVector {
    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.h
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// `build_initial_state`: `q_j = q0(x_j)` with the last node pinned to zero.
pub fn build_initial_state(cfg: &ScenarioConfig) -> Result<StateVector, ScenarioError> {
    cfg.validate()?;
    let grid = SpatialGrid { length: cfg.grid.length, points: cfg.grid.points };
    let h = grid.spacing();
    let n = grid.points;
    let mut values: Vec<Complex64> = (0..n).map(|j| cfg.initial_value(j as f64 * h)).collect();
    values[n - 1] = Complex64::new(0.0, 0.0);
    Ok(StateVector { t: 0.0, h, values })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub dt: f64,
    pub fp_tol: f64,
    pub fp_max_iters: usize,
    pub forcing: Option<ForcingTerm>,
}

impl SolverParams {
    pub fn new(dt: f64) -> Self {
        Self { dt, fp_tol: 1e-12, fp_max_iters: 50, forcing: None }
    }

    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            dt: cfg.dt,
            fp_tol: cfg.tolerances.fp_tol,
            fp_max_iters: cfg.tolerances.fp_max_iters,
            forcing: cfg.forcing(),
        }
    }
}

const CUBIC_CUTOFF: f64 = 1e-100;

/// Per-step statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub iterations: usize,
    /// Relative sup-norm increment of every sweep, up to 50 entries.
    pub increments: [f64; 50],
}

impl Default for StepInfo {
    fn default() -> Self {
        Self { iterations: 0, increments: [0.0; 50] }
    }
}

impl StepInfo {
    pub fn increments(&self) -> &[f64] {
        &self.increments[..self.iterations.min(50)]
    }
}

/// Reusable time stepper for one grid and step size.
#[derive(Debug, Clone)]
pub struct Stepper {
    params: SolverParams,
    h: f64,
    n: usize,
    matrix: ToeplitzTridiag,
    base: Vec<Complex64>,
    rhs: Vec<Complex64>,
    next: Vec<Complex64>,
    forcing_mid: Vec<Complex64>,
    steps_taken: usize,
}

impl Stepper {
    pub fn new(grid: SpatialGrid, params: SolverParams) -> Result<Self, SolverError> {
        let h = grid.spacing();
        let n = grid.points;
        if n < crate::scenario::MIN_GRID_POINTS || !(h > 0.0) {
            return Err(SolverError::BadGrid);
        }
        // Scaled by dt: (i - r) u_j + (r/2)(u_{j-1} + u_{j+1}), r = dt/h^2.
        let r = params.dt / (h * h);
        let matrix = ToeplitzTridiag::new(n - 2, Complex64::new(-r, 1.0), Complex64::new(0.5 * r, 0.0))
            .ok_or(SolverError::Singular)?;
        Ok(Self {
            params,
            h,
            n,
            matrix,
            base: vec![Complex64::new(0.0, 0.0); n - 2],
            rhs: vec![Complex64::new(0.0, 0.0); n - 2],
            next: vec![Complex64::new(0.0, 0.0); n],
            forcing_mid: vec![Complex64::new(0.0, 0.0); n - 2],
            steps_taken: 0,
        })
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    /// Advances `state` by one step in place.
    pub fn advance(&mut self, state: &mut StateVector, boundary: &impl BoundaryData) -> Result<StepInfo, SolverError> {
        let step_index = self.steps_taken + 1;
        let n = self.n;
        let dt = self.params.dt;
        let h = self.h;
        let r = dt / (h * h);
        let half_r = 0.5 * r;
        let v = &state.values;
        let t_new = step_index as f64 * dt;
        let t_mid = t_new - 0.5 * dt;
        let q_left = boundary.trace(t_new).0;
        let i = Complex64::new(0.0, 1.0);

        if let Some(f) = &self.params.forcing {
            for (k, slot) in self.forcing_mid.iter_mut().enumerate() {
                *slot = f.forcing((k + 1) as f64 * h, t_mid) * dt;
            }
        }
        // Everything that does not depend on the midpoint iterate.
        for j in 1..n - 1 {
            let lap = v[j - 1] - v[j] * 2.0 + v[j + 1];
            let mut b = i * v[j] - lap * half_r;
            if j == 1 {
                b = b - q_left * half_r;
            }
            if self.params.forcing.is_some() {
                b = b + self.forcing_mid[j - 1];
            }
            self.base[j - 1] = b;
        }

        self.next.copy_from_slice(v);
        self.next[0] = q_left;
        self.next[n - 1] = Complex64::new(0.0, 0.0);

        let mut info = StepInfo::default();
        loop {
            for j in 1..n - 1 {
                let m = (v[j] + self.next[j]) * 0.5;
                let a = m.norm_sqr();
                // the cube of anything this small underflows through subnormals
                self.rhs[j - 1] = if a < CUBIC_CUTOFF { self.base[j - 1] } else { self.base[j - 1] + m * (2.0 * dt * a) };
            }
            self.matrix.solve_in_place(&mut self.rhs);

            // squared sup norms; one square root per sweep
            let mut diff: f64 = 0.0;
            let mut size: f64 = 0.0;
            let mut finite = true;
            for j in 1..n - 1 {
                let u = crate::tridiag::flush(self.rhs[j - 1]);
                finite &= u.re.is_finite() && u.im.is_finite();
                diff = diff.max((u - self.next[j]).norm_sqr());
                size = size.max(u.norm_sqr());
                self.next[j] = u;
            }
            if !finite {
                return Err(SolverError::NonFinite { step: step_index });
            }
            let increment = if size > 0.0 { libm::sqrt(diff / size) } else { libm::sqrt(diff) };
            if info.iterations < info.increments.len() {
                info.increments[info.iterations] = increment;
            }
            info.iterations += 1;
            if increment <= self.params.fp_tol {
                break;
            }
            if info.iterations >= self.params.fp_max_iters {
                return Err(SolverError::NoConvergence { step: step_index, increment });
            }
        }

        state.values.copy_from_slice(&self.next);
        state.t = t_new;
        self.steps_taken = step_index;
        Ok(info)
    }
}

/// `step`: one implicit midpoint step from `state`, which must sit at a whole
/// multiple of `params.dt`.
pub fn step(state: &StateVector, params: &SolverParams, boundary: &impl BoundaryData) -> Result<StateVector, SolverError> {
    let grid = SpatialGrid::new(state.h * (state.values.len() - 1) as f64, state.values.len())?;
    let mut stepper = Stepper::new(grid, *params)?;
    stepper.steps_taken = libm::round(state.t / params.dt) as usize;
    let mut next = state.clone();
    stepper.advance(&mut next, boundary)?;
    Ok(next)
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub diagnostics: DiagnosticsSeries,
    pub residuals: IdentityResiduals,
    pub initial_norms: SpatialNorms,
    pub final_state: StateVector,
    pub max_fp_iterations: usize,
}

/// `run`: integrates the scenario to its horizon.
pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput, SolverError> {
    run_observed(cfg, |_| {})
}

struct ScenarioBoundary<'a>(&'a ScenarioConfig);

impl BoundaryData for ScenarioBoundary<'_> {
    fn trace(&self, t: f64) -> (Complex64, Complex64) {
        self.0.boundary(t)
    }
}

/// Like [`run`], calling `observer` with the state at every sample.
pub fn run_observed(cfg: &ScenarioConfig, mut observer: impl FnMut(&StateVector)) -> Result<RunOutput, SolverError> {
    let mut state = build_initial_state(cfg)?;
    let params = SolverParams::from_config(cfg);
    let grid = SpatialGrid::new(cfg.grid.length, cfg.grid.points)?;
    let mut stepper = Stepper::new(grid, params)?;
    let boundary = ScenarioBoundary(cfg);
    let forcing = params.forcing;
    let n = grid.points;

    let initial_norms = functionals::spatial_norms(&state);
    let leak_limit = LEAKAGE_TOLERANCE * state.sup_norm();
    let mut diagnostics = DiagnosticsSeries::default();
    diagnostics.push(functionals::observe(&state, &boundary, forcing.as_ref()));
    observer(&state);

    let mut max_iters = 0;
    for k in 1..=cfg.steps() {
        let info = stepper.advance(&mut state, &boundary)?;
        max_iters = max_iters.max(info.iterations);
        let edge = state.values[n - 2].norm();
        if edge > leak_limit {
            return Err(SolverError::Truncation { t: state.t, value: edge, limit: leak_limit });
        }
        if k % cfg.sample_stride == 0 {
            diagnostics.push(functionals::observe(&state, &boundary, forcing.as_ref()));
            observer(&state);
        }
    }
    let residuals = identities::compute_all(&diagnostics)?;
    Ok(RunOutput { diagnostics, residuals, initial_norms, final_state: state, max_fp_iterations: max_iters })
}

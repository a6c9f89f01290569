//! Joint `(h, dt)` refinement studies on manufactured solutions.
//!
//! Level `l` uses `(N - 1) 2^l + 1` nodes and `dt / 2^l`; the sample stride in
//! steps is kept, so the sampling interval halves with `dt` and the identity
//! residuals refine with the scheme.

// float methods come from std when a dev-dependency links it
#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use thiserror::Error;

use crate::identities::IdentityResiduals;
use crate::scenario::{ProblemData, ScenarioConfig};
use crate::series;
use crate::solver::{self, SolverError};

/// Minimum fitted order for the study to pass.
pub const MIN_ORDER: f64 = 1.8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RefinementError {
    #[error("refinement studies need a manufactured-solution configuration")]
    NotManufactured,
    #[error("need at least {needed} refinement levels, got {got}")]
    TooFewLevels { needed: usize, got: usize },
    #[error("level {level}: {source}")]
    Level { level: usize, source: SolverError },
}

/// Worst-case magnitudes at one level.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LevelErrors {
    /// `max_k max_j |q_j(t_k) - q_m(x_j, t_k)|`
    pub solution: f64,
    pub mass: f64,
    pub energy: f64,
    pub neumann_sq: f64,
    pub neumann_sq_imag: f64,
    pub balance: f64,
    /// Relative algebraic virial residual (rounding level, not refined).
    pub virial_relative: f64,
}

impl LevelErrors {
    /// Quantities that must converge, with their names.
    pub fn refined(&self) -> [(&'static str, f64); 6] {
        [
            ("solution", self.solution),
            ("mass", self.mass),
            ("energy", self.energy),
            ("neumann_sq", self.neumann_sq),
            ("neumann_sq_imag", self.neumann_sq_imag),
            ("balance", self.balance),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LevelResult {
    pub level: usize,
    pub h: f64,
    pub dt: f64,
    pub errors: LevelErrors,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Order {
    /// Every level is exact.
    Exact,
    Fitted(f64),
}

impl Order {
    pub fn passes(self, min: f64) -> bool {
        match self {
            Order::Exact => true,
            Order::Fitted(p) => p >= min,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ConvergenceStudy {
    pub levels: Vec<LevelResult>,
    /// Fitted order per refined quantity, in [`LevelErrors::refined`] order.
    pub orders: Vec<(&'static str, Order)>,
}

impl ConvergenceStudy {
    pub fn order_of(&self, name: &str) -> Option<Order> {
        self.orders.iter().find(|(n, _)| *n == name).map(|(_, o)| *o)
    }

    pub fn passes(&self) -> bool {
        self.orders.iter().all(|(_, o)| o.passes(MIN_ORDER))
    }
}

/// Configuration of refinement level `level`.
pub fn refine_config(base: &ScenarioConfig, level: usize) -> ScenarioConfig {
    let factor = 1usize << level;
    let mut cfg = *base;
    cfg.grid.points = (base.grid.points - 1) * factor + 1;
    cfg.dt = base.dt / factor as f64;
    cfg
}

/// Runs one level and measures its errors against the manufactured solution.
pub fn measure_level(cfg: &ScenarioConfig) -> Result<LevelErrors, SolverError> {
    let forcing = match cfg.data {
        ProblemData::Manufactured(kind) => crate::manufactured::ForcingTerm::new(kind),
        ProblemData::Physical { .. } => {
            return Err(SolverError::Config(crate::scenario::ScenarioError::InvalidParameter {
                name: "forcing",
                reason: "refinement needs a manufactured solution",
            }))
        }
    };
    let mut solution: f64 = 0.0;
    let out = solver::run_observed(cfg, |state| {
        for (j, q) in state.values.iter().enumerate() {
            solution = solution.max((q - forcing.solution(state.x(j), state.t)).norm());
        }
    })?;
    let r: &IdentityResiduals = &out.residuals;
    Ok(LevelErrors {
        solution,
        mass: IdentityResiduals::max_abs(&r.mass),
        energy: IdentityResiduals::max_abs(&r.energy),
        neumann_sq: IdentityResiduals::max_abs(&r.neumann_sq),
        neumann_sq_imag: IdentityResiduals::max_abs(&r.neumann_sq_imag),
        balance: IdentityResiduals::max_abs(&r.balance),
        virial_relative: r.virial_relative_max(),
    })
}

/// Least-squares slope of `log e` against `log h`.
pub fn fitted_order(h: &[f64], errors: &[f64]) -> Order {
    if errors.iter().all(|&e| e == 0.0) {
        return Order::Exact;
    }
    let lx: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|&e| e.max(f64::MIN_POSITIVE).ln()).collect();
    Order::Fitted(series::linear_fit(&lx, &ly).0)
}

/// Fits orders to already measured levels.
pub fn analyze(levels: Vec<LevelResult>) -> ConvergenceStudy {
    let h: Vec<f64> = levels.iter().map(|l| l.h).collect();
    let names = LevelErrors::default().refined().map(|(n, _)| n);
    let orders = names
        .iter()
        .enumerate()
        .map(|(i, &name)| {
            let e: Vec<f64> = levels.iter().map(|l| l.errors.refined()[i].1).collect();
            (name, fitted_order(&h, &e))
        })
        .collect();
    ConvergenceStudy { levels, orders }
}

pub fn check_base(base: &ScenarioConfig, levels: usize) -> Result<(), RefinementError> {
    if !matches!(base.data, ProblemData::Manufactured(_)) {
        return Err(RefinementError::NotManufactured);
    }
    if levels < 2 {
        return Err(RefinementError::TooFewLevels { needed: 2, got: levels });
    }
    Ok(())
}

/// Sequential study over `levels` levels.
pub fn convergence_study(base: &ScenarioConfig, levels: usize) -> Result<ConvergenceStudy, RefinementError> {
    check_base(base, levels)?;
    let results = (0..levels)
        .map(|level| {
            let cfg = refine_config(base, level);
            let errors = measure_level(&cfg).map_err(|source| RefinementError::Level { level, source })?;
            Ok(LevelResult { level, h: cfg.grid_spacing(), dt: cfg.dt, errors })
        })
        .collect::<Result<Vec<_>, RefinementError>>()?;
    Ok(analyze(results))
}

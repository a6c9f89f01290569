//! TOML scenario files.
//!
//! ```toml
//! [initial]
//! family = "gaussian"      # gaussian | exp_decay | compact_bump | zero
//! amplitude = 1.0          # real, or [re, im]
//! width = 1.0
//! center = 0.0             # optional
//!
//! [dirichlet]
//! family = "power_decay"   # power_decay | exp_decay | zero
//! q0 = 1.0                 # real, or [re, im]
//! alpha = 3.0              # power_decay only
//! timescale = 1.0
//!
//! [grid]
//! length = 1600.0
//! points = 32765
//!
//! [solver]
//! dt = 0.01
//! horizon = 100.0
//! sample_stride = 10
//! fp_tol = 1e-12           # optional
//! fp_max_iters = 50        # optional
//! compat_tol = 1e-12       # optional
//! ```
//!
//! A `[manufactured]` table with `solution = "zero" | "gaussian_phase" |
//! "power_exp"` replaces `[initial]` and `[dirichlet]`. Unknown keys are
//! rejected.

use halfline_core::scenario::{
    DirichletSignal, GridSpec, InitialProfile, ProblemData, ProfileFamily, ScenarioError, SolverTolerances,
    DEFAULT_COMPAT_TOL,
};
use halfline_core::{Complex64, Manufactured, ScenarioConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("missing key `{0}`")]
    MissingKey(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// A real number or an `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexValue {
    Real(f64),
    Pair([f64; 2]),
}

impl From<ComplexValue> for Complex64 {
    fn from(v: ComplexValue) -> Self {
        match v {
            ComplexValue::Real(re) => Complex64::new(re, 0.0),
            ComplexValue::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub family: Option<ProfileFamily>,
    pub amplitude: Option<ComplexValue>,
    pub width: Option<f64>,
    pub center: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalFamily {
    PowerDecay,
    ExpDecay,
    Zero,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirichletSection {
    pub family: Option<SignalFamily>,
    pub q0: Option<ComplexValue>,
    pub alpha: Option<f64>,
    pub timescale: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManufacturedSection {
    pub solution: Option<Manufactured>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub length: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub sample_stride: Option<usize>,
    pub fp_tol: Option<f64>,
    pub fp_max_iters: Option<usize>,
    pub compat_tol: Option<f64>,
}

/// The document as written, before validation.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub initial: Option<InitialSection>,
    pub dirichlet: Option<DirichletSection>,
    pub manufactured: Option<ManufacturedSection>,
    pub grid: Option<GridSection>,
    pub solver: Option<SolverSection>,
}

fn require<T>(v: Option<T>, key: &str) -> Result<T, ConfigError> {
    v.ok_or_else(|| ConfigError::MissingKey(key.to_string()))
}

/// 1-based line and column of a byte offset.
fn position(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

impl ConfigFile {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| position(text, s.start));
            ConfigError::Syntax { line, column, message: e.message().to_string() }
        })
    }

    fn initial(&self) -> Result<InitialProfile, ConfigError> {
        let s = require(self.initial.as_ref(), "initial")?;
        let family = require(s.family, "initial.family")?;
        if family == ProfileFamily::Zero {
            return Ok(InitialProfile::zero());
        }
        Ok(InitialProfile {
            family,
            amplitude: require(s.amplitude, "initial.amplitude")?.into(),
            width: require(s.width, "initial.width")?,
            center: s.center.unwrap_or(0.0),
        })
    }

    fn dirichlet(&self) -> Result<DirichletSignal, ConfigError> {
        let s = require(self.dirichlet.as_ref(), "dirichlet")?;
        Ok(match require(s.family, "dirichlet.family")? {
            SignalFamily::Zero => DirichletSignal::Zero,
            SignalFamily::PowerDecay => DirichletSignal::PowerDecay {
                q0: require(s.q0, "dirichlet.q0")?.into(),
                alpha: require(s.alpha, "dirichlet.alpha")?,
                timescale: require(s.timescale, "dirichlet.timescale")?,
            },
            SignalFamily::ExpDecay => {
                if s.alpha.is_some() {
                    return Err(ConfigError::Invalid("`dirichlet.alpha` only applies to power_decay".into()));
                }
                DirichletSignal::ExpDecay {
                    q0: require(s.q0, "dirichlet.q0")?.into(),
                    timescale: require(s.timescale, "dirichlet.timescale")?,
                }
            }
        })
    }

    /// Resolves defaults and validates. `horizon_override` replaces
    /// `solver.horizon` before validation.
    pub fn to_scenario(&self, horizon_override: Option<f64>) -> Result<ScenarioConfig, ConfigError> {
        let data = match &self.manufactured {
            Some(m) => {
                if self.initial.is_some() || self.dirichlet.is_some() {
                    return Err(ConfigError::Invalid(
                        "[manufactured] replaces [initial] and [dirichlet]; remove one or the other".into(),
                    ));
                }
                ProblemData::Manufactured(require(m.solution, "manufactured.solution")?)
            }
            None => ProblemData::Physical { initial: self.initial()?, dirichlet: self.dirichlet()? },
        };
        let grid = require(self.grid.as_ref(), "grid")?;
        let solver = require(self.solver.as_ref(), "solver")?;
        let defaults = SolverTolerances::default();
        let cfg = ScenarioConfig {
            data,
            grid: GridSpec { length: require(grid.length, "grid.length")?, points: require(grid.points, "grid.points")? },
            dt: require(solver.dt, "solver.dt")?,
            horizon: match horizon_override {
                Some(h) => h,
                None => require(solver.horizon, "solver.horizon")?,
            },
            sample_stride: require(solver.sample_stride, "solver.sample_stride")?,
            tolerances: SolverTolerances {
                fp_tol: solver.fp_tol.unwrap_or(defaults.fp_tol),
                fp_max_iters: solver.fp_max_iters.unwrap_or(defaults.fp_max_iters),
            },
            compat_tol: solver.compat_tol.unwrap_or(DEFAULT_COMPAT_TOL),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// `parse_config`: text to a validated scenario.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    parse_config_with(text, None)
}

pub fn parse_config_with(text: &str, horizon_override: Option<f64>) -> Result<ScenarioConfig, ConfigError> {
    ConfigFile::from_toml(text)?.to_scenario(horizon_override)
}

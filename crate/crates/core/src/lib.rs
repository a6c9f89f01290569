//! Defocusing cubic NLS `i q_t + q_xx - 2|q|^2 q = 0` on the half-line `x > 0`
//! with Dirichlet data `q(0,t) = Q(t)`.
//!
//! The crate integrates the initial-boundary-value problem on a truncated grid
//! and turns the flux identities and decay estimates for the Neumann trace
//! `P(t) = q_x(0,t)` into residual series and numeric verdicts:
//!
//! - [`scenario`]: closed-form initial/boundary data families, validation and
//!   the admissibility classifier for the boundary-decay exponents.
//! - [`solver`]: second-order implicit midpoint scheme with fixed-point
//!   resolution of the cubic term and a truncation-leakage monitor.
//! - [`functionals`]: spatial norms, moments, the Neumann trace and time
//!   quadrature of sampled series.
//! - [`identities`]: mass, energy, Neumann-square, virial and `t^2 ||q||_4^4`
//!   balance residuals.
//! - [`estimates`]: boundedness ratios, decay-exponent fits, weighted and
//!   `L^1` Neumann integrals, sup-norm decay.
//! - [`refinement`]: joint `(h, dt)` refinement studies on manufactured
//!   solutions.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod estimates;
pub mod functionals;
pub mod identities;
pub mod manufactured;
pub mod refinement;
pub mod scenario;
pub mod series;
pub mod solver;
pub mod tridiag;

pub use num_complex::Complex64;

pub use estimates::{EstimateOptions, EstimateReport};
pub use functionals::{BoundaryTraces, DiagnosticsSeries, MomentDiagnostics, Sample, SpatialNorms};
pub use identities::IdentityResiduals;
pub use manufactured::{ForcingTerm, Manufactured};
pub use scenario::{
    classify_admissibility, AdmissibilityClass, DirichletSignal, InitialProfile, ProblemData,
    ProfileFamily, ScenarioConfig, ScenarioError,
};
pub use solver::{run, RunOutput, SolverError, SolverParams, SpatialGrid, StateVector};

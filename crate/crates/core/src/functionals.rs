//! Spatial functionals and boundary traces of a state.
//!
//! Every spatial integral is a composite trapezoid over the nodes and every
//! derivative uses the same stencil (centered inside, second-order one-sided at
//! the ends). Sharing one rule makes the expansion
//! `∫|xq + 2itq_x|^2 = ∫x^2|q|^2 + 4t^2 ∫|q_x|^2 - 4t y` hold to rounding.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::manufactured::ForcingTerm;
use crate::scenario::BoundaryData;
use crate::solver::StateVector;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpatialNorms {
    /// `||q||^2`
    pub mass: f64,
    /// `||q_x||^2`
    pub grad_sq: f64,
    /// `||q||_4^4`
    pub quartic: f64,
    /// `max_j |q_j|`
    pub sup: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MomentDiagnostics {
    /// `y = Im ∫ x q̄ q_x`
    pub y: f64,
    /// `∫ x^2 |q|^2`
    pub second_moment: f64,
    /// `(q, q_x) = ∫ q conj(q_x)`
    pub cross: Complex64,
    /// `∫ |x q + 2 i t q_x|^2`
    pub shifted_combo: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundaryTraces {
    /// `Q = q(0,t)`, the first node.
    pub q: Complex64,
    /// `Q_t` from the closed-form boundary data.
    pub q_t: Complex64,
    /// `P ≈ q_x(0,t)` from the one-sided stencil.
    pub p: Complex64,
}

/// Forcing contributions to the flux identities when a manufactured forcing
/// `f` drives the equation. Evaluated from the exact manufactured solution.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ForcingSources {
    /// `2 Im ∫ f q̄` (mass)
    pub mass: f64,
    /// `-2 Re ∫ f q̄_t` (energy)
    pub energy: f64,
    /// `-2 Re ∫ f q̄_x` (Neumann square)
    pub neumann: f64,
    /// `2 Re ∫ x f̄ q_x + Re ∫ f q̄` (rate of `y`)
    pub virial_y: f64,
    /// `2 Im ∫ x^2 f q̄` (rate of the second moment)
    pub second_moment: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Sample {
    pub t: f64,
    pub norms: SpatialNorms,
    pub moments: MomentDiagnostics,
    pub traces: BoundaryTraces,
    pub sources: Option<ForcingSources>,
}

/// Time-sampled functionals of one run.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiagnosticsSeries {
    pub samples: Vec<Sample>,
}

macro_rules! column {
    ($name:ident, $ty:ty, |$s:ident| $e:expr) => {
        pub fn $name(&self) -> Vec<$ty> {
            self.samples.iter().map(|$s| $e).collect()
        }
    };
}

impl DiagnosticsSeries {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn push(&mut self, sample: Sample) {
        self.samples.push(sample);
    }

    column!(times, f64, |s| s.t);
    column!(mass, f64, |s| s.norms.mass);
    column!(grad_sq, f64, |s| s.norms.grad_sq);
    column!(quartic, f64, |s| s.norms.quartic);
    column!(sup, f64, |s| s.norms.sup);
    column!(y, f64, |s| s.moments.y);
    column!(second_moment, f64, |s| s.moments.second_moment);
    column!(cross, Complex64, |s| s.moments.cross);
    column!(shifted_combo, f64, |s| s.moments.shifted_combo);
    column!(neumann, Complex64, |s| s.traces.p);
    column!(dirichlet, Complex64, |s| s.traces.q);
    column!(dirichlet_rate, Complex64, |s| s.traces.q_t);
}

/// Composite trapezoid over nodes with spacing `h`.
pub(crate) fn trapezoid(h: f64, values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len();
    let mut acc = 0.0;
    for (j, v) in values.enumerate() {
        acc += if j == 0 || j + 1 == n { 0.5 * v } else { v };
    }
    acc * h
}

/// Nodal derivative: centered in the interior, second-order one-sided at the ends.
pub fn nodal_derivative(values: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = values.len();
    assert!(n >= 3, "derivative stencil needs at least 3 nodes");
    let inv2h = 1.0 / (2.0 * h);
    let mut d = Vec::with_capacity(n);
    d.push((values[1] * 4.0 - values[0] * 3.0 - values[2]) * inv2h);
    for j in 1..n - 1 {
        d.push((values[j + 1] - values[j - 1]) * inv2h);
    }
    d.push((values[n - 1] * 3.0 - values[n - 2] * 4.0 + values[n - 3]) * inv2h);
    d
}

pub fn spatial_norms(state: &StateVector) -> SpatialNorms {
    let d = nodal_derivative(&state.values, state.h);
    norms_with_derivative(state, &d)
}

fn norms_with_derivative(state: &StateVector, d: &[Complex64]) -> SpatialNorms {
    let h = state.h;
    let q = &state.values;
    SpatialNorms {
        mass: trapezoid(h, q.iter().map(|z| z.norm_sqr())),
        grad_sq: trapezoid(h, d.iter().map(|z| z.norm_sqr())),
        quartic: trapezoid(h, q.iter().map(|z| {
            let a = z.norm_sqr();
            a * a
        })),
        sup: q.iter().map(|z| z.norm()).fold(0.0, f64::max),
    }
}

pub fn moment_diagnostics(state: &StateVector) -> MomentDiagnostics {
    let d = nodal_derivative(&state.values, state.h);
    moments_with_derivative(state, &d)
}

fn moments_with_derivative(state: &StateVector, d: &[Complex64]) -> MomentDiagnostics {
    let h = state.h;
    let q = &state.values;
    let t = state.t;
    let x = |j: usize| j as f64 * h;
    let n = q.len();
    let cross_re = trapezoid(h, (0..n).map(|j| (q[j] * d[j].conj()).re));
    let cross_im = trapezoid(h, (0..n).map(|j| (q[j] * d[j].conj()).im));
    MomentDiagnostics {
        y: trapezoid(h, (0..n).map(|j| x(j) * (q[j].conj() * d[j]).im)),
        second_moment: trapezoid(h, (0..n).map(|j| x(j) * x(j) * q[j].norm_sqr())),
        cross: Complex64::new(cross_re, cross_im),
        shifted_combo: trapezoid(
            h,
            (0..n).map(|j| (q[j] * x(j) + Complex64::new(0.0, 2.0 * t) * d[j]).norm_sqr()),
        ),
    }
}

/// `P` by `(-3 q_0 + 4 q_1 - q_2) / (2h)`; `Q` is the first node and `Q_t`
/// comes from the boundary data's closed form.
pub fn neumann_trace(state: &StateVector, boundary: &impl BoundaryData) -> BoundaryTraces {
    let q = &state.values;
    assert!(q.len() >= 4, "Neumann trace needs at least 4 nodes");
    let p = (q[1] * 4.0 - q[0] * 3.0 - q[2]) / (2.0 * state.h);
    BoundaryTraces { q: q[0], q_t: boundary.trace(state.t).1, p }
}

/// Forcing contributions of a manufactured solution at time `t` on the nodes `j h`.
pub fn forcing_sources(forcing: &ForcingTerm, h: f64, n: usize, t: f64) -> ForcingSources {
    let mut src = [0.0f64; 5];
    let mut acc = |j: usize, w: f64| {
        let x = j as f64 * h;
        let f = forcing.forcing(x, t);
        let q = forcing.solution(x, t);
        let qt = forcing.time_derivative(x, t);
        let qx = forcing.space_derivative(x, t);
        src[0] += w * 2.0 * (f * q.conj()).im;
        src[1] += w * -2.0 * (f * qt.conj()).re;
        src[2] += w * -2.0 * (f * qx.conj()).re;
        src[3] += w * (2.0 * x * (f.conj() * qx).re + (f * q.conj()).re);
        src[4] += w * 2.0 * x * x * (f * q.conj()).im;
    };
    for j in 0..n {
        let w = if j == 0 || j + 1 == n { 0.5 * h } else { h };
        acc(j, w);
    }
    ForcingSources { mass: src[0], energy: src[1], neumann: src[2], virial_y: src[3], second_moment: src[4] }
}

/// All functionals of one state.
pub fn observe(state: &StateVector, boundary: &impl BoundaryData, forcing: Option<&ForcingTerm>) -> Sample {
    let d = nodal_derivative(&state.values, state.h);
    Sample {
        t: state.t,
        norms: norms_with_derivative(state, &d),
        moments: moments_with_derivative(state, &d),
        traces: neumann_trace(state, boundary),
        sources: forcing.map(|f| forcing_sources(f, state.h, state.values.len(), state.t)),
    }
}

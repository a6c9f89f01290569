//! Manufactured solutions: closed-form `q_m(x,t)` together with the forcing
//! `f = i ∂_t q_m + ∂_xx q_m - 2|q_m|^2 q_m` that makes them exact solutions of
//! `i q_t + q_xx - 2|q|^2 q = f`.

// float methods come from std when a dev-dependency links it
#[allow(unused_imports)]
use num_traits::Float;
use num_complex::Complex64;

use crate::scenario::BoundaryData;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Manufactured {
    /// `q_m = 0`
    Zero,
    /// `q_m = e^{it} e^{-x^2}`
    GaussianPhase,
    /// `q_m = (1 + t)^{-3} e^{-x}`
    PowerExp,
}

impl Manufactured {
    pub const ALL: [Manufactured; 3] = [Manufactured::Zero, Manufactured::GaussianPhase, Manufactured::PowerExp];

    pub fn name(self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::GaussianPhase => "gaussian_phase",
            Self::PowerExp => "power_exp",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }
}

/// Closed-form forcing and the manufactured solution it belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcingTerm {
    kind: Manufactured,
}

/// `manufactured_forcing`
pub fn manufactured_forcing(kind: Manufactured) -> ForcingTerm {
    ForcingTerm::new(kind)
}

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

impl ForcingTerm {
    pub fn new(kind: Manufactured) -> Self {
        Self { kind }
    }

    pub fn kind(&self) -> Manufactured {
        self.kind
    }

    pub fn solution(&self, x: f64, t: f64) -> Complex64 {
        match self.kind {
            Manufactured::Zero => Complex64::new(0.0, 0.0),
            Manufactured::GaussianPhase => Complex64::from_polar((-x * x).exp(), t),
            Manufactured::PowerExp => Complex64::new((1.0 + t).powi(-3) * (-x).exp(), 0.0),
        }
    }

    pub fn time_derivative(&self, x: f64, t: f64) -> Complex64 {
        let q = self.solution(x, t);
        match self.kind {
            Manufactured::Zero => q,
            Manufactured::GaussianPhase => I * q,
            Manufactured::PowerExp => q * (-3.0 / (1.0 + t)),
        }
    }

    pub fn space_derivative(&self, x: f64, t: f64) -> Complex64 {
        let q = self.solution(x, t);
        match self.kind {
            Manufactured::Zero => q,
            Manufactured::GaussianPhase => q * (-2.0 * x),
            Manufactured::PowerExp => -q,
        }
    }

    /// `f(x, t)`
    pub fn forcing(&self, x: f64, t: f64) -> Complex64 {
        let q = self.solution(x, t);
        match self.kind {
            Manufactured::Zero => q,
            // i(iq) + (4x^2 - 2)q - 2 e^{-2x^2} q
            Manufactured::GaussianPhase => q * (4.0 * x * x - 3.0 - 2.0 * (-2.0 * x * x).exp()),
            // i(-3q/s) + q - 2 s^{-6} e^{-2x} q
            Manufactured::PowerExp => {
                let s = 1.0 + t;
                q * Complex64::new(1.0 - 2.0 * s.powi(-6) * (-2.0 * x).exp(), -3.0 / s)
            }
        }
    }

    /// Neumann trace `∂_x q_m(0, t)`.
    pub fn neumann(&self, t: f64) -> Complex64 {
        self.space_derivative(0.0, t)
    }
}

impl BoundaryData for ForcingTerm {
    fn trace(&self, t: f64) -> (Complex64, Complex64) {
        (self.solution(0.0, t), self.time_derivative(0.0, t))
    }
}

//! Flux and virial identities evaluated as residual series on sampled output.
//!
//! Time derivatives of sampled series use the sample stride (centered inside,
//! one-sided at the ends), so residuals converge at the scheme order under
//! joint refinement of `h`, `dt` and the sample stride.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::functionals::DiagnosticsSeries;
use crate::series::{self, SeriesError};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Residual series aligned with the diagnostics samples.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IdentityResiduals {
    pub times: Vec<f64>,
    /// `d/dt ||q||^2 - 2 Im(P Q̄)`
    pub mass: Vec<f64>,
    /// `d/dt ||q_x||^2 + d/dt ||q||_4^4 + 2 Re(P conj(Q_t))`
    pub energy: Vec<f64>,
    /// Real part of `|P|^2 - i d/dt(q,q_x) - i Q conj(Q_t) - |Q|^4`.
    pub neumann_sq: Vec<f64>,
    /// Imaginary part of `i d/dt(q,q_x) + i Q conj(Q_t)`, which must vanish.
    pub neumann_sq_imag: Vec<f64>,
    /// `4ty - (∫x^2|q|^2 + 4t^2 ||q_x||^2 - ∫|xq + 2itq_x|^2)`
    pub virial_alg: Vec<f64>,
    /// Largest magnitude among the four terms of `virial_alg`.
    pub virial_scale: Vec<f64>,
    /// Integrated `t^2 ||q||_4^4` balance.
    pub balance: Vec<f64>,
}

impl IdentityResiduals {
    pub fn max_abs(series: &[f64]) -> f64 {
        series.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Worst `|r| / scale` of the algebraic virial residual; `0` when every
    /// term vanishes.
    pub fn virial_relative_max(&self) -> f64 {
        self.virial_alg
            .iter()
            .zip(&self.virial_scale)
            .map(|(r, s)| if *s > 0.0 { r.abs() / s } else { r.abs() })
            .fold(0.0, f64::max)
    }
}

fn source_or_zero(diag: &DiagnosticsSeries, f: impl Fn(&crate::functionals::ForcingSources) -> f64) -> Vec<f64> {
    diag.samples.iter().map(|s| s.sources.as_ref().map_or(0.0, &f)).collect()
}

fn stride(diag: &DiagnosticsSeries) -> Result<f64, SeriesError> {
    if diag.len() < 3 {
        return Err(SeriesError::TooFewSamples { needed: 3, got: diag.len() });
    }
    series::uniform_stride(&diag.times())
}

/// `residual_mass_flux`
pub fn residual_mass_flux(diag: &DiagnosticsSeries) -> Result<Vec<f64>, SeriesError> {
    let dm = series::derivative(&diag.mass(), stride(diag)?)?;
    let src = source_or_zero(diag, |s| s.mass);
    Ok(diag
        .samples
        .iter()
        .zip(dm)
        .zip(src)
        .map(|((s, d), f)| d - 2.0 * (s.traces.p * s.traces.q.conj()).im - f)
        .collect())
}

/// `residual_energy_flux`
pub fn residual_energy_flux(diag: &DiagnosticsSeries) -> Result<Vec<f64>, SeriesError> {
    let ds = stride(diag)?;
    let dg = series::derivative(&diag.grad_sq(), ds)?;
    let dk = series::derivative(&diag.quartic(), ds)?;
    let src = source_or_zero(diag, |s| s.energy);
    Ok(diag
        .samples
        .iter()
        .enumerate()
        .map(|(k, s)| dg[k] + dk[k] + 2.0 * (s.traces.p * s.traces.q_t.conj()).re - src[k])
        .collect())
}

/// `residual_neumann_sq`: returns the real residual and the stray imaginary part.
pub fn residual_neumann_sq(diag: &DiagnosticsSeries) -> Result<(Vec<f64>, Vec<f64>), SeriesError> {
    let dc = series::derivative(&diag.cross(), stride(diag)?)?;
    let src = source_or_zero(diag, |s| s.neumann);
    let mut re = Vec::with_capacity(diag.len());
    let mut im = Vec::with_capacity(diag.len());
    for (k, s) in diag.samples.iter().enumerate() {
        let tr = &s.traces;
        let bracket = I * dc[k] + I * tr.q * tr.q_t.conj();
        let q2 = tr.q.norm_sqr();
        re.push(tr.p.norm_sqr() - bracket.re - q2 * q2 - src[k]);
        im.push(bracket.im);
    }
    Ok((re, im))
}

/// `residual_virial_algebraic`: raw residuals and the per-sample scale.
pub fn residual_virial_algebraic(diag: &DiagnosticsSeries) -> (Vec<f64>, Vec<f64>) {
    diag.samples
        .iter()
        .map(|s| {
            let t = s.t;
            let lhs = 4.0 * t * s.moments.y;
            let a = s.moments.second_moment;
            let b = 4.0 * t * t * s.norms.grad_sq;
            let c = s.moments.shifted_combo;
            let r = lhs - (a + b - c);
            let scale = lhs.abs().max(a).max(b).max(c);
            (r, scale)
        })
        .unzip()
}

/// Integrated `t^2 ||q||_4^4` balance at every sample.
pub fn balance_series(diag: &DiagnosticsSeries) -> Result<Vec<f64>, SeriesError> {
    if diag.is_empty() {
        return Ok(Vec::new());
    }
    let times = diag.times();
    let pq: Vec<f64> = diag.samples.iter().map(|s| (s.traces.p * s.traces.q.conj()).re).collect();
    let pqt: Vec<f64> = diag.samples.iter().map(|s| (s.traces.p * s.traces.q_t.conj()).re).collect();
    let quartic = diag.quartic();
    let forcing: Vec<f64> = diag
        .samples
        .iter()
        .map(|s| match &s.sources {
            Some(src) => -s.t * src.virial_y + 0.25 * src.second_moment + s.t * s.t * src.energy,
            None => 0.0,
        })
        .collect();

    let int_pq = series::cumulative_integral(&times, &pq, 1.0)?;
    let int_pqt = series::cumulative_integral(&times, &pqt, 2.0)?;
    let int_quartic = series::cumulative_integral(&times, &quartic, 1.0)?;
    let int_forcing = series::cumulative_integral(&times, &forcing, 0.0)?;
    let m0 = diag.samples[0].moments.second_moment;

    Ok(diag
        .samples
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let t = s.t;
            let virial = 0.25
                * (4.0 * t * s.moments.y - s.moments.second_moment + m0 - 4.0 * t * t * s.norms.grad_sq);
            let rhs = virial - int_pq[k] - 2.0 * int_pqt[k] + int_quartic[k] + int_forcing[k];
            t * t * s.norms.quartic - rhs
        })
        .collect())
}

/// `balance_j19`: the integrated balance at one sample index.
pub fn balance_at(diag: &DiagnosticsSeries, index: usize) -> Result<f64, SeriesError> {
    if index >= diag.len() {
        return Err(SeriesError::TooFewSamples { needed: index + 1, got: diag.len() });
    }
    let prefix = DiagnosticsSeries { samples: diag.samples[..=index].to_vec() };
    Ok(balance_series(&prefix)?[index])
}

/// `||q(t)||^2 - ||q_0||^2 - 2 ∫_0^t Im(P Q̄)`: zero up to accumulated scheme error.
pub fn integrated_mass_balance(diag: &DiagnosticsSeries) -> Result<Vec<f64>, SeriesError> {
    if diag.is_empty() {
        return Ok(Vec::new());
    }
    let times = diag.times();
    let flux: Vec<f64> = diag
        .samples
        .iter()
        .map(|s| 2.0 * (s.traces.p * s.traces.q.conj()).im + s.sources.map_or(0.0, |f| f.mass))
        .collect();
    let int = series::cumulative_integral(&times, &flux, 0.0)?;
    let m0 = diag.samples[0].norms.mass;
    Ok(diag.samples.iter().zip(int).map(|(s, i)| s.norms.mass - m0 - i).collect())
}

pub fn compute_all(diag: &DiagnosticsSeries) -> Result<IdentityResiduals, SeriesError> {
    let (virial_alg, virial_scale) = residual_virial_algebraic(diag);
    let (neumann_sq, neumann_sq_imag) = residual_neumann_sq(diag)?;
    Ok(IdentityResiduals {
        times: diag.times(),
        mass: residual_mass_flux(diag)?,
        energy: residual_energy_flux(diag)?,
        neumann_sq,
        neumann_sq_imag,
        virial_alg,
        virial_scale,
        balance: balance_series(diag)?,
    })
}

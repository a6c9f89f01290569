use halfline_core::estimates::decay_fit;
use halfline_core::functionals::{moment_diagnostics, nodal_derivative, neumann_trace, spatial_norms};
use halfline_core::identities::residual_virial_algebraic;
use halfline_core::scenario::{AdmissibilityClass, DirichletSignal, InitialProfile, ProfileFamily};
use halfline_core::series;
use halfline_core::{functionals, Complex64, DiagnosticsSeries, StateVector};
use proptest::prelude::*;

fn state_from(f: impl Fn(f64) -> Complex64, length: f64, n: usize, t: f64) -> StateVector {
    let h = length / (n - 1) as f64;
    StateVector { t, h, values: (0..n).map(|j| f(j as f64 * h)).collect() }
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| Complex64::new(a, b))
}

fn random_state() -> impl Strategy<Value = StateVector> {
    (prop::collection::vec(complex(), 16..200), 0.01..0.5f64, 0.0..50.0f64)
        .prop_map(|(values, h, t)| StateVector { t, h, values })
}

fn signal() -> impl Strategy<Value = DirichletSignal> {
    prop_oneof![
        Just(DirichletSignal::Zero),
        (complex(), 0.3..6.0f64, 0.2..5.0f64).prop_map(|(q0, alpha, timescale)| DirichletSignal::PowerDecay {
            q0,
            alpha,
            timescale
        }),
        (complex(), 0.2..5.0f64).prop_map(|(q0, timescale)| DirichletSignal::ExpDecay { q0, timescale }),
    ]
}

fn flags(a: &AdmissibilityClass) -> [bool; 4] {
    [a.l2_neumann, a.quartic_decay, a.l1_neumann, a.p_feasible.is_some()]
}

proptest! {
    #[test]
    fn admissibility_is_monotone(alpha in 0.0..8.0f64, beta in 0.0..8.0f64, da in 0.0..3.0f64, db in 0.0..3.0f64) {
        let lo = AdmissibilityClass::from_exponents(alpha, beta);
        let hi = AdmissibilityClass::from_exponents(alpha + da, beta + db);
        for (l, h) in flags(&lo).iter().zip(flags(&hi)) {
            prop_assert!(!l || h);
        }
        if let (Some(p), Some(q)) = (lo.p_feasible, hi.p_feasible) {
            prop_assert!(q >= p);
        }
    }

    #[test]
    fn hypotheses_nest(alpha in 0.0..8.0f64, beta in 0.0..8.0f64) {
        let a = AdmissibilityClass::from_exponents(alpha, beta);
        prop_assert!(!a.l1_neumann || a.quartic_decay);
        prop_assert!(!a.quartic_decay || a.l2_neumann);
    }

    #[test]
    fn boundary_rate_matches_richardson(sig in signal(), t in 0.0..20.0f64) {
        // Richardson on the central difference cancels the Δ² term
        let d = 1e-3;
        let cd = |d: f64| (sig.eval(t + d).0 - sig.eval(t - d).0) / (2.0 * d);
        let rich = (cd(d / 2.0) * 4.0 - cd(d)) / 3.0;
        let exact = sig.eval(t).1;
        let scale = exact.norm().max(sig.eval(t).0.norm()).max(1e-30);
        prop_assert!((rich - exact).norm() <= 1e-7 * scale, "{} vs {}", rich, exact);
        // and the plain difference is within (Δ²/6) max|Q'''|, plus rounding
        let third = match sig {
            DirichletSignal::Zero => 0.0,
            DirichletSignal::PowerDecay { q0, alpha, timescale } => {
                1.1 * q0.norm() * alpha * (alpha + 1.0) * (alpha + 2.0) / timescale.powi(3)
            }
            DirichletSignal::ExpDecay { q0, timescale } => 1.1 * q0.norm() / timescale.powi(3),
        };
        prop_assert!((cd(d) - exact).norm() <= d * d / 6.0 * third + 1e-12 * scale / d);
    }

    #[test]
    fn virial_identity_on_random_states(state in random_state()) {
        let s = functionals::observe(&state, &DirichletSignal::Zero, None);
        let (r, scale) = residual_virial_algebraic(&DiagnosticsSeries { samples: vec![s] });
        prop_assert!(r[0].abs() <= 1e-12 * scale[0], "{} vs {}", r[0], scale[0]);
    }

    #[test]
    fn functional_invariants_on_random_states(state in random_state()) {
        let n = spatial_norms(&state);
        let m = moment_diagnostics(&state);
        prop_assert!(n.mass >= 0.0 && n.grad_sq >= 0.0 && n.quartic >= 0.0 && n.sup >= 0.0);
        prop_assert!(n.quartic <= n.sup * n.sup * n.mass * (1.0 + 1e-12));
        prop_assert!(m.second_moment >= 0.0 && m.shifted_combo >= 0.0);
        // discrete Cauchy-Schwarz under the trapezoid weights
        prop_assert!(m.cross.norm() <= (n.mass * n.grad_sq).sqrt() * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn functionals_are_gauge_invariant(state in random_state(), theta in -3.2..3.2f64) {
        let rot = Complex64::from_polar(1.0, theta);
        let turned = StateVector { values: state.values.iter().map(|z| z * rot).collect(), ..state.clone() };
        let (a, b) = (spatial_norms(&state), spatial_norms(&turned));
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1e-300);
        prop_assert!(close(a.mass, b.mass) && close(a.grad_sq, b.grad_sq) && close(a.quartic, b.quartic));
        prop_assert!(close(a.sup, b.sup));
        let (ma, mb) = (moment_diagnostics(&state), moment_diagnostics(&turned));
        let ys = ma.shifted_combo.max(ma.second_moment).max(1e-300);
        prop_assert!((ma.y - mb.y).abs() <= 1e-12 * ys);
        prop_assert!(close(ma.second_moment, mb.second_moment));
    }

    #[test]
    fn functionals_under_exact_quarter_turn(state in random_state()) {
        // multiplication by i only swaps and negates components, so nothing rounds differently
        let i = Complex64::new(0.0, 1.0);
        let turned = StateVector { values: state.values.iter().map(|z| z * i).collect(), ..state.clone() };
        prop_assert_eq!(spatial_norms(&state), spatial_norms(&turned));
        prop_assert_eq!(moment_diagnostics(&state), moment_diagnostics(&turned));
    }

    #[test]
    fn quadrature_is_linear_and_positive(
        a in prop::collection::vec(0.0..3.0f64, 5..80),
        w in -4.0..4.0f64,
        p in 0.0..2.5f64,
    ) {
        let n = a.len();
        let times: Vec<f64> = (0..n).map(|k| 0.1 * k as f64).collect();
        let b: Vec<f64> = a.iter().enumerate().map(|(k, v)| (k as f64).sin() * v).collect();
        let combo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + w * y).collect();
        let span = (0.0, times[n - 1]);
        let ia = series::time_integral(&times, &a, p, span).unwrap();
        let ib = series::time_integral(&times, &b, p, span).unwrap();
        let ic = series::time_integral(&times, &combo, p, span).unwrap();
        prop_assert!(ia >= 0.0);
        prop_assert!((ic - (ia + w * ib)).abs() <= 1e-12 * (ia.abs() + (w * ib).abs()).max(1e-300));
        let cum = series::cumulative_integral(&times, &a, p).unwrap();
        prop_assert!(cum.windows(2).all(|c| c[1] >= c[0]));
    }

    #[test]
    fn spatial_quadrature_is_linear(vals in prop::collection::vec(complex(), 16..120), c in complex()) {
        let s = StateVector { t: 0.0, h: 0.1, values: vals };
        let scaled = StateVector { values: s.values.iter().map(|z| z * c).collect(), ..s.clone() };
        let m = spatial_norms(&s).mass;
        let ms = spatial_norms(&scaled).mass;
        prop_assert!((ms - c.norm_sqr() * m).abs() <= 1e-12 * ms.max(1e-300));
    }

    #[test]
    fn decay_fit_recovers_power_laws(gamma in 0.0..3.0f64, amp in 0.1..10.0f64) {
        let times: Vec<f64> = (0..=1000).map(|k| 0.1 * k as f64).collect();
        let f: Vec<f64> = times.iter().map(|&t| amp * t.powf(-gamma)).collect();
        let fit = decay_fit(&times, &f, (10.0, 100.0)).unwrap();
        prop_assert!((fit.exponent - gamma).abs() <= 1e-8);
    }

    #[test]
    fn stencils_are_second_order(k in 0.5..3.0f64, b in 0.2..1.0f64, c in 0.0..1.0f64) {
        // q = e^{ikx} e^{-b(x-c)^2} on [0, 12]; neither end is flat
        let q = move |x: f64| Complex64::from_polar((-b * (x - c) * (x - c)).exp(), k * x);
        let dq = move |x: f64| q(x) * Complex64::new(-2.0 * b * (x - c), k);
        let mut trace_err = vec![];
        let mut grad_err = vec![];
        for &n in &[601usize, 1201] {
            let s = state_from(q, 12.0, n, 0.0);
            let p = neumann_trace(&s, &DirichletSignal::Zero).p;
            trace_err.push((p - dq(0.0)).norm());
            let d = nodal_derivative(&s.values, s.h);
            grad_err.push(d.iter().enumerate().map(|(j, z)| (z - dq(j as f64 * s.h)).norm()).fold(0.0, f64::max));
        }
        let order = |e: &[f64]| (e[0] / e[1]).log2();
        prop_assert!((order(&trace_err) - 2.0).abs() <= 0.2, "trace order {}", order(&trace_err));
        prop_assert!((order(&grad_err) - 2.0).abs() <= 0.2, "stencil order {}", order(&grad_err));
    }

    #[test]
    fn trapezoid_mass_is_second_order(bb in 0.2..2.0f64, a in complex()) {
        prop_assume!(a.norm() > 1e-3);
        // |A e^{-bx}|^2 on [0, 20]; closed form (1 - e^{-2bL}) |A|^2 / 2b
        let exact = a.norm_sqr() * (1.0 - (-2.0 * bb * 20.0).exp()) / (2.0 * bb);
        let err: Vec<f64> = [401usize, 801]
            .iter()
            .map(|&n| (spatial_norms(&state_from(|x| a * (-bb * x).exp(), 20.0, n, 0.0)).mass - exact).abs())
            .collect();
        prop_assert!(((err[0] / err[1]).log2() - 2.0).abs() <= 0.2);
    }

    #[test]
    fn initial_mass_matches_closed_form(
        family in prop_oneof![Just(ProfileFamily::Gaussian), Just(ProfileFamily::ExpDecay), Just(ProfileFamily::CompactBump)],
        amp in complex(),
        width in 0.5..2.0f64,
        center in 0.0..3.0f64,
    ) {
        let profile = InitialProfile { family, amplitude: amp, width, center };
        let length = 60.0;
        let n = 6001;
        let s = state_from(|x| profile.value(x), length, n, 0.0);
        let h = s.h;
        let exact = profile.mass_beyond(0.0) - profile.mass_beyond(length);
        // trapezoid bound (L h^2 / 12) max|g''| for g = |q0|^2, with |g''| <= 40 sup g / w^2 for these shapes
        let peak = s.values.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
        let bound = h * h / 12.0 * length * 40.0 * peak / (width * width) + 1e-12 * exact.abs();
        prop_assert!((spatial_norms(&s).mass - exact).abs() <= bound);
    }
}

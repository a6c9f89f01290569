use halfline_core::identities::{integrated_mass_balance, IdentityResiduals};
use halfline_core::refinement::{convergence_study, Order, MIN_ORDER};
use halfline_core::scenario::{
    DirichletSignal, GridSpec, InitialProfile, ProblemData, SolverTolerances, DEFAULT_COMPAT_TOL,
};
use halfline_core::solver::{build_initial_state, Stepper};
use halfline_core::{run, Complex64, Manufactured, RunOutput, ScenarioConfig, SolverParams, SpatialGrid};

fn config(data: ProblemData, length: f64, points: usize, dt: f64, horizon: f64, stride: usize) -> ScenarioConfig {
    ScenarioConfig {
        data,
        grid: GridSpec { length, points },
        dt,
        horizon,
        sample_stride: stride,
        tolerances: SolverTolerances::default(),
        compat_tol: DEFAULT_COMPAT_TOL,
    }
}

fn physical(amp: Complex64, center: f64, q0: Complex64) -> ProblemData {
    ProblemData::Physical {
        initial: InitialProfile::gaussian(amp, 1.0, center),
        dirichlet: if q0 == Complex64::new(0.0, 0.0) {
            DirichletSignal::Zero
        } else {
            DirichletSignal::power_decay(q0, 3.0, 1.0)
        },
    }
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn small_run(rot: Complex64) -> RunOutput {
    run(&config(physical(one() * rot, 0.0, one() * rot), 48.0, 961, 0.01, 2.0, 10)).unwrap()
}

#[test]
fn gaussian_phase_refines_at_second_order() {
    let base = config(ProblemData::Manufactured(Manufactured::GaussianPhase), 16.0, 321, 0.02, 1.0, 5);
    let study = convergence_study(&base, 3).unwrap();
    match study.order_of("solution").unwrap() {
        Order::Fitted(p) => assert!((p - 2.0).abs() <= 0.2, "solution order {}", p),
        Order::Exact => panic!("nonzero solution reported exact"),
    }
    for (name, order) in &study.orders {
        assert!(order.passes(MIN_ORDER), "{} order {:?}", name, order);
    }
    for level in &study.levels {
        assert!(level.errors.virial_relative <= 1e-12);
    }
}

#[test]
fn inhomogeneous_mass_residual_follows_envelope() {
    let base = config(ProblemData::Manufactured(Manufactured::PowerExp), 40.0, 801, 0.01, 2.0, 1);
    let study = convergence_study(&base, 3).unwrap();
    let e0 = study.levels[0].errors.mass;
    let h0 = study.levels[0].h;
    for level in &study.levels[1..] {
        let envelope = e0 * (level.h / h0).powf(MIN_ORDER);
        assert!(level.errors.mass <= envelope, "level {}: {} > {}", level.level, level.errors.mass, envelope);
    }
}

#[test]
fn zero_manufactured_solution_is_exact() {
    let base = config(ProblemData::Manufactured(Manufactured::Zero), 10.0, 101, 0.05, 1.0, 2);
    let study = convergence_study(&base, 2).unwrap();
    assert!(study.orders.iter().all(|(_, o)| *o == Order::Exact));
}

#[test]
fn homogeneous_run_conserves_mass() {
    // Gaussian centred at 10 so q0(0) is e^{-100}; the far edge stays quiet to T = 10
    let cfg = config(physical(one(), 10.0, Complex64::new(0.0, 0.0)), 200.0, 4001, 0.01, 10.0, 10);
    let out = run(&cfg).unwrap();
    let m0 = out.initial_norms.mass;
    let drift = out.diagnostics.mass().iter().map(|m| ((m - m0) / m0).abs()).fold(0.0, f64::max);
    assert!(drift <= 1e-10, "relative drift {:e}", drift);
}

#[test]
fn quarter_turn_of_data_rotates_the_run_exactly() {
    let i = Complex64::new(0.0, 1.0);
    let a = small_run(one());
    let b = small_run(i);
    for (x, y) in a.final_state.values.iter().zip(&b.final_state.values) {
        assert_eq!(x * i, *y);
    }
    for (s, r) in a.diagnostics.samples.iter().zip(&b.diagnostics.samples) {
        assert_eq!(s.norms, r.norms);
        assert_eq!(s.moments, r.moments);
        assert_eq!(s.traces.p.norm(), r.traces.p.norm());
        assert_eq!(s.traces.q.norm(), r.traces.q.norm());
    }
    assert_eq!(a.residuals, b.residuals);
}

#[test]
fn generic_rotation_matches_to_rounding() {
    let rot = Complex64::from_polar(1.0, 0.7);
    let a = small_run(one());
    let b = small_run(rot);
    let sup = a.final_state.sup_norm();
    for (x, y) in a.final_state.values.iter().zip(&b.final_state.values) {
        assert!((x * rot - y).norm() <= 1e-12 * sup);
    }
    for (s, r) in a.diagnostics.samples.iter().zip(&b.diagnostics.samples) {
        assert!((s.norms.mass - r.norms.mass).abs() <= 1e-12 * s.norms.mass);
        assert!((s.norms.quartic - r.norms.quartic).abs() <= 1e-12 * s.norms.quartic);
    }
}

#[test]
fn conjugate_state_steps_back() {
    // implicit midpoint is symmetric: stepping conj(q1) forward returns conj(q0) when Q = 0
    let cfg = config(physical(Complex64::new(0.8, 0.3), 6.0, Complex64::new(0.0, 0.0)), 24.0, 481, 0.01, 1.0, 1);
    let grid = SpatialGrid::new(cfg.grid.length, cfg.grid.points).unwrap();
    let params = SolverParams::new(cfg.dt);
    let q0 = build_initial_state(&cfg).unwrap();
    let mut q1 = q0.clone();
    Stepper::new(grid, params).unwrap().advance(&mut q1, &DirichletSignal::Zero).unwrap();
    let mut back = q1.clone();
    back.t = 0.0;
    for z in back.values.iter_mut() {
        *z = z.conj();
    }
    Stepper::new(grid, params).unwrap().advance(&mut back, &DirichletSignal::Zero).unwrap();
    for (x, y) in q0.values.iter().zip(&back.values) {
        assert!((x.conj() - y).norm() <= 1e-12, "{} vs {}", x.conj(), y);
    }
}

#[test]
fn repeated_runs_are_identical() {
    let a = small_run(one());
    let b = small_run(one());
    assert_eq!(a.diagnostics, b.diagnostics);
    assert_eq!(a.residuals, b.residuals);
}

#[test]
fn integrated_mass_slack_shrinks_with_resolution() {
    let slack = |cfg: ScenarioConfig| {
        let out = run(&cfg).unwrap();
        IdentityResiduals::max_abs(&integrated_mass_balance(&out.diagnostics).unwrap())
    };
    // compatible data: second order
    let pe = ProblemData::Manufactured(Manufactured::PowerExp);
    let coarse = slack(config(pe, 40.0, 401, 0.02, 2.0, 2));
    let fine = slack(config(pe, 40.0, 801, 0.01, 2.0, 2));
    assert!((coarse / fine).log2() >= MIN_ORDER, "{:e} then {:e}", coarse, fine);
    // a Gaussian under Q = (1+t)^-3 only matches at order zero in the corner, which costs order
    let coarse = slack(config(physical(one(), 0.0, one()), 48.0, 961, 0.01, 2.0, 2));
    let fine = slack(config(physical(one(), 0.0, one()), 48.0, 1921, 0.005, 2.0, 2));
    assert!(coarse < 1e-2, "slack {:e}", coarse);
    assert!(fine < coarse / 1.5, "{:e} then {:e}", coarse, fine);
}

#[test]
fn norm_sups_do_not_grow_when_horizon_doubles() {
    let short = run(&config(physical(one(), 0.0, one()), 400.0, 4001, 0.01, 10.0, 10)).unwrap();
    let long = run(&config(physical(one(), 0.0, one()), 400.0, 4001, 0.01, 20.0, 10)).unwrap();
    let sup = |v: Vec<f64>| v.into_iter().fold(0.0, f64::max);
    let pairs = [
        (sup(short.diagnostics.mass()), sup(long.diagnostics.mass())),
        (sup(short.diagnostics.grad_sq()), sup(long.diagnostics.grad_sq())),
        (sup(short.diagnostics.quartic()), sup(long.diagnostics.quartic())),
    ];
    for (s, l) in pairs {
        assert!(l <= s * (1.0 + 1e-9), "{} grew to {}", s, l);
    }
}

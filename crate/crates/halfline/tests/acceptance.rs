//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! fails. Tolerances are pinned here.
//!
//! The default scenario is run once (about half a minute optimised) and
//! shared by criteria 3 through 8.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use halfline::commands;
use halfline_core::estimates::{
    assess, decay_fit, l1_neumann_partial, weighted_neumann_integral, EstimateOptions, EstimateReport, Verdict,
};
use halfline_core::functionals::{neumann_trace, observe, spatial_norms};
use halfline_core::identities::residual_virial_algebraic;
use halfline_core::refinement::{convergence_study, Order, MIN_ORDER};
use halfline_core::scenario::{DirichletSignal, GridSpec, InitialProfile, ProblemData, SolverTolerances};
use halfline_core::{run, Complex64, DiagnosticsSeries, Manufactured, RunOutput, ScenarioConfig, StateVector};
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;

const ORDER_TARGET: f64 = 2.0;
const ORDER_TOL: f64 = 0.2;
const CONVERGE_BUDGET: Duration = Duration::from_secs(120);
const MASS_DRIFT_TOL: f64 = 1e-10;
const VIRIAL_TOL: f64 = 1e-12;
const RATIO_GROWTH_TOL: f64 = 0.10;
const QUARTIC_FACTOR: f64 = 1.5;
const QUARTIC_EXPONENT_MIN: f64 = 0.85;
const WEIGHT_P: f64 = 1.1;
const TAIL_TOL: f64 = 0.05;
const FIT_TOL: f64 = 1e-8;
const RANDOM_STATES: usize = 1000;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn fitted(o: Option<Order>) -> String {
    match o {
        Some(Order::Fitted(p)) => format!("{:.3}", p),
        Some(Order::Exact) => "exact".into(),
        None => "missing".into(),
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let study = commands::converge_cmd(&configs().join("gaussian_phase.toml"), 3, None).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let sol = match study.order_of("solution") {
        Some(Order::Fitted(p)) => p,
        _ => f64::NAN,
    };
    let others: Vec<String> = study.orders.iter().map(|(n, o)| format!("{}={}", n, fitted(Some(*o)))).collect();
    check(
        (sol - ORDER_TARGET).abs() <= ORDER_TOL && study.passes() && elapsed < CONVERGE_BUDGET,
        format!("orders {} in {:.2}s", others.join(" "), elapsed.as_secs_f64()),
    )
}

fn small(data: ProblemData, length: f64, points: usize, dt: f64, horizon: f64, stride: usize) -> ScenarioConfig {
    ScenarioConfig {
        data,
        grid: GridSpec { length, points },
        dt,
        horizon,
        sample_stride: stride,
        tolerances: SolverTolerances::default(),
        compat_tol: halfline_core::scenario::DEFAULT_COMPAT_TOL,
    }
}

fn homogeneous_run() -> Result<RunOutput, String> {
    // centred at 10, so q0(0) = e^{-100} matches Q = 0
    let data = ProblemData::Physical {
        initial: InitialProfile::gaussian(Complex64::new(1.0, 0.0), 1.0, 10.0),
        dirichlet: DirichletSignal::Zero,
    };
    run(&small(data, 200.0, 4001, 0.01, 10.0, 10)).map_err(|e| e.to_string())
}

fn criterion_2(homogeneous: &RunOutput) -> Outcome {
    let m0 = homogeneous.initial_norms.mass;
    let drift = homogeneous.diagnostics.mass().iter().map(|m| ((m - m0) / m0).abs()).fold(0.0, f64::max);

    let base = small(ProblemData::Manufactured(Manufactured::PowerExp), 40.0, 801, 0.01, 2.0, 1);
    let study = convergence_study(&base, 3).map_err(|e| e.to_string())?;
    let (e0, h0) = (study.levels[0].errors.mass, study.levels[0].h);
    let within = study.levels[1..].iter().all(|l| l.errors.mass <= e0 * (l.h / h0).powf(MIN_ORDER));
    let errs: Vec<String> = study.levels.iter().map(|l| format!("{:.3e}", l.errors.mass)).collect();
    check(
        drift <= MASS_DRIFT_TOL && within,
        format!(
            "Q=0 drift {:.2e} to T=10; inhomogeneous mass residuals {} (order {})",
            drift,
            errs.join(" -> "),
            fitted(study.order_of("mass"))
        ),
    )
}

fn random_states() -> Vec<StateVector> {
    let mut runner = TestRunner::deterministic();
    let strategy = (
        proptest::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 16..400),
        0.005..0.5f64,
        0.0..100.0f64,
    );
    (0..RANDOM_STATES)
        .map(|_| {
            let (v, h, t) = strategy.new_tree(&mut runner).unwrap().current();
            StateVector { t, h, values: v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect() }
        })
        .collect()
}

fn relative_virial(diag: &DiagnosticsSeries) -> f64 {
    let (r, s) = residual_virial_algebraic(diag);
    r.iter().zip(&s).map(|(r, s)| if *s > 0.0 { r.abs() / s } else { r.abs() }).fold(0.0, f64::max)
}

fn criterion_3(default: &RunOutput, homogeneous: &RunOutput) -> Outcome {
    let runs = [
        ("default", default.residuals.virial_relative_max()),
        ("homogeneous", homogeneous.residuals.virial_relative_max()),
    ];
    let mut worst_random: f64 = 0.0;
    for state in random_states() {
        let s = observe(&state, &DirichletSignal::Zero, None);
        worst_random = worst_random.max(relative_virial(&DiagnosticsSeries { samples: vec![s] }));
    }
    let worst_run = runs.iter().map(|r| r.1).fold(0.0, f64::max);
    check(
        worst_run <= VIRIAL_TOL && worst_random <= VIRIAL_TOL,
        format!(
            "max relative residual {:.2e} (default), {:.2e} (Q=0), {:.2e} over {} random states",
            runs[0].1, runs[1].1, worst_random, RANDOM_STATES
        ),
    )
}

fn criterion_4(rep: &EstimateReport) -> Outcome {
    let r = &rep.neumann_l2;
    check(
        r.sup.is_finite() && r.growth < RATIO_GROWTH_TOL,
        format!(
            "ratio sup {:.5}, first decade {:.5}, last decade {:.5}, growth {:.2}%",
            r.sup,
            r.first_decade_sup,
            r.last_decade_sup,
            100.0 * r.growth
        ),
    )
}

fn criterion_5(rep: &EstimateReport) -> Outcome {
    let q = &rep.quartic;
    let exponent = q.fit.map_or(f64::NAN, |f| f.exponent);
    check(
        q.sup_over_late <= QUARTIC_FACTOR * q.sup_over_unit && exponent >= QUARTIC_EXPONENT_MIN,
        format!(
            "sup t*K on [T/2,T] {:.4e} vs {}x [1,2] {:.4e}; quartic exponent {:.4}",
            q.sup_over_late, QUARTIC_FACTOR, q.sup_over_unit, exponent
        ),
    )
}

fn criterion_6(rep: &EstimateReport) -> Outcome {
    let s = &rep.sup_norm;
    let exponent = s.fit.map_or(f64::NAN, |f| f.exponent);
    let margin = s.cubed.iter().zip(&s.cubed_bound).map(|(l, r)| l / r).fold(0.0, f64::max);
    check(
        exponent > 0.0 && s.bound_holds,
        format!("sup-norm exponent {:.4} on [10,100]; max |q|^3 / bound {:.4}", exponent, margin),
    )
}

fn criterion_7(default: &RunOutput) -> Outcome {
    let d = &default.diagnostics;
    let w = weighted_neumann_integral(&d.times(), &d.neumann(), WEIGHT_P).map_err(|e| e.to_string())?;
    check(
        w.tail_ratio <= TAIL_TOL && w.verdict == Some(Verdict::Bounded),
        format!("p = {}: I(100) = {:.5e}, increment over [50,100] {:.3}%", WEIGHT_P, w.total, 100.0 * w.tail_ratio),
    )
}

fn criterion_8(rep: &EstimateReport) -> Outcome {
    let l = &rep.l1;
    check(
        l.tail_ratio <= TAIL_TOL && l.dominated,
        format!(
            "J(100) = {:.5}, increment over [50,100] {:.3}%, bound {:.5} at T, dominated {}",
            l.total,
            100.0 * l.tail_ratio,
            l.bound.last().copied().unwrap_or(f64::NAN),
            l.dominated
        ),
    )
}

fn criterion_9() -> Outcome {
    let times: Vec<f64> = (0..=1000).map(|k| 0.1 * k as f64).collect();
    let trace = |g: f64| -> Vec<Complex64> { times.iter().map(|t| Complex64::new((1.0 + t).powf(-g), 0.0)).collect() };
    let l1 = l1_neumann_partial(&times, &trace(0.9), WEIGHT_P - 1.0).map_err(|e| e.to_string())?;
    let w = weighted_neumann_integral(&times, &trace(1.0), WEIGHT_P).map_err(|e| e.to_string())?;
    check(
        l1.verdict == Verdict::NotIntegrable && w.verdict == Some(Verdict::Divergent),
        format!(
            "(1+t)^-0.9: {} (tail {:.1}%); (1+t)^-1 at p = 1.1: {} (tail {:.1}%)",
            l1.verdict.label(),
            100.0 * l1.tail_ratio,
            w.verdict.map_or("none", |v| v.label()),
            100.0 * w.tail_ratio
        ),
    )
}

fn gauge_run(rot: Complex64) -> Result<RunOutput, String> {
    let one = Complex64::new(1.0, 0.0);
    let data = ProblemData::Physical {
        initial: InitialProfile::gaussian(rot * one, 1.0, 0.0),
        dirichlet: DirichletSignal::power_decay(rot * one, 3.0, 1.0),
    };
    run(&small(data, 48.0, 961, 0.01, 2.0, 10)).map_err(|e| e.to_string())
}

/// Every gauge-invariant quantity of a sample.
fn moduli(d: &DiagnosticsSeries) -> Vec<[f64; 10]> {
    d.samples
        .iter()
        .map(|s| {
            let (n, m, tr) = (&s.norms, &s.moments, &s.traces);
            [n.mass, n.grad_sq, n.quartic, n.sup, m.y, m.second_moment, m.shifted_combo, m.cross.norm(), tr.p.norm(), tr.q.norm()]
        })
        .collect()
}

fn gauge() -> Outcome {
    let a = gauge_run(Complex64::new(1.0, 0.0))?;
    let b = gauge_run(Complex64::new(0.0, 1.0))?;
    let c = gauge_run(Complex64::from_polar(1.0, 0.7))?;
    let exact = moduli(&a.diagnostics) == moduli(&b.diagnostics) && a.residuals == b.residuals;
    // relative to each column's largest value, since some vanish at t = 0
    let (ma, mc) = (moduli(&a.diagnostics), moduli(&c.diagnostics));
    let mut rel: f64 = 0.0;
    for col in 0..10 {
        let scale = ma.iter().map(|r| r[col].abs()).fold(1e-300, f64::max);
        for (x, y) in ma.iter().zip(&mc) {
            rel = rel.max((x[col] - y[col]).abs() / scale);
        }
    }
    check(
        exact && rel <= 1e-12,
        format!("theta = pi/2 bit-identical: {}; theta = 0.7 max relative deviation {:.1e}", exact, rel),
    )
}

fn fit_recovery() -> Outcome {
    let times: Vec<f64> = (0..=1000).map(|k| 0.1 * k as f64).collect();
    let mut worst: f64 = 0.0;
    for k in 0..=30 {
        let gamma = 0.1 * k as f64;
        let f: Vec<f64> = times.iter().map(|t| 2.5 * t.powf(-gamma)).collect();
        let fit = decay_fit(&times, &f, (10.0, 100.0)).map_err(|e| e.to_string())?;
        worst = worst.max((fit.exponent - gamma).abs());
    }
    check(worst <= FIT_TOL, format!("max |gamma_hat - gamma| = {:.1e} over gamma in [0, 3]", worst))
}

fn orders() -> Outcome {
    // q = e^{2ix} e^{-(x-0.3)^2/2} on [0, 12]
    let q = |x: f64| Complex64::from_polar((-0.5 * (x - 0.3) * (x - 0.3)).exp(), 2.0 * x);
    let dq0 = q(0.0) * Complex64::new(0.3, 2.0);
    // ∫_0^12 |q|^2 = ∫ e^{-(x-0.3)^2}, via erf-free Simpson on a fine grid
    let fine = {
        let n = 200_000;
        let h = 12.0 / n as f64;
        let g = |x: f64| (-(x - 0.3) * (x - 0.3)).exp();
        (1..n).map(|k| if k % 2 == 1 { 4.0 } else { 2.0 } * g(k as f64 * h)).sum::<f64>() * h / 3.0
            + (g(0.0) + g(12.0)) * h / 3.0
    };
    let mut trace = vec![];
    let mut mass = vec![];
    for n in [601usize, 1201] {
        let h = 12.0 / (n - 1) as f64;
        let s = StateVector { t: 0.0, h, values: (0..n).map(|j| q(j as f64 * h)).collect() };
        trace.push((neumann_trace(&s, &DirichletSignal::Zero).p - dq0).norm());
        mass.push((spatial_norms(&s).mass - fine).abs());
    }
    let o_trace = (trace[0] / trace[1]).log2();
    let o_mass = (mass[0] / mass[1]).log2();
    check(
        (o_trace - ORDER_TARGET).abs() <= ORDER_TOL && (o_mass - ORDER_TARGET).abs() <= ORDER_TOL,
        format!("Neumann stencil order {:.3}, trapezoid mass order {:.3}", o_trace, o_mass),
    )
}

fn determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("halfline-acceptance-{}", std::process::id()));
    let cfg = configs().join("sweep/alpha3.toml");
    let mut bytes = vec![];
    for k in 0..2 {
        let out = dir.join(k.to_string());
        let status = Command::new(env!("CARGO_BIN_EXE_halfline"))
            .args(["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--horizon-override", "2"])
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(String::from_utf8_lossy(&status.stderr).into_owned());
        }
        bytes.push(std::fs::read(out.join("diagnostics.csv")).map_err(|e| e.to_string())?);
    }
    let _ = std::fs::remove_dir_all(&dir);
    check(bytes[0] == bytes[1], format!("two processes, {} bytes of diagnostics.csv, identical: {}", bytes[0].len(), bytes[0] == bytes[1]))
}

fn criterion_10() -> Outcome {
    let parts = [("gauge", gauge()), ("decay_fit", fit_recovery()), ("orders", orders()), ("determinism", determinism())];
    let ok = parts.iter().all(|(_, r)| r.is_ok());
    let detail = parts
        .iter()
        .map(|(n, r)| match r {
            Ok(d) => format!("{} ok ({})", n, d),
            Err(d) => format!("{} FAILED ({})", n, d),
        })
        .collect::<Vec<_>>()
        .join("; ");
    check(ok, detail)
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, &str, Outcome)> = vec![];
    results.push((1, "scheme verification", criterion_1()));

    let homogeneous = homogeneous_run();
    let default_cfg = commands::load_config(&configs().join("default.toml"), None);
    let default = match &default_cfg {
        Ok(cfg) if *cfg == ScenarioConfig::default_verification() => {
            let start = Instant::now();
            let out = run(cfg).map_err(|e| e.to_string());
            eprintln!("default scenario: {:.1}s", start.elapsed().as_secs_f64());
            out
        }
        Ok(_) => Err("configs/default.toml drifted from the built-in default".into()),
        Err(e) => Err(e.to_string()),
    };
    let report = default.as_ref().map_err(Clone::clone).and_then(|out| {
        let exps = default_cfg.as_ref().unwrap().dirichlet().map(|d| d.decay_exponents());
        assess(&out.diagnostics, &out.initial_norms, exps, &EstimateOptions::default()).map_err(|e| e.to_string())
    });

    results.push((2, "mass identity", homogeneous.as_ref().map_err(Clone::clone).and_then(criterion_2)));
    let virial = match (&default, &homogeneous) {
        (Ok(d), Ok(h)) => criterion_3(d, h),
        (Err(e), _) | (_, Err(e)) => Err(e.clone()),
    };
    results.push((3, "algebraic virial identity", virial));
    results.push((4, "Neumann L2 ratio", report.as_ref().map_err(Clone::clone).and_then(criterion_4)));
    results.push((5, "quartic decay", report.as_ref().map_err(Clone::clone).and_then(criterion_5)));
    results.push((6, "sup-norm decay", report.as_ref().map_err(Clone::clone).and_then(criterion_6)));
    results.push((7, "weighted Neumann tail", default.as_ref().map_err(Clone::clone).and_then(criterion_7)));
    results.push((8, "L1 Neumann tail", report.as_ref().map_err(Clone::clone).and_then(criterion_8)));
    results.push((9, "negative controls", criterion_9()));
    results.push((10, "invariant suites", criterion_10()));

    let mut failed = 0;
    for (n, name, r) in &results {
        match r {
            Ok(d) => println!("PASS [{:>2}] {}: {}", n, name, d),
            Err(d) => {
                failed += 1;
                println!("FAIL [{:>2}] {}: {}", n, name, d)
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

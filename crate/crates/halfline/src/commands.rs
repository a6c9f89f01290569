//! The `run`, `converge` and `report` subcommands, independent of argument
//! parsing so tests can drive them directly.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use halfline_core::estimates::{assess, EstimateOptions};
use halfline_core::refinement::{analyze, check_base, measure_level, refine_config, ConvergenceStudy, LevelResult, Order, MIN_ORDER};
use halfline_core::solver::{run, SolverError};
use halfline_core::ScenarioConfig;
use thiserror::Error;

use crate::artifacts::{write_atomic, Provenance, Report, RunArtifact, WeightSource, SCHEMA_VERSION};
use crate::config::{parse_config_with, ConfigError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Config { path: PathBuf, source: ConfigError },
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error("{0}")]
    Numeric(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    /// 2 for configuration and usage, 3 for numerical failures, 4 for IO.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) | Self::Config { .. } | Self::Input { .. } => 2,
            Self::Numeric(_) => 3,
            Self::Io { .. } => 4,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn numeric(name: &str, e: SolverError) -> CliError {
    match e {
        SolverError::Config(source) => {
            CliError::Config { path: PathBuf::from(name), source: ConfigError::Scenario(source) }
        }
        other => CliError::Numeric(format!("{}: {}", name, other)),
    }
}

/// Reads and validates one scenario file.
pub fn load_config(path: &Path, horizon_override: Option<f64>) -> Result<ScenarioConfig, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_config_with(&text, horizon_override).map_err(|source| CliError::Config { path: path.to_path_buf(), source })
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "scenario".to_string(), |s| s.to_string_lossy().into_owned())
}

fn check_positive(flag: &str, v: Option<f64>) -> Result<(), CliError> {
    match v {
        Some(x) if !(x.is_finite() && x > 0.0) => Err(CliError::Usage(format!("{} must be a finite positive number", flag))),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunRequest {
    pub configs: Vec<PathBuf>,
    pub out: PathBuf,
    pub p_override: Option<f64>,
    pub horizon_override: Option<f64>,
}

/// Runs one scenario and assembles its artifact in memory.
pub fn execute(
    name: &str,
    cfg: &ScenarioConfig,
    config_path: Option<&Path>,
    p_override: Option<f64>,
) -> Result<RunArtifact, CliError> {
    let start = Instant::now();
    let out = run(cfg).map_err(|e| numeric(name, e))?;
    let wall = start.elapsed().as_secs_f64();
    let exponents = cfg.dirichlet().map(|d| d.decay_exponents());
    let source = if p_override.is_some() {
        WeightSource::Override
    } else if cfg.admissibility().and_then(|a| a.p_feasible).is_some() {
        WeightSource::Feasible
    } else {
        WeightSource::Diagnostic
    };
    let estimates = assess(&out.diagnostics, &out.initial_norms, exponents, &EstimateOptions { p_override })
        .map(|r| (r, source))
        .map_err(|e| e.to_string());
    Ok(RunArtifact::build(name, cfg, &out, estimates, Provenance::now(config_path), wall))
}

/// Outcome of one scenario of a `run`.
#[derive(Debug)]
pub struct RunSummary {
    pub name: String,
    pub dir: PathBuf,
    pub report: Report,
}

/// `run`: every config is parsed before anything runs, so a bad file leaves
/// no outputs. With several configs each gets `out/<stem>/` and they run
/// concurrently. Artifacts are written even when the virial invariant fails;
/// that failure is then returned as a numerical error.
pub fn run_cmd(req: &RunRequest) -> Result<Vec<RunSummary>, CliError> {
    if req.configs.is_empty() {
        return Err(CliError::Usage("run needs at least one --config".into()));
    }
    check_positive("--p-override", req.p_override)?;
    check_positive("--horizon-override", req.horizon_override)?;
    let mut jobs = Vec::new();
    for path in &req.configs {
        let cfg = load_config(path, req.horizon_override)?;
        let name = stem(path);
        if jobs.iter().any(|(n, _, _): &(String, _, _)| *n == name) {
            return Err(CliError::Usage(format!("two configs share the name `{}`", name)));
        }
        jobs.push((name, path.clone(), cfg));
    }
    let nested = jobs.len() > 1;

    let results: Vec<Result<RunSummary, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(name, path, cfg)| {
                scope.spawn(move || {
                    let artifact = execute(name, cfg, Some(path), req.p_override)?;
                    let dir = if nested { req.out.join(name) } else { req.out.clone() };
                    artifact.write(&dir).map_err(io_err(&dir))?;
                    Ok(RunSummary { name: name.clone(), dir, report: artifact.report })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("scenario thread panicked")).collect()
    });

    let mut summaries = Vec::new();
    let mut worst: Option<CliError> = None;
    for r in results {
        match r {
            Ok(s) => {
                if !s.report.invariants.virial_passes {
                    let e = CliError::Numeric(format!(
                        "{}: algebraic virial residual {:e} exceeds {:e}",
                        s.name, s.report.invariants.virial_relative_max, s.report.invariants.virial_tolerance
                    ));
                    worst = Some(pick(worst, e));
                }
                summaries.push(s);
            }
            Err(e) => worst = Some(pick(worst, e)),
        }
    }
    match worst {
        Some(e) => Err(e),
        None => Ok(summaries),
    }
}

fn pick(a: Option<CliError>, b: CliError) -> CliError {
    match a {
        Some(a) if a.exit_code() >= b.exit_code() => a,
        _ => b,
    }
}

/// One-line description of a finished run.
pub fn describe(s: &RunSummary) -> String {
    let r = &s.report;
    let mut line = format!(
        "{}: t = {}, {} samples, virial {:.2e} -> {}",
        s.name,
        r.run.final_time,
        r.grid.samples,
        r.invariants.virial_relative_max,
        s.dir.display()
    );
    match (&r.estimates, &r.estimates_error) {
        (Some(e), _) => line.push_str(&format!(
            "\n  neumann-L2 growth {:.3}, t*quartic late {:.3e} vs [1,2] {:.3e}, sup {}, weighted {}, L1 {}",
            e.neumann_l2.growth,
            e.quartic.sup_over_late,
            e.quartic.sup_over_unit,
            e.sup_norm.verdict.label(),
            e.weighted.verdict.map_or("n/a", |v| v.label()),
            e.l1.verdict.label()
        )),
        (None, Some(err)) => line.push_str(&format!("\n  estimates unavailable: {}", err)),
        (None, None) => {}
    }
    line
}

/// Minimum levels for `converge`; two points would always fit a line exactly.
pub const MIN_LEVELS: usize = 3;

/// `converge`: levels run concurrently.
pub fn converge_cmd(config: &Path, levels: usize, horizon_override: Option<f64>) -> Result<ConvergenceStudy, CliError> {
    if levels < MIN_LEVELS {
        return Err(CliError::Usage(format!("--levels must be at least {}, got {}", MIN_LEVELS, levels)));
    }
    check_positive("--horizon-override", horizon_override)?;
    let base = load_config(config, horizon_override)?;
    check_base(&base, levels).map_err(|e| CliError::Input { path: config.to_path_buf(), message: e.to_string() })?;
    let results: Vec<Result<LevelResult, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..levels)
            .map(|level| {
                let base = &base;
                scope.spawn(move || {
                    let cfg = refine_config(base, level);
                    let errors = measure_level(&cfg).map_err(|e| numeric(&format!("level {}", level), e))?;
                    Ok(LevelResult { level, h: cfg.grid_spacing(), dt: cfg.dt, errors })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("level thread panicked")).collect()
    });
    Ok(analyze(results.into_iter().collect::<Result<Vec<_>, _>>()?))
}

fn order_text(o: Order) -> String {
    match o {
        Order::Exact => "exact".to_string(),
        Order::Fitted(p) => format!("{:.3}", p),
    }
}

pub fn convergence_table(study: &ConvergenceStudy) -> String {
    let mut header = vec!["level".to_string(), "h".to_string(), "dt".to_string()];
    header.extend(study.orders.iter().map(|(n, _)| n.to_string()));
    let mut rows = vec![header];
    for l in &study.levels {
        let mut row = vec![l.level.to_string(), format!("{:.4e}", l.h), format!("{:.4e}", l.dt)];
        row.extend(l.errors.refined().iter().map(|(_, e)| format!("{:.4e}", e)));
        rows.push(row);
    }
    let mut row = vec!["order".to_string(), String::new(), String::new()];
    row.extend(study.orders.iter().map(|(_, o)| order_text(*o)));
    rows.push(row);
    align(&rows)
}

pub fn convergence_csv(study: &ConvergenceStudy) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["level", "h", "dt"];
    header.extend(study.orders.iter().map(|(n, _)| *n));
    header.push("virial_relative");
    w.write_record(&header).unwrap();
    for l in &study.levels {
        let mut row = vec![l.level.to_string(), format!("{:e}", l.h), format!("{:e}", l.dt)];
        row.extend(l.errors.refined().iter().map(|(_, e)| format!("{:e}", e)));
        row.push(format!("{:e}", l.errors.virial_relative));
        w.write_record(&row).unwrap();
    }
    let mut row = vec!["order".to_string(), String::new(), String::new()];
    row.extend(study.orders.iter().map(|(_, o)| match o {
        Order::Exact => "exact".to_string(),
        Order::Fitted(p) => format!("{:e}", p),
    }));
    row.push(String::new());
    w.write_record(&row).unwrap();
    w.into_inner().unwrap()
}

pub fn write_convergence(study: &ConvergenceStudy, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let json = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "min_order": MIN_ORDER,
        "passes": study.passes(),
        "levels": study.levels,
        "orders": study.orders.iter().map(|(n, o)| (n.to_string(), order_text(*o))).collect::<std::collections::BTreeMap<_, _>>(),
    });
    let csv_path = dir.join("convergence.csv");
    write_atomic(&csv_path, &convergence_csv(study)).map_err(io_err(&csv_path))?;
    let json_path = dir.join("convergence.json");
    write_atomic(&json_path, &serde_json::to_vec_pretty(&json).expect("plain JSON values")).map_err(io_err(&json_path))
}

/// Reads a `report.json`, refusing other schema versions.
pub fn load_report(path: &Path) -> Result<Report, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let bad = |message: String| CliError::Input { path: path.to_path_buf(), message };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(SCHEMA_VERSION) => {}
        Some(v) => return Err(bad(format!("schema version {} is not the supported {}", v, SCHEMA_VERSION))),
        None => return Err(bad("no schema_version field".into())),
    }
    serde_json::from_value(value).map_err(|e| bad(e.to_string()))
}

pub const COMPARISON_COLUMNS: [&str; 17] = [
    "scenario",
    "alpha",
    "beta",
    "l2_neumann",
    "quartic_decay",
    "l1_neumann",
    "p_feasible",
    "neumann_l2_bounded",
    "neumann_l2_growth",
    "quartic_within_factor",
    "quartic_exponent",
    "sup_norm",
    "sup_exponent",
    "weighted_p",
    "weighted",
    "l1",
    "virial_passes",
];

fn flag(b: bool) -> String {
    b.to_string()
}

/// Hypothesis flags against observed verdicts, one row per report.
pub fn comparison_rows(reports: &[Report]) -> Vec<Vec<String>> {
    let dash = || "-".to_string();
    reports
        .iter()
        .map(|r| {
            let mut row = vec![r.scenario.clone()];
            match &r.admissibility {
                Some(a) => row.extend([
                    a.alpha.to_string(),
                    a.beta.to_string(),
                    flag(a.l2_neumann),
                    flag(a.quartic_decay),
                    flag(a.l1_neumann),
                    a.p_feasible.map_or_else(dash, |p| format!("{:.2}", p)),
                ]),
                None => row.extend((0..6).map(|_| dash())),
            }
            match &r.estimates {
                Some(e) => row.extend([
                    flag(e.neumann_l2.bounded),
                    format!("{:.4}", e.neumann_l2.growth),
                    flag(e.quartic.within_factor),
                    e.quartic.fit.as_ref().map_or_else(dash, |f| format!("{:.3}", f.exponent)),
                    e.sup_norm.verdict.label().to_string(),
                    e.sup_norm.fit.as_ref().map_or_else(dash, |f| format!("{:.3}", f.exponent)),
                    format!("{:.2}", e.weighted.p),
                    e.weighted.verdict.map_or_else(dash, |v| v.label().to_string()),
                    e.l1.verdict.label().to_string(),
                ]),
                None => row.extend((0..9).map(|_| dash())),
            }
            row.push(flag(r.invariants.virial_passes));
            row
        })
        .collect()
}

fn align(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(|r| r.len()).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for r in rows {
        let cells: Vec<String> = r.iter().zip(&widths).map(|(s, w)| format!("{:<w$}", s, w = w)).collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

pub fn comparison_table(reports: &[Report]) -> String {
    let mut rows = vec![COMPARISON_COLUMNS.iter().map(|s| s.to_string()).collect()];
    rows.extend(comparison_rows(reports));
    align(&rows)
}

pub fn comparison_csv(reports: &[Report]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COMPARISON_COLUMNS).unwrap();
    for row in comparison_rows(reports) {
        w.write_record(&row).unwrap();
    }
    w.into_inner().unwrap()
}

/// `report`: a pure function of the input files. Returns the text table and
/// writes `comparison.csv` into `out` when given.
pub fn report_cmd(paths: &[PathBuf], out: Option<&Path>) -> Result<String, CliError> {
    if paths.is_empty() {
        return Err(CliError::Usage("report needs at least one report.json".into()));
    }
    let reports = paths.iter().map(|p| load_report(p)).collect::<Result<Vec<_>, _>>()?;
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let path = dir.join("comparison.csv");
        write_atomic(&path, &comparison_csv(&reports)).map_err(io_err(&path))?;
    }
    Ok(comparison_table(&reports))
}

//! Run artifacts: `diagnostics.csv`, `residuals.csv` and `report.json`.
//!
//! Column order is fixed; see `docs/artifacts.md`. Floats are written with
//! `{:e}`, the shortest representation that round-trips, so identical runs
//! give identical bytes.

use std::fs;
use std::io;
use std::path::Path;

use halfline_core::estimates::{EstimateReport, NormSups, Verdict};
use halfline_core::identities::{integrated_mass_balance, IdentityResiduals};
use halfline_core::scenario::{DirichletSignal, InitialProfile, ProblemData, TRUNCATION_TOLERANCE};
use halfline_core::solver::LEAKAGE_TOLERANCE;
use halfline_core::{DiagnosticsSeries, Manufactured, RunOutput, ScenarioConfig};
use serde::{Deserialize, Serialize};

/// Bumped whenever a field of [`Report`] changes meaning or disappears.
pub const SCHEMA_VERSION: u32 = 1;

/// Relative tolerance on the algebraic virial identity.
pub const VIRIAL_TOLERANCE: f64 = 1e-12;

pub const DIAGNOSTICS_COLUMNS: [&str; 16] = [
    "t",
    "mass",
    "grad_sq",
    "quartic",
    "sup",
    "y",
    "second_moment",
    "cross_re",
    "cross_im",
    "shifted_combo",
    "p_re",
    "p_im",
    "q_re",
    "q_im",
    "q_t_re",
    "q_t_im",
];

pub const RESIDUAL_COLUMNS: [&str; 9] = [
    "t",
    "mass",
    "energy",
    "neumann_sq",
    "neumann_sq_imag",
    "virial_alg",
    "virial_scale",
    "balance",
    "integrated_mass",
];

fn num(v: f64) -> String {
    format!("{:e}", v)
}

fn to_csv<const N: usize>(header: [&str; N], rows: impl Iterator<Item = [f64; N]>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    // writing into a Vec cannot fail
    w.write_record(header).unwrap();
    for row in rows {
        w.write_record(row.map(num)).unwrap();
    }
    w.into_inner().unwrap()
}

pub fn diagnostics_csv(diag: &DiagnosticsSeries) -> Vec<u8> {
    to_csv(
        DIAGNOSTICS_COLUMNS,
        diag.samples.iter().map(|s| {
            let (n, m, tr) = (&s.norms, &s.moments, &s.traces);
            [
                s.t,
                n.mass,
                n.grad_sq,
                n.quartic,
                n.sup,
                m.y,
                m.second_moment,
                m.cross.re,
                m.cross.im,
                m.shifted_combo,
                tr.p.re,
                tr.p.im,
                tr.q.re,
                tr.q.im,
                tr.q_t.re,
                tr.q_t.im,
            ]
        }),
    )
}

pub fn residuals_csv(res: &IdentityResiduals, integrated_mass: &[f64]) -> Vec<u8> {
    to_csv(
        RESIDUAL_COLUMNS,
        (0..res.times.len()).map(|k| {
            [
                res.times[k],
                res.mass[k],
                res.energy[k],
                res.neumann_sq[k],
                res.neumann_sq_imag[k],
                res.virial_alg[k],
                res.virial_scale[k],
                res.balance[k],
                integrated_mass.get(k).copied().unwrap_or(f64::NAN),
            ]
        }),
    )
}

/// Writes through a sibling temp file and a rename, so readers never see a
/// half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let name = path.file_name().ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "no file name"))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

/// JSON has no infinities; they are written as the strings `"inf"`,
/// `"-inf"` and `"nan"`.
pub mod real {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                _ => Err(serde::de::Error::custom(format!("expected a number, \"inf\", \"-inf\" or \"nan\", got {:?}", t))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub software: String,
    pub version: String,
    /// Seconds since the Unix epoch when the report was written.
    pub created_unix: u64,
    pub config_path: Option<String>,
}

impl Provenance {
    pub fn now(config_path: Option<&Path>) -> Self {
        Self {
            software: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            config_path: config_path.map(|p| p.display().to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataEcho {
    Physical { initial: InitialProfile, dirichlet: DirichletSignal },
    Manufactured { solution: Manufactured },
}

/// The resolved configuration, defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub data: DataEcho,
    pub length: f64,
    pub points: usize,
    pub dt: f64,
    pub horizon: f64,
    pub sample_stride: usize,
    pub fp_tol: f64,
    pub fp_max_iters: usize,
    pub compat_tol: f64,
}

impl From<&ScenarioConfig> for ConfigEcho {
    fn from(c: &ScenarioConfig) -> Self {
        Self {
            data: match c.data {
                ProblemData::Physical { initial, dirichlet } => DataEcho::Physical { initial, dirichlet },
                ProblemData::Manufactured(solution) => DataEcho::Manufactured { solution },
            },
            length: c.grid.length,
            points: c.grid.points,
            dt: c.dt,
            horizon: c.horizon,
            sample_stride: c.sample_stride,
            fp_tol: c.tolerances.fp_tol,
            fp_max_iters: c.tolerances.fp_max_iters,
            compat_tol: c.compat_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub spacing: f64,
    pub steps: usize,
    pub samples: usize,
    pub sample_interval: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    #[serde(with = "real")]
    pub alpha: f64,
    #[serde(with = "real")]
    pub beta: f64,
    pub l2_neumann: bool,
    pub quartic_decay: bool,
    pub l1_neumann: bool,
    pub p_feasible: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub final_time: f64,
    pub max_fp_iterations: usize,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Invariants {
    #[serde(with = "real")]
    pub virial_relative_max: f64,
    pub virial_tolerance: f64,
    pub virial_passes: bool,
    /// The run would have aborted otherwise.
    pub truncation_passes: bool,
    pub leakage_tolerance: f64,
    pub truncation_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualMaxima {
    #[serde(with = "real")]
    pub mass: f64,
    #[serde(with = "real")]
    pub energy: f64,
    #[serde(with = "real")]
    pub neumann_sq: f64,
    #[serde(with = "real")]
    pub neumann_sq_imag: f64,
    #[serde(with = "real")]
    pub balance: f64,
    #[serde(with = "real")]
    pub integrated_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    #[serde(with = "real")]
    pub exponent: f64,
    #[serde(with = "real")]
    pub amplitude: f64,
    #[serde(with = "real")]
    pub max_log_residual: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeumannL2Summary {
    #[serde(with = "real")]
    pub sup: f64,
    #[serde(with = "real")]
    pub first_decade_sup: f64,
    #[serde(with = "real")]
    pub last_decade_sup: f64,
    #[serde(with = "real")]
    pub growth: f64,
    pub bounded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FSummary {
    #[serde(with = "real")]
    pub sup_abs: f64,
    #[serde(with = "real")]
    pub last_decade_increment: f64,
    pub bounded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarticSummary {
    #[serde(with = "real")]
    pub sup_over_unit: f64,
    #[serde(with = "real")]
    pub sup_over_late: f64,
    #[serde(with = "real")]
    pub sup_over_run: f64,
    pub within_factor: bool,
    pub fit: Option<Fit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupNormSummary {
    pub bound_holds: bool,
    #[serde(with = "real")]
    pub first_window_mean: f64,
    #[serde(with = "real")]
    pub last_window_mean: f64,
    #[serde(with = "real")]
    pub trend_slope: f64,
    pub fit: Option<Fit>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSummary {
    pub p: f64,
    #[serde(with = "real")]
    pub total: f64,
    #[serde(with = "real")]
    pub tail_increment: f64,
    #[serde(with = "real")]
    pub tail_ratio: f64,
    /// `null` in diagnostic mode.
    pub verdict: Option<Verdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1Summary {
    pub epsilon: f64,
    #[serde(with = "real")]
    pub total: f64,
    #[serde(with = "real")]
    pub tail_increment: f64,
    #[serde(with = "real")]
    pub tail_ratio: f64,
    pub dominated: bool,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSource {
    Override,
    Feasible,
    Diagnostic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatesSummary {
    pub weight_source: WeightSource,
    pub neumann_l2: NeumannL2Summary,
    pub f_check: FSummary,
    pub quartic: QuarticSummary,
    pub sup_norm: SupNormSummary,
    pub weighted: WeightedSummary,
    pub l1: L1Summary,
    pub norm_sups: NormSups,
}

fn fit(f: &Option<halfline_core::estimates::DecayFit>) -> Option<Fit> {
    f.map(|f| Fit {
        exponent: f.exponent,
        amplitude: f.amplitude,
        max_log_residual: f.max_log_residual,
        window: f.window,
        samples: f.samples,
    })
}

impl EstimatesSummary {
    pub fn new(r: &EstimateReport, weight_source: WeightSource) -> Self {
        Self {
            weight_source,
            neumann_l2: NeumannL2Summary {
                sup: r.neumann_l2.sup,
                first_decade_sup: r.neumann_l2.first_decade_sup,
                last_decade_sup: r.neumann_l2.last_decade_sup,
                growth: r.neumann_l2.growth,
                bounded: r.neumann_l2.bounded,
            },
            f_check: FSummary {
                sup_abs: r.f_check.sup_abs,
                last_decade_increment: r.f_check.last_decade_increment,
                bounded: r.f_check.bounded,
            },
            quartic: QuarticSummary {
                sup_over_unit: r.quartic.sup_over_unit,
                sup_over_late: r.quartic.sup_over_late,
                sup_over_run: r.quartic.sup_over_run,
                within_factor: r.quartic.within_factor,
                fit: fit(&r.quartic.fit),
            },
            sup_norm: SupNormSummary {
                bound_holds: r.sup_norm.bound_holds,
                first_window_mean: r.sup_norm.first_window_mean,
                last_window_mean: r.sup_norm.last_window_mean,
                trend_slope: r.sup_norm.trend_slope,
                fit: fit(&r.sup_norm.fit),
                verdict: r.sup_norm.verdict,
            },
            weighted: WeightedSummary {
                p: r.weighted.p,
                total: r.weighted.total,
                tail_increment: r.weighted.tail_increment,
                tail_ratio: r.weighted.tail_ratio,
                verdict: r.weighted.verdict,
            },
            l1: L1Summary {
                epsilon: r.l1.epsilon,
                total: r.l1.total,
                tail_increment: r.l1.tail_increment,
                tail_ratio: r.l1.tail_ratio,
                dominated: r.l1.dominated,
                verdict: r.l1.verdict,
            },
            norm_sups: r.norm_sups,
        }
    }
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub scenario: String,
    pub provenance: Provenance,
    pub config: ConfigEcho,
    pub grid: GridInfo,
    pub admissibility: Option<Admissibility>,
    pub run: RunInfo,
    pub invariants: Invariants,
    pub residual_max: ResidualMaxima,
    pub estimates: Option<EstimatesSummary>,
    pub estimates_error: Option<String>,
}

/// Everything written for one run, held in memory until written.
pub struct RunArtifact {
    pub diagnostics_csv: Vec<u8>,
    pub residuals_csv: Vec<u8>,
    pub report: Report,
}

impl RunArtifact {
    pub fn build(
        scenario: &str,
        cfg: &ScenarioConfig,
        out: &RunOutput,
        estimates: Result<(EstimateReport, WeightSource), String>,
        provenance: Provenance,
        wall_seconds: f64,
    ) -> Self {
        let integrated = integrated_mass_balance(&out.diagnostics).unwrap_or_default();
        let r = &out.residuals;
        let virial = r.virial_relative_max();
        let admissibility = cfg.dirichlet().map(|d| {
            let (alpha, beta) = d.decay_exponents();
            let a = halfline_core::scenario::AdmissibilityClass::from_exponents(alpha, beta);
            Admissibility {
                alpha,
                beta,
                l2_neumann: a.l2_neumann,
                quartic_decay: a.quartic_decay,
                l1_neumann: a.l1_neumann,
                p_feasible: a.p_feasible,
            }
        });
        let (estimates, estimates_error) = match estimates {
            Ok((rep, src)) => (Some(EstimatesSummary::new(&rep, src)), None),
            Err(e) => (None, Some(e)),
        };
        let report = Report {
            schema_version: SCHEMA_VERSION,
            scenario: scenario.to_string(),
            provenance,
            config: cfg.into(),
            grid: GridInfo {
                spacing: cfg.grid_spacing(),
                steps: cfg.steps(),
                samples: out.diagnostics.len(),
                sample_interval: cfg.sample_interval(),
            },
            admissibility,
            run: RunInfo { final_time: out.final_state.t, max_fp_iterations: out.max_fp_iterations, wall_seconds },
            invariants: Invariants {
                virial_relative_max: virial,
                virial_tolerance: VIRIAL_TOLERANCE,
                virial_passes: virial <= VIRIAL_TOLERANCE,
                truncation_passes: true,
                leakage_tolerance: LEAKAGE_TOLERANCE,
                truncation_tolerance: TRUNCATION_TOLERANCE,
            },
            residual_max: ResidualMaxima {
                mass: IdentityResiduals::max_abs(&r.mass),
                energy: IdentityResiduals::max_abs(&r.energy),
                neumann_sq: IdentityResiduals::max_abs(&r.neumann_sq),
                neumann_sq_imag: IdentityResiduals::max_abs(&r.neumann_sq_imag),
                balance: IdentityResiduals::max_abs(&r.balance),
                integrated_mass: IdentityResiduals::max_abs(&integrated),
            },
            estimates,
            estimates_error,
        };
        Self { diagnostics_csv: diagnostics_csv(&out.diagnostics), residuals_csv: residuals_csv(r, &integrated), report }
    }

    pub fn write(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        let json = serde_json::to_vec_pretty(&self.report).map_err(io::Error::other)?;
        write_atomic(&dir.join("diagnostics.csv"), &self.diagnostics_csv)?;
        write_atomic(&dir.join("residuals.csv"), &self.residuals_csv)?;
        write_atomic(&dir.join("report.json"), &json)
    }
}

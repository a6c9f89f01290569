use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use halfline::commands::{self, CliError, RunRequest};

/// Defocusing cubic NLS on the half-line: simulation and verification.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenarios and write diagnostics.csv, residuals.csv and report.json
    Run {
        /// Scenario file; repeat to run several in parallel into <out>/<stem>/
        #[arg(long = "config", required = true)]
        configs: Vec<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Weight exponent p for the weighted Neumann integral
        #[arg(long)]
        p_override: Option<f64>,
        #[arg(long)]
        horizon_override: Option<f64>,
    },
    /// Refinement study on a manufactured-solution scenario
    Converge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        /// Also write convergence.csv and convergence.json here
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        horizon_override: Option<f64>,
    },
    /// Tabulate hypothesis flags against verdicts across report.json files
    Report {
        reports: Vec<PathBuf>,
        /// Also write comparison.csv here
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { configs, out, p_override, horizon_override } => {
            let req = RunRequest { configs, out, p_override, horizon_override };
            for s in commands::run_cmd(&req)? {
                println!("{}", commands::describe(&s));
            }
            Ok(())
        }
        Command::Converge { config, levels, out, horizon_override } => {
            let study = commands::converge_cmd(&config, levels, horizon_override)?;
            print!("{}", commands::convergence_table(&study));
            if let Some(dir) = out {
                commands::write_convergence(&study, &dir)?;
            }
            if study.passes() {
                Ok(())
            } else {
                Err(CliError::Numeric(format!(
                    "fitted orders below {}",
                    halfline_core::refinement::MIN_ORDER
                )))
            }
        }
        Command::Report { reports, out } => {
            print!("{}", commands::report_cmd(&reports, out.as_deref())?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code())
        }
    }
}

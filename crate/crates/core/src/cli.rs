//! Command-line front end: `run` and `verify`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::oracle::compare_trajectories;
use crate::output::{write_outputs, ReferenceComparison, RunSummary};
use crate::scenario::{Scenario, BUILTIN_NAMES};
use crate::sim::{run, run_with, Integrator, PlannerMode, Termination};
use crate::verify::{run_suite, Suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_EARLY_TERMINATION: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "rmpsim", about = "Multi-robot RMP simulations and self-checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario file or a built-in scenario.
    Run(RunArgs),
    /// Run verification suites and print a JSON report.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
    pub scenario: Option<PathBuf>,
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(BUILTIN_NAMES))]
    pub builtin: Option<String>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    pub integrator: Option<IntegratorArg>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_final: Option<f64>,
    /// Output directory (default: `RMPSIM_OUT`, then `out/<scenario>`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub plot: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: Suite,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
pub enum ModeArg {
    Centralized,
    Decentralized,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
pub enum IntegratorArg {
    Rk4,
    SemiImplicitEuler,
}

fn load(args: &RunArgs) -> Result<Scenario, String> {
    let mut sc = match (&args.scenario, &args.builtin) {
        (Some(path), _) => Scenario::load(path).map_err(|e| e.to_string())?,
        (None, Some(name)) => Scenario::builtin(name).map_err(|e| e.to_string())?,
        (None, None) => return Err("either --scenario or --builtin is required".into()),
    };
    if let Some(m) = args.mode {
        sc.sim.mode = match m {
            ModeArg::Centralized => PlannerMode::Centralized,
            ModeArg::Decentralized => PlannerMode::Decentralized,
        };
    }
    if let Some(i) = args.integrator {
        sc.sim.integrator = match i {
            IntegratorArg::Rk4 => Integrator::Rk4,
            IntegratorArg::SemiImplicitEuler => Integrator::SemiImplicitEuler,
        };
    }
    if let Some(dt) = args.dt {
        sc.sim.dt = dt;
    }
    if let Some(t) = args.t_final {
        sc.sim.t_final = t;
    }
    if args.plot {
        sc.outputs.plot = true;
    }
    sc.validate().map_err(|e| e.to_string())?;
    Ok(sc)
}

fn output_dir(args: &RunArgs, sc: &Scenario) -> PathBuf {
    args.out
        .clone()
        .or_else(|| std::env::var_os("RMPSIM_OUT").map(PathBuf::from))
        .or_else(|| sc.outputs.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&sc.name))
}

pub fn cmd_run(args: &RunArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let sc = match load(args) {
        Ok(sc) => sc,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            return EXIT_CONFIG;
        }
    };
    let log = match run(&sc, &sc.sim) {
        Ok(log) => log,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    let mut summary = RunSummary::new(&sc, &log);
    if let Some(r) = &sc.reference {
        let reference = run_with(&sc, &sc.sim, |s| sc.reference_accel(r, s))
            .and_then(|b| compare_trajectories(&log, &b));
        match reference {
            Ok(dev) => {
                summary.reference = Some(ReferenceComparison {
                    law: r.law,
                    max_position_deviation: dev,
                })
            }
            Err(e) => {
                let _ = writeln!(stderr, "warning: reference controller: {e}");
            }
        }
    }
    let dir = output_dir(args, &sc);
    if let Err(e) = write_outputs(&dir, &sc, &log, &summary, sc.outputs.plot) {
        let _ = writeln!(stderr, "error: writing {}: {e}", dir.display());
        return EXIT_CONFIG;
    }
    let _ = writeln!(
        stdout,
        "{}: {} steps, min distance {:.4}, wrote {}",
        sc.name,
        log.steps_completed,
        log.min_distance,
        dir.display()
    );
    match &log.termination {
        Termination::Completed => EXIT_OK,
        t => {
            let _ = writeln!(stderr, "early termination: {t:?}");
            EXIT_EARLY_TERMINATION
        }
    }
}

pub fn cmd_verify(args: &VerifyArgs, stdout: &mut dyn Write) -> i32 {
    let reports = run_suite(args.suite);
    let all = reports.iter().all(|r| r.passed);
    let doc = serde_json::json!({ "suite": args.suite, "passed": all, "checks": reports });
    let _ = writeln!(
        stdout,
        "{}",
        serde_json::to_string_pretty(&doc).expect("report serializes")
    );
    if all {
        EXIT_OK
    } else {
        EXIT_CONFIG
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
            } else {
                let _ = write!(stdout, "{e}");
            }
            return code;
        }
    };
    match &cli.command {
        Command::Run(a) => cmd_run(a, stdout, stderr),
        Command::Verify(a) => cmd_verify(a, stdout),
    }
}

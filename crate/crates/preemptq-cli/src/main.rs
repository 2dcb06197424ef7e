//! Command-line driver for the queueing analysis and simulator.
//!
//! Four commands share one JSON configuration format:
//!
//! * `analyze` — loads, stability, busy periods, response moments and
//!   transform samples, as a JSON report;
//! * `simulate` — regenerative simulation estimates, as a JSON report,
//!   with an optional tab-separated event trace;
//! * `validate` — both of the above plus a z-score comparison table;
//!   exits nonzero when any |z| exceeds 4;
//! * `sweep` — metrics tabulated over a grid of one config field, as
//!   CSV on stdout.
//!
//! Exit codes: 0 success; 1 usage, file or syntax trouble; 2 failed
//! validation (a config that violates its invariants, or a `validate`
//! run out of tolerance); 3 lost numeric convergence.

mod report;
mod sweep;

use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use preemptq::sim::{simulate, write_trace_line, SimOpts, Simulation};
use preemptq::{Error, SystemConfig};

use report::{
    analyze_classes, stability_section, validation_section, RunReport,
};
use sweep::Metric;

/// Largest |z| the validate command accepts.
const Z_LIMIT: f64 = 4.0;

fn default_theta_grid() -> Vec<f64> {
    vec![0.01, 0.1, 0.5, 1.0, 2.0, 5.0]
}

#[derive(Parser)]
#[command(
    name = "preemptq",
    version,
    about = "Analyze and simulate preemptive-priority queues with \
             pause/resume preemption overheads"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Simulation flags shared by `simulate` and `validate`.
#[derive(Args)]
struct SimFlags {
    /// Busy cycles to complete before stopping
    #[arg(long, default_value_t = 100_000)]
    cycles: u64,

    /// Master RNG seed (flag overrides the environment default)
    #[arg(long, env = "PREEMPTQ_SEED", default_value_t = 0)]
    seed: u64,

    /// Hard simulation-time horizon; reaching it first yields a
    /// partial result
    #[arg(long, default_value_t = 1e8)]
    max_time: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic report: loads, stability, busy periods and response
    /// times
    Analyze {
        /// Path of the JSON configuration
        config: PathBuf,

        /// Comma-separated transform abscissas
        #[arg(long, value_delimiter = ',')]
        theta_grid: Option<Vec<f64>>,

        /// Response moments to extract (0 to 4)
        #[arg(long, default_value_t = 2)]
        moments: usize,
    },

    /// Simulate and report regenerative estimates
    Simulate {
        /// Path of the JSON configuration
        config: PathBuf,

        #[command(flatten)]
        sim: SimFlags,

        /// Comma-separated transform abscissas
        #[arg(long, value_delimiter = ',')]
        theta_grid: Option<Vec<f64>>,

        /// Write a tab-separated event trace (time, kind, class, job)
        /// to this path
        #[arg(long)]
        trace: Option<PathBuf>,
    },

    /// Run analysis and simulation and compare them with z-scores
    Validate {
        /// Path of the JSON configuration
        config: PathBuf,

        #[command(flatten)]
        sim: SimFlags,

        /// Comma-separated transform abscissas
        #[arg(long, value_delimiter = ',')]
        theta_grid: Option<Vec<f64>>,

        /// Response moments to compare (0 to 4)
        #[arg(long, default_value_t = 2)]
        moments: usize,
    },

    /// Tabulate metrics over a grid of one configuration field (CSV)
    Sweep {
        /// Path of the JSON configuration
        config: PathBuf,

        /// JSON path of the swept scalar, dotted (classes.1.lambda)
        /// or pointer (/classes/1/lambda) form
        #[arg(long)]
        param: String,

        /// Grid description a:b:steps with inclusive endpoints
        #[arg(long)]
        grid: String,

        /// Comma-separated metric names (rho_total, stable,
        /// spectral_radius, rho:<k>, mean_span:<k>, mean_response:<k>,
        /// second_response:<k>)
        #[arg(long, value_delimiter = ',', required = true)]
        metric: Vec<String>,
    },
}

/// A command failure with its exit-code category.
#[derive(Debug)]
enum CliError {
    /// Wrong invocation or unreadable input: exit 1.
    Usage(String),
    /// A configuration that violates its invariants: exit 2.
    Config(Error),
    /// The validate command exceeded its z limit: exit 2.
    OutOfTolerance { max_abs_z: f64 },
    /// An analysis computation failed: exit 3 for lost convergence,
    /// exit 2 otherwise.
    Compute(Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Config(e) => write!(f, "{e}"),
            CliError::OutOfTolerance { max_abs_z } => write!(
                f,
                "validation failed: largest |z| = {max_abs_z:.2} exceeds \
                 the limit {Z_LIMIT}"
            ),
            CliError::Compute(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Config(_) | CliError::OutOfTolerance { .. } => 2,
            CliError::Compute(
                Error::NoConvergence { .. } | Error::NumericPrecision(_),
            ) => 3,
            CliError::Compute(_) => 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are not failures.
            let code = u8::from(err.use_stderr());
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

/// Read, parse and validate a configuration file.
///
/// # Output
/// The validated configuration together with the raw JSON document
/// (the sweep command edits the document directly).
fn load_config(
    path: &Path,
) -> Result<(SystemConfig, serde_json::Value), CliError> {
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::Usage(format!("{}: {e}", path.display()))
    })?;
    let doc: serde_json::Value = serde_json::from_str(&text).map_err(|e| {
        CliError::Usage(format!("{}: {e}", path.display()))
    })?;
    let config =
        SystemConfig::from_json_value(&doc).map_err(CliError::Config)?;
    Ok((config, doc))
}

/// Check transform abscissas from the command line.
fn check_grid(grid: &[f64]) -> Result<(), CliError> {
    for &theta in grid {
        if !(theta.is_finite() && theta >= 0.0) {
            return Err(CliError::Usage(format!(
                "--theta-grid entry {theta} must be nonnegative and finite"
            )));
        }
    }
    Ok(())
}

/// Check the requested moment order.
fn check_moments(moments: usize) -> Result<(), CliError> {
    if moments > 4 {
        return Err(CliError::Usage(format!(
            "--moments {moments} exceeds the supported maximum of 4"
        )));
    }
    Ok(())
}

fn print_report(report: &RunReport) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(report)
        .expect("reports contain no non-serializable values");
    println!("{text}");
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze {
            config,
            theta_grid,
            moments,
        } => {
            let grid = theta_grid.unwrap_or_else(default_theta_grid);
            check_grid(&grid)?;
            check_moments(moments)?;
            let (cfg, _) = load_config(&config)?;
            let report = RunReport {
                command: "analyze",
                stability: stability_section(&cfg).map_err(CliError::Compute)?,
                analytic: Some(
                    analyze_classes(&cfg, &grid, moments)
                        .map_err(CliError::Compute)?,
                ),
                simulation: None,
                validation: None,
                seed: None,
                theta_grid: grid,
                config: cfg,
            };
            print_report(&report)
        }

        Command::Simulate {
            config,
            sim,
            theta_grid,
            trace,
        } => {
            let grid = theta_grid.unwrap_or_else(default_theta_grid);
            check_grid(&grid)?;
            let (cfg, _) = load_config(&config)?;
            let opts = SimOpts {
                seed: sim.seed,
                min_busy_cycles: sim.cycles,
                max_sim_time: sim.max_time,
                theta_grid: grid.clone(),
            };
            let estimates = match trace {
                None => simulate(&cfg, &opts).map_err(CliError::Config)?,
                Some(path) => {
                    let file = fs::File::create(&path).map_err(|e| {
                        CliError::Usage(format!("{}: {e}", path.display()))
                    })?;
                    let mut out = BufWriter::new(file);
                    let mut run = Simulation::new(&cfg, &opts)
                        .map_err(CliError::Config)?;
                    while let Some(info) = run.step() {
                        write_trace_line(&mut out, &info).map_err(|e| {
                            CliError::Usage(format!(
                                "{}: {e}",
                                path.display()
                            ))
                        })?;
                    }
                    out.flush().map_err(|e| {
                        CliError::Usage(format!("{}: {e}", path.display()))
                    })?;
                    run.into_estimates()
                }
            };
            let report = RunReport {
                command: "simulate",
                stability: stability_section(&cfg).map_err(CliError::Compute)?,
                analytic: None,
                simulation: Some(estimates),
                validation: None,
                seed: Some(sim.seed),
                theta_grid: grid,
                config: cfg,
            };
            print_report(&report)
        }

        Command::Validate {
            config,
            sim,
            theta_grid,
            moments,
        } => {
            let grid = theta_grid.unwrap_or_else(default_theta_grid);
            check_grid(&grid)?;
            check_moments(moments)?;
            let (cfg, _) = load_config(&config)?;
            let stability =
                stability_section(&cfg).map_err(CliError::Compute)?;
            if !stability.stable {
                return Err(CliError::Config(Error::UnstableSystem(format!(
                    "validate needs a stable configuration, but the total \
                     load is {:.4}",
                    stability.rho_total
                ))));
            }
            let analytic = analyze_classes(&cfg, &grid, moments)
                .map_err(CliError::Compute)?;
            let opts = SimOpts {
                seed: sim.seed,
                min_busy_cycles: sim.cycles,
                max_sim_time: sim.max_time,
                theta_grid: grid.clone(),
            };
            let estimates =
                simulate(&cfg, &opts).map_err(CliError::Config)?;
            let validation =
                validation_section(&cfg, &analytic, &estimates, Z_LIMIT)
                    .map_err(CliError::Compute)?;
            let passed = validation.passed;
            let max_abs_z = validation.max_abs_z;
            let report = RunReport {
                command: "validate",
                stability,
                analytic: Some(analytic),
                simulation: Some(estimates),
                validation: Some(validation),
                seed: Some(sim.seed),
                theta_grid: grid,
                config: cfg,
            };
            print_report(&report)?;
            if passed {
                Ok(())
            } else {
                Err(CliError::OutOfTolerance { max_abs_z })
            }
        }

        Command::Sweep {
            config,
            param,
            grid,
            metric,
        } => {
            let points = sweep::parse_grid(&grid)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let metrics: Vec<Metric> = metric
                .iter()
                .map(|name| Metric::parse(name))
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let (_, doc) = load_config(&config)?;
            if doc.pointer(&pointer_form(&param)).is_none() {
                return Err(CliError::Usage(format!(
                    "parameter path {param:?} does not exist in the config"
                )));
            }
            let csv = sweep::run_sweep(&doc, &param, &points, &metrics)
                .map_err(|e| match e {
                    Error::NoConvergence { .. }
                    | Error::NumericPrecision(_) => CliError::Compute(e),
                    other => CliError::Config(other),
                })?;
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(csv.as_bytes())
                .map_err(|e| CliError::Usage(format!("stdout: {e}")))?;
            Ok(())
        }
    }
}

/// Normalize a dotted parameter path to JSON Pointer form.
fn pointer_form(param: &str) -> String {
    if param.starts_with('/') {
        param.to_string()
    } else {
        format!("/{}", param.replace('.', "/"))
    }
}

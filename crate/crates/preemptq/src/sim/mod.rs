//! Discrete-event simulation of the preemptive-priority queue.
//!
//! The simulator replays the scheduling rules event by event — in
//! particular the pause/resume overhead chains with their failed
//! resumes — and measures everything the analytic side predicts:
//! response moments, per-class time fractions, overhead loads,
//! busy-period structure, chain link counts, and the waits of early
//! arrivals. Estimates are regenerative: cycles run from one
//! empty-system epoch to the next (idle stretch plus busy period),
//! every reported figure is a ratio of per-cycle sums, and standard
//! errors come from the delta method over cycles, so no warm-up
//! truncation is needed and partial cycles at the horizon are simply
//! discarded.
//!
//! Overheads are nonpreemptible. One consequence deserves a flag: when
//! a higher-priority job arrives while a lower class's *pause* is
//! running (not just its resume), the pause still completes on
//! schedule and the arrival waits in queue — it then wins the next
//! dispatch. The scheduling rules do not call out this case separately;
//! nonpreemptibility implies it.
//!
//! Runs are deterministic: the same configuration, options and seed
//! yield bit-identical traces and estimates. Each stochastic primitive
//! (arrivals, sizes, pauses, resumes, per class) draws from its own
//! counter-based RNG stream derived from the master seed, so estimates
//! stay coupled across parameter sweeps.

mod engine;
mod stats;

use std::io;

use serde::Serialize;

use crate::config::SystemConfig;
use crate::error::Result;

pub use engine::{Event, EventKind, ServerMode, ServerState, Simulation, StepInfo};
pub use stats::Estimate;

/// Options of a simulation run.
#[derive(Debug, Clone, Serialize)]
pub struct SimOpts {
    /// Master seed; every RNG stream is derived from it.
    pub seed: u64,
    /// Busy cycles to complete before stopping (must be positive).
    pub min_busy_cycles: u64,
    /// Hard time horizon; reaching it before the cycle target marks
    /// the estimates partial instead of failing.
    pub max_sim_time: f64,
    /// Transform abscissas at which `exp(-theta * X)` is averaged for
    /// early-arrival waits and busy-period lengths.
    pub theta_grid: Vec<f64>,
}

impl Default for SimOpts {
    fn default() -> Self {
        SimOpts {
            seed: 0,
            min_busy_cycles: 10_000,
            max_sim_time: 1e8,
            theta_grid: vec![0.5, 1.0, 2.0],
        }
    }
}

/// An estimate of a transform value at one abscissa.
#[derive(Debug, Clone, Serialize)]
pub struct ThetaEstimate {
    /// Abscissa `theta`.
    pub theta: f64,
    /// Estimated `E[exp(-theta * X)]`.
    pub estimate: Estimate,
}

/// Statistics of the early arrivals of one class: arrivals that found
/// no same-class job with positive attained service in the system, and
/// whose wait `X` until a same-class job next entered service was
/// measured.
#[derive(Debug, Clone, Serialize)]
pub struct EarlyArrivalEstimates {
    /// Number of measured waits.
    pub samples: u64,
    /// Mean wait.
    pub mean: Estimate,
    /// `E[exp(-theta * X)]` on the configured grid.
    pub transform: Vec<ThetaEstimate>,
}

/// Per-class simulation estimates.
#[derive(Debug, Clone, Serialize)]
pub struct ClassEstimates {
    /// Completed jobs.
    pub completions: u64,
    /// Mean response time (arrival to completion).
    pub response_mean: Estimate,
    /// Second moment of the response time.
    pub response_second_moment: Estimate,
    /// Pause overhead time per completed job.
    pub mean_pause_per_job: Estimate,
    /// Resume overhead time per completed job.
    pub mean_resume_per_job: Estimate,
    /// Effective size per completed job: original service plus all
    /// overhead time spent on it.
    pub mean_effective_size: Estimate,
    /// Fraction of total time in original service of this class.
    pub original_fraction: Estimate,
    /// Fraction of total time in this class's pause overheads.
    pub pause_fraction: Estimate,
    /// Fraction of total time in this class's resume overheads.
    pub resume_fraction: Estimate,
    /// Mean arrivals of class `j` during one job's effective service.
    pub arrivals_per_job: Vec<Estimate>,
    /// Arrival rate of class `j` observed during this class's
    /// effective service time (the Poisson identity makes each entry
    /// estimate `lambda_j`).
    pub arrivals_per_time: Vec<Estimate>,
    /// Overhead chains started (preemptions of original service).
    pub chains: u64,
    /// Mean links (pause/resume rounds) per completed chain.
    pub mean_chain_links: Estimate,
    /// Fraction of resume attempts that succeeded.
    pub resume_success_prob: Estimate,
    /// Completed chains by link count (`histogram[l]` chains that
    /// closed after `l + 1` links).
    pub link_count_histogram: Vec<u64>,
    /// Early-arrival wait statistics.
    pub early_arrivals: EarlyArrivalEstimates,
}

/// Full regenerative estimate bundle of one run.
#[derive(Debug, Clone, Serialize)]
pub struct SimEstimates {
    /// Per-class estimates, in priority order.
    pub classes: Vec<ClassEstimates>,
    /// Complete busy cycles measured.
    pub busy_cycles: u64,
    /// Mean busy-period length.
    pub mean_busy_period: Estimate,
    /// Mean regeneration-cycle length (idle stretch plus busy period).
    pub mean_cycle_length: Estimate,
    /// Fraction of time the system was empty.
    pub idle_fraction: Estimate,
    /// Fraction of time the server was occupied (complement of idle).
    pub busy_fraction: Estimate,
    /// `E[exp(-theta * busy period)]` on the configured grid.
    pub busy_period_transform: Vec<ThetaEstimate>,
    /// Measured horizon (end of the last complete cycle, or the hard
    /// horizon when it cut the run short).
    pub sim_time: f64,
    /// True when the horizon was reached before the cycle target — the
    /// usual symptom of an overloaded system.
    pub partial: bool,
    /// Jobs left in the system when the run stopped (grows with the
    /// horizon when the system is unstable).
    pub jobs_in_system_at_end: usize,
}

impl SimEstimates {
    /// Sum of every time-fraction estimate: per-class original, pause
    /// and resume fractions, plus the idle fraction. Equals one up to
    /// floating-point accumulation.
    pub fn time_fraction_total(&self) -> f64 {
        let busy: f64 = self
            .classes
            .iter()
            .map(|c| {
                c.original_fraction.value
                    + c.pause_fraction.value
                    + c.resume_fraction.value
            })
            .sum();
        busy + self.idle_fraction.value
    }
}

/// Run a full simulation and collect regenerative estimates.
///
/// # Input
/// `config` — the system to simulate (instability is legal and shows
/// up as a partial result); `opts` — seed, cycle target, horizon and
/// transform grid.
///
/// # Output
/// The estimate bundle, or [`Error`](crate::Error)`::InvalidParameter`
/// for non-positive options. When the horizon cuts the run short the
/// `partial` flag is set and whatever complete cycles exist are
/// reported.
///
/// # Examples
/// ```
/// use preemptq::{ClassSpec, Distribution, Mode, SystemConfig};
/// use preemptq::sim::{simulate, SimOpts};
/// let cfg = SystemConfig::new(
///     Mode::PauseResume,
///     vec![ClassSpec::new(0.5, Distribution::exponential(1.0).unwrap())],
/// )
/// .unwrap();
/// let opts = SimOpts { min_busy_cycles: 200, ..SimOpts::default() };
/// let est = simulate(&cfg, &opts).unwrap();
/// assert_eq!(est.busy_cycles, 200);
/// assert!(!est.partial);
/// // M/M/1 at load one half: mean response 2, mean busy period 2.
/// assert!((est.classes[0].response_mean.value - 2.0).abs() < 0.5);
/// assert!((est.mean_busy_period.value - 2.0).abs() < 0.7);
/// ```
pub fn simulate(config: &SystemConfig, opts: &SimOpts) -> Result<SimEstimates> {
    Ok(Simulation::new(config, opts)?.into_estimates())
}

/// Run the simulator for its busy-period tree statistics.
///
/// Same event loop as [`simulate`] — the structural counters are exact
/// byproducts of the scheduling rules, so a separate entry point needs
/// no separate engine. Use this when the quantities of interest are
/// the per-job arrival counts, effective sizes, and overhead-chain
/// link counts rather than response times.
///
/// # Output
/// The same bundle as [`simulate`], with `arrivals_per_job`,
/// `arrivals_per_time`, `mean_effective_size`, `mean_chain_links`,
/// `resume_success_prob` and `link_count_histogram` as the fields of
/// interest.
pub fn structural_counters(
    config: &SystemConfig,
    opts: &SimOpts,
) -> Result<SimEstimates> {
    simulate(config, opts)
}

/// Write one tab-separated trace line for a processed event.
///
/// # Input
/// Any writer and the [`StepInfo`] returned by
/// [`Simulation::step`].
///
/// # Output
/// Writes `time`, `kind`, `class`, `job id` separated by tabs, with
/// `-` for fields the event does not carry, and a trailing newline.
pub fn write_trace_line<W: io::Write>(
    out: &mut W,
    info: &StepInfo,
) -> io::Result<()> {
    write!(out, "{}\t{}", info.event.time, info.event.kind.label())?;
    match info.class {
        Some(c) => write!(out, "\t{c}")?,
        None => write!(out, "\t-")?,
    }
    match info.job {
        Some(id) => writeln!(out, "\t{id}"),
        None => writeln!(out, "\t-"),
    }
}

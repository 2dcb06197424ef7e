//! Regenerative (busy-cycle batch) estimation.
//!
//! Every simulated quantity is reported as a ratio of per-cycle sums
//! over independent regeneration cycles, one cycle per busy period
//! (empty-system epoch to empty-system epoch). Ratio estimators are
//! biased only at order 1/cycles and come with delta-method standard
//! errors, so no warm-up truncation or autocorrelation correction is
//! needed.

use serde::Serialize;

use super::{
    ClassEstimates, EarlyArrivalEstimates, SimEstimates, ThetaEstimate,
};

/// Point estimate with its regenerative standard error.
///
/// When the underlying cycle counts are too small to estimate (fewer
/// than two cycles, or an empty denominator) the value is NaN and the
/// standard error infinite; both serialize as `null`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Estimate {
    /// Ratio point estimate.
    pub value: f64,
    /// Delta-method standard error over regeneration cycles.
    pub std_error: f64,
}

impl Estimate {
    /// Standardized deviation of the estimate from `target`.
    ///
    /// # Output
    /// `(value - target) / std_error`; zero when the estimate hits the
    /// target exactly, even with a zero standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        if self.value == target {
            return 0.0;
        }
        (self.value - target) / self.std_error
    }
}

/// Running cross-moments of per-cycle sums `(y_c, x_c)` for the ratio
/// estimator `R = Σy / Σx`.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Ratio {
    cycles: u64,
    sy: f64,
    sx: f64,
    syy: f64,
    sxx: f64,
    sxy: f64,
}

impl Ratio {
    pub(crate) fn push(&mut self, y: f64, x: f64) {
        self.cycles += 1;
        self.sy += y;
        self.sx += x;
        self.syy += y * y;
        self.sxx += x * x;
        self.sxy += x * y;
    }

    /// Ratio estimate with the regenerative delta-method standard
    /// error: `se² = Var[y - R·x] / (m·x̄²)`.
    pub(crate) fn estimate(&self) -> Estimate {
        if self.sx == 0.0 {
            return Estimate {
                value: f64::NAN,
                std_error: f64::INFINITY,
            };
        }
        let r = self.sy / self.sx;
        if self.cycles < 2 {
            return Estimate {
                value: r,
                std_error: f64::INFINITY,
            };
        }
        let m = self.cycles as f64;
        let centered =
            (self.syy - 2.0 * r * self.sxy + r * r * self.sxx) / (m - 1.0);
        let x_mean = self.sx / m;
        Estimate {
            value: r,
            std_error: (centered.max(0.0) / m).sqrt() / x_mean,
        }
    }
}

/// Raw sums accumulated inside the current (unfinished) cycle and
/// reset at each empty-system epoch.
///
/// Flattened matrices use row-major `[owner * n + arriving]` and
/// `[class * grid_len + grid_index]` layouts.
#[derive(Debug, Clone)]
pub(crate) struct Cycle {
    /// Completed jobs per class.
    pub completions: Vec<u64>,
    /// Summed response times per class.
    pub resp: Vec<f64>,
    /// Summed squared response times per class.
    pub resp2: Vec<f64>,
    /// Original service time per class.
    pub serve: Vec<f64>,
    /// Pause overhead time per class.
    pub pause: Vec<f64>,
    /// Resume overhead time per class.
    pub resume: Vec<f64>,
    /// Arrivals of class `j` during class-`i` effective service.
    pub arrivals: Vec<u64>,
    /// Overhead chains started (preemptions of original service).
    pub chains: Vec<u64>,
    /// Chain links (pauses) started.
    pub links: Vec<u64>,
    /// Completed chains by link count (`link_hist[k][l]` chains of
    /// class `k` closed with `l + 1` links).
    pub link_hist: Vec<Vec<u64>>,
    /// Early arrivals whose wait closed this cycle.
    pub taps: Vec<u64>,
    /// Summed early-arrival waits.
    pub tap_x: Vec<f64>,
    /// Summed `exp(-theta * wait)` per class and grid point.
    pub tap_tf: Vec<f64>,
    /// Idle stretch that opened the cycle.
    pub idle: f64,
}

impl Cycle {
    pub(crate) fn new(n: usize, grid_len: usize) -> Self {
        Cycle {
            completions: vec![0; n],
            resp: vec![0.0; n],
            resp2: vec![0.0; n],
            serve: vec![0.0; n],
            pause: vec![0.0; n],
            resume: vec![0.0; n],
            arrivals: vec![0; n * n],
            chains: vec![0; n],
            links: vec![0; n],
            link_hist: vec![Vec::new(); n],
            taps: vec![0; n],
            tap_x: vec![0.0; n],
            tap_tf: vec![0.0; n * grid_len],
            idle: 0.0,
        }
    }

    pub(crate) fn reset(&mut self) {
        self.completions.fill(0);
        self.resp.fill(0.0);
        self.resp2.fill(0.0);
        self.serve.fill(0.0);
        self.pause.fill(0.0);
        self.resume.fill(0.0);
        self.arrivals.fill(0);
        self.chains.fill(0);
        self.links.fill(0);
        for hist in &mut self.link_hist {
            hist.clear();
        }
        self.taps.fill(0);
        self.tap_x.fill(0.0);
        self.tap_tf.fill(0.0);
        self.idle = 0.0;
    }
}

/// Aggregates completed cycles into the full set of ratio estimators.
#[derive(Debug, Clone)]
pub(crate) struct Collector {
    n: usize,
    grid_len: usize,
    cycles: u64,
    completions: Vec<u64>,
    chains: Vec<u64>,
    link_hist: Vec<Vec<u64>>,
    taps: Vec<u64>,
    resp_mean: Vec<Ratio>,
    resp_m2: Vec<Ratio>,
    pause_per_job: Vec<Ratio>,
    resume_per_job: Vec<Ratio>,
    effective_per_job: Vec<Ratio>,
    original_frac: Vec<Ratio>,
    pause_frac: Vec<Ratio>,
    resume_frac: Vec<Ratio>,
    links_per_chain: Vec<Ratio>,
    resume_success: Vec<Ratio>,
    early_mean: Vec<Ratio>,
    early_tf: Vec<Ratio>,
    arrivals_per_job: Vec<Ratio>,
    arrivals_per_time: Vec<Ratio>,
    idle_frac: Ratio,
    busy_frac: Ratio,
    busy_period: Ratio,
    cycle_length: Ratio,
    busy_tf: Vec<Ratio>,
}

impl Collector {
    pub(crate) fn new(n: usize, grid_len: usize) -> Self {
        Collector {
            n,
            grid_len,
            cycles: 0,
            completions: vec![0; n],
            chains: vec![0; n],
            link_hist: vec![Vec::new(); n],
            taps: vec![0; n],
            resp_mean: vec![Ratio::default(); n],
            resp_m2: vec![Ratio::default(); n],
            pause_per_job: vec![Ratio::default(); n],
            resume_per_job: vec![Ratio::default(); n],
            effective_per_job: vec![Ratio::default(); n],
            original_frac: vec![Ratio::default(); n],
            pause_frac: vec![Ratio::default(); n],
            resume_frac: vec![Ratio::default(); n],
            links_per_chain: vec![Ratio::default(); n],
            resume_success: vec![Ratio::default(); n],
            early_mean: vec![Ratio::default(); n],
            early_tf: vec![Ratio::default(); n * grid_len],
            arrivals_per_job: vec![Ratio::default(); n * n],
            arrivals_per_time: vec![Ratio::default(); n * n],
            idle_frac: Ratio::default(),
            busy_frac: Ratio::default(),
            busy_period: Ratio::default(),
            cycle_length: Ratio::default(),
            busy_tf: vec![Ratio::default(); grid_len],
        }
    }

    pub(crate) fn cycles(&self) -> u64 {
        self.cycles
    }

    /// Fold one completed cycle (idle stretch of `length - busy`
    /// followed by a busy period of `busy`) into every estimator.
    pub(crate) fn flush(
        &mut self,
        cycle: &Cycle,
        length: f64,
        busy: f64,
        grid: &[f64],
    ) {
        let n = self.n;
        self.cycles += 1;
        for k in 0..n {
            let jobs = cycle.completions[k] as f64;
            self.completions[k] += cycle.completions[k];
            self.chains[k] += cycle.chains[k];
            if self.link_hist[k].len() < cycle.link_hist[k].len() {
                self.link_hist[k].resize(cycle.link_hist[k].len(), 0);
            }
            for (total, &count) in
                self.link_hist[k].iter_mut().zip(&cycle.link_hist[k])
            {
                *total += count;
            }
            self.taps[k] += cycle.taps[k];
            self.resp_mean[k].push(cycle.resp[k], jobs);
            self.resp_m2[k].push(cycle.resp2[k], jobs);
            self.pause_per_job[k].push(cycle.pause[k], jobs);
            self.resume_per_job[k].push(cycle.resume[k], jobs);
            let effective =
                cycle.serve[k] + cycle.pause[k] + cycle.resume[k];
            self.effective_per_job[k].push(effective, jobs);
            self.original_frac[k].push(cycle.serve[k], length);
            self.pause_frac[k].push(cycle.pause[k], length);
            self.resume_frac[k].push(cycle.resume[k], length);
            self.links_per_chain[k]
                .push(cycle.links[k] as f64, cycle.chains[k] as f64);
            // Each chain ends with exactly one successful resume, so
            // successes per attempt is chains over links.
            self.resume_success[k]
                .push(cycle.chains[k] as f64, cycle.links[k] as f64);
            self.early_mean[k].push(cycle.tap_x[k], cycle.taps[k] as f64);
            for g in 0..self.grid_len {
                self.early_tf[k * self.grid_len + g].push(
                    cycle.tap_tf[k * self.grid_len + g],
                    cycle.taps[k] as f64,
                );
            }
            for j in 0..n {
                let count = cycle.arrivals[k * n + j] as f64;
                self.arrivals_per_job[k * n + j].push(count, jobs);
                self.arrivals_per_time[k * n + j].push(count, effective);
            }
        }
        self.idle_frac.push(length - busy, length);
        self.busy_frac.push(busy, length);
        self.busy_period.push(busy, 1.0);
        self.cycle_length.push(length, 1.0);
        for (g, &theta) in grid.iter().enumerate() {
            self.busy_tf[g].push((-theta * busy).exp(), 1.0);
        }
    }

    /// Assemble the public estimate bundle.
    pub(crate) fn into_estimates(
        self,
        grid: &[f64],
        sim_time: f64,
        partial: bool,
        jobs_in_system_at_end: usize,
    ) -> SimEstimates {
        let n = self.n;
        let classes = (0..n)
            .map(|k| ClassEstimates {
                completions: self.completions[k],
                response_mean: self.resp_mean[k].estimate(),
                response_second_moment: self.resp_m2[k].estimate(),
                mean_pause_per_job: self.pause_per_job[k].estimate(),
                mean_resume_per_job: self.resume_per_job[k].estimate(),
                mean_effective_size: self.effective_per_job[k].estimate(),
                original_fraction: self.original_frac[k].estimate(),
                pause_fraction: self.pause_frac[k].estimate(),
                resume_fraction: self.resume_frac[k].estimate(),
                arrivals_per_job: (0..n)
                    .map(|j| self.arrivals_per_job[k * n + j].estimate())
                    .collect(),
                arrivals_per_time: (0..n)
                    .map(|j| self.arrivals_per_time[k * n + j].estimate())
                    .collect(),
                chains: self.chains[k],
                mean_chain_links: self.links_per_chain[k].estimate(),
                resume_success_prob: self.resume_success[k].estimate(),
                link_count_histogram: self.link_hist[k].clone(),
                early_arrivals: EarlyArrivalEstimates {
                    samples: self.taps[k],
                    mean: self.early_mean[k].estimate(),
                    transform: grid
                        .iter()
                        .enumerate()
                        .map(|(g, &theta)| ThetaEstimate {
                            theta,
                            estimate: self.early_tf[k * self.grid_len + g]
                                .estimate(),
                        })
                        .collect(),
                },
            })
            .collect();
        SimEstimates {
            classes,
            busy_cycles: self.cycles,
            mean_busy_period: self.busy_period.estimate(),
            mean_cycle_length: self.cycle_length.estimate(),
            idle_fraction: self.idle_frac.estimate(),
            busy_fraction: self.busy_frac.estimate(),
            busy_period_transform: grid
                .iter()
                .enumerate()
                .map(|(g, &theta)| ThetaEstimate {
                    theta,
                    estimate: self.busy_tf[g].estimate(),
                })
                .collect(),
            sim_time,
            partial,
            jobs_in_system_at_end,
        }
    }
}

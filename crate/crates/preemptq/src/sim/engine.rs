//! Event-driven core of the simulator.
//!
//! The engine replays the scheduling algorithm literally: a preempted
//! job triggers a pause, a previously paused job triggers a resume
//! before re-entering service, a resume fails exactly when a
//! higher-priority arrival lands during it, and overheads are
//! nonpreemptible (arrivals during a pause or resume queue up and wait,
//! including arrivals of better priority than the overhead's owner).
//! In the repeat modes preemption instead discards progress — with a
//! fresh size redrawn on reentry (repeat-different) or the original
//! size kept (repeat-identical) — and no overheads exist.
//!
//! There is no event calendar to invalidate: at most one completion
//! (service, pause, or resume) is pending at a time, so the next event
//! is the minimum of that completion and the per-class next arrivals
//! under the [`Event`] ordering.

use std::cmp::Ordering;
use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{Mode, SystemConfig};
use crate::error::{Error, Result};

use super::stats::{Collector, Cycle};
use super::{SimEstimates, SimOpts};

/// What an event does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EventKind {
    /// The job in service finishes.
    ServiceCompletion,
    /// A pause overhead finishes.
    PauseCompletion,
    /// A resume overhead finishes (successfully or not).
    ResumeCompletion,
    /// A job of the given class arrives.
    Arrival(usize),
}

impl EventKind {
    /// Position in the fixed tie-breaking order: completions are
    /// processed before arrivals at the same instant, and a service
    /// completion before overhead completions.
    pub fn tie_rank(self) -> u8 {
        match self {
            EventKind::ServiceCompletion => 0,
            EventKind::PauseCompletion => 1,
            EventKind::ResumeCompletion => 2,
            EventKind::Arrival(_) => 3,
        }
    }

    /// Stable lowercase token naming the kind in trace output.
    pub fn label(self) -> &'static str {
        match self {
            EventKind::ServiceCompletion => "service_completion",
            EventKind::PauseCompletion => "pause_completion",
            EventKind::ResumeCompletion => "resume_completion",
            EventKind::Arrival(_) => "arrival",
        }
    }
}

/// One scheduled occurrence in the simulation.
///
/// Events are ordered by `(time, tie_rank)`; simultaneous arrivals of
/// different classes (probability zero under Poisson arrivals, but
/// possible in floating point) order by class for determinism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    /// Occurrence time.
    pub time: f64,
    /// What happens.
    pub kind: EventKind,
    /// Cached [`EventKind::tie_rank`] of `kind`.
    pub tie_rank: u8,
}

impl Event {
    /// Build an event, deriving the tie rank from the kind.
    pub fn new(time: f64, kind: EventKind) -> Self {
        Event {
            time,
            kind,
            tie_rank: kind.tie_rank(),
        }
    }

    /// Total processing order: time, then tie rank, then arrival class.
    pub fn order(&self, other: &Event) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.tie_rank.cmp(&other.tie_rank))
            .then_with(|| match (self.kind, other.kind) {
                (EventKind::Arrival(a), EventKind::Arrival(b)) => a.cmp(&b),
                _ => Ordering::Equal,
            })
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.order(other))
    }
}

/// What the server is doing, as visible state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ServerMode {
    /// Empty system.
    Idle,
    /// Working on a job's original size.
    Serving {
        /// Class of the job in service.
        class: usize,
        /// Identifier of the job in service.
        job: u64,
    },
    /// Running the pause overhead of a preempted job.
    InPause {
        /// Class of the paused job.
        class: usize,
    },
    /// Running the resume overhead of a paused job about to re-enter
    /// service.
    InResume {
        /// Class of the resuming job.
        class: usize,
    },
}

/// A job in the system.
#[derive(Debug, Clone, Copy)]
struct Job {
    id: u64,
    class: usize,
    arrival: f64,
    /// Size drawn for the current service attempt.
    size: f64,
    /// Original work still owed.
    remaining: f64,
    /// Total service ever received (repeat modes: including discarded
    /// attempts) — positive attained service disqualifies later
    /// same-class arrivals from being "early".
    attained: f64,
    /// Previously paused: must go through a resume before service.
    paused: bool,
    /// Repeat-different: redraw the size at the next service start.
    redraw: bool,
}

/// The single pending completion and its bookkeeping.
#[derive(Debug, Clone, Copy)]
enum Activity {
    Serve {
        since: f64,
        until: f64,
    },
    Pause {
        class: usize,
        job: u64,
        since: f64,
        until: f64,
    },
    Resume {
        class: usize,
        job: u64,
        since: f64,
        until: f64,
        /// Higher-priority arrivals so far during this resume; any
        /// makes the resume fail.
        preemptors: u32,
    },
}

/// Full scheduling state: the server's current activity, the per-class
/// FCFS queues, and the preempted progress of paused jobs.
///
/// At most one job per class can be paused at a time (a second job of
/// the same class can only start service after the paused one, which
/// sits at its queue's front, has left), so the preempted-progress map
/// is reachable through the queue fronts.
#[derive(Debug, Clone)]
pub struct ServerState {
    queues: Vec<VecDeque<Job>>,
    serving: Option<Job>,
    activity: Option<Activity>,
}

impl ServerState {
    fn new(n: usize) -> Self {
        ServerState {
            queues: vec![VecDeque::new(); n],
            serving: None,
            activity: None,
        }
    }

    /// Current mode of the server.
    pub fn mode(&self) -> ServerMode {
        match (&self.activity, &self.serving) {
            (Some(Activity::Serve { .. }), Some(job)) => ServerMode::Serving {
                class: job.class,
                job: job.id,
            },
            (Some(Activity::Pause { class, .. }), None) => {
                ServerMode::InPause { class: *class }
            }
            (Some(Activity::Resume { class, .. }), None) => {
                ServerMode::InResume { class: *class }
            }
            (None, None) => ServerMode::Idle,
            _ => unreachable!("serving slot and activity out of sync"),
        }
    }

    /// Jobs of `class` waiting in queue (including a paused one).
    pub fn waiting(&self, class: usize) -> usize {
        self.queues[class].len()
    }

    /// All jobs in the system, waiting or in service.
    pub fn total_jobs(&self) -> usize {
        self.queues.iter().map(VecDeque::len).sum::<usize>()
            + usize::from(self.serving.is_some())
    }

    /// Remaining original size of the paused job of `class`, if any.
    pub fn preempted_progress(&self, class: usize) -> Option<f64> {
        self.queues[class]
            .front()
            .filter(|j| j.paused)
            .map(|j| j.remaining)
    }

    /// Least class with a nonempty queue.
    fn best_class(&self) -> Option<usize> {
        self.queues.iter().position(|q| !q.is_empty())
    }

    /// Whether any job of `class` in the system has received service.
    fn has_attained_job(&self, class: usize) -> bool {
        if let Some(job) = &self.serving {
            // The job in service is receiving service right now; its
            // `attained` field only updates when the segment closes.
            if job.class == class {
                return true;
            }
        }
        self.queues[class].iter().any(|j| j.attained > 0.0)
    }
}

/// One processed event, with the class and job it concerned — the
/// payload of a trace line.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StepInfo {
    /// The event that was processed.
    pub event: Event,
    /// Class concerned (arriving class, or the class of the completed
    /// job / overhead owner).
    pub class: Option<usize>,
    /// Job concerned.
    pub job: Option<u64>,
}

/// A stepping simulation run.
///
/// [`step`](Simulation::step) processes one event at a time and exposes
/// the scheduling state in between, which is what the conformance tests
/// inspect; [`simulate`](super::simulate) drives it to completion.
pub struct Simulation {
    config: SystemConfig,
    lambdas: Vec<f64>,
    state: ServerState,
    clock: f64,
    next_arrival: Vec<f64>,
    arrival_rngs: Vec<ChaCha8Rng>,
    size_rngs: Vec<ChaCha8Rng>,
    pause_rngs: Vec<ChaCha8Rng>,
    resume_rngs: Vec<ChaCha8Rng>,
    next_id: u64,
    /// Links so far in the currently open overhead chain per class
    /// (zero when no chain is open; at most one chain per class).
    open_links: Vec<u32>,
    cycle: Cycle,
    collector: Collector,
    theta_grid: Vec<f64>,
    cycle_start: f64,
    busy_start: f64,
    pending_taps: Vec<Vec<f64>>,
    min_cycles: u64,
    horizon: f64,
    finished: bool,
    end_time: f64,
}

fn exp_sample(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    if rate <= 0.0 {
        return f64::INFINITY;
    }
    let u: f64 = rng.random();
    -(-u).ln_1p() / rate
}

/// Independent stream per stochastic primitive: four per class, in the
/// order arrivals, sizes, pauses, resumes.
fn stream(seed: u64, class: usize, slot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(4 * class as u64 + slot);
    rng
}

impl Simulation {
    /// Set up a run.
    ///
    /// # Input
    /// `config` — the system to simulate (stability not required);
    /// `opts` — seed, cycle target, horizon and transform grid.
    ///
    /// # Output
    /// [`Error::InvalidParameter`] if the options are not positive.
    pub fn new(config: &SystemConfig, opts: &SimOpts) -> Result<Self> {
        if opts.min_busy_cycles == 0 {
            return Err(Error::InvalidParameter(
                "min_busy_cycles must be positive".into(),
            ));
        }
        if !(opts.max_sim_time > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "max_sim_time = {} must be positive",
                opts.max_sim_time
            )));
        }
        for &th in &opts.theta_grid {
            if !(th.is_finite() && th >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "theta_grid entry {th} must be nonnegative and finite"
                )));
            }
        }
        let n = config.n();
        let lambdas: Vec<f64> = (0..n).map(|c| config.lambda(c)).collect();
        let mut arrival_rngs = Vec::with_capacity(n);
        let mut next_arrival = Vec::with_capacity(n);
        for (c, &lam) in lambdas.iter().enumerate() {
            let mut rng = stream(opts.seed, c, 0);
            next_arrival.push(exp_sample(&mut rng, lam));
            arrival_rngs.push(rng);
        }
        Ok(Simulation {
            config: config.clone(),
            lambdas,
            state: ServerState::new(n),
            clock: 0.0,
            next_arrival,
            arrival_rngs,
            size_rngs: (0..n).map(|c| stream(opts.seed, c, 1)).collect(),
            pause_rngs: (0..n).map(|c| stream(opts.seed, c, 2)).collect(),
            resume_rngs: (0..n).map(|c| stream(opts.seed, c, 3)).collect(),
            next_id: 0,
            open_links: vec![0; n],
            cycle: Cycle::new(n, opts.theta_grid.len()),
            collector: Collector::new(n, opts.theta_grid.len()),
            theta_grid: opts.theta_grid.clone(),
            cycle_start: 0.0,
            busy_start: 0.0,
            pending_taps: vec![Vec::new(); n],
            min_cycles: opts.min_busy_cycles,
            horizon: opts.max_sim_time,
            finished: false,
            end_time: 0.0,
        })
    }

    /// Simulation clock: time of the last processed event.
    pub fn clock(&self) -> f64 {
        self.clock
    }

    /// Scheduling state after the last processed event.
    pub fn state(&self) -> &ServerState {
        &self.state
    }

    /// Complete busy cycles measured so far.
    pub fn busy_cycles(&self) -> u64 {
        self.collector.cycles()
    }

    /// Whether the run has ended (cycle target met, or horizon hit).
    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Process the next event.
    ///
    /// # Output
    /// The processed event with its class/job payload, or `None` once
    /// the run has ended. The run ends at the empty-system epoch that
    /// completes the target number of busy cycles, or as soon as the
    /// next event would lie beyond the time horizon.
    pub fn step(&mut self) -> Option<StepInfo> {
        if self.finished {
            return None;
        }
        let ev = match self.peek_event() {
            Some(ev) => ev,
            None => {
                self.finished = true;
                self.end_time = self.clock;
                return None;
            }
        };
        if ev.time > self.horizon {
            self.finished = true;
            self.end_time = self.horizon;
            return None;
        }
        self.clock = ev.time;
        let info = match ev.kind {
            EventKind::Arrival(c) => self.on_arrival(c, ev),
            EventKind::ServiceCompletion => self.on_service_completion(ev),
            EventKind::PauseCompletion => self.on_pause_completion(ev),
            EventKind::ResumeCompletion => self.on_resume_completion(ev),
        };
        Some(info)
    }

    /// Finish the run and return the regenerative estimates.
    pub fn into_estimates(mut self) -> SimEstimates {
        while self.step().is_some() {}
        let partial = self.collector.cycles() < self.min_cycles;
        self.collector.into_estimates(
            &self.theta_grid,
            self.end_time,
            partial,
            self.state.total_jobs(),
        )
    }

    /// Next event under the `(time, tie_rank)` order: the pending
    /// completion, if any, against every class's next arrival.
    fn peek_event(&self) -> Option<Event> {
        let mut best: Option<Event> = None;
        if let Some(activity) = &self.state.activity {
            let (kind, until) = match activity {
                Activity::Serve { until, .. } => {
                    (EventKind::ServiceCompletion, *until)
                }
                Activity::Pause { until, .. } => {
                    (EventKind::PauseCompletion, *until)
                }
                Activity::Resume { until, .. } => {
                    (EventKind::ResumeCompletion, *until)
                }
            };
            best = Some(Event::new(until, kind));
        }
        for (c, &t) in self.next_arrival.iter().enumerate() {
            if t.is_finite() {
                let candidate = Event::new(t, EventKind::Arrival(c));
                if best
                    .map_or(true, |b| candidate.order(&b) == Ordering::Less)
                {
                    best = Some(candidate);
                }
            }
        }
        best
    }

    /// Class of the job the server is currently working for, through
    /// original service or one of its overheads.
    fn owner_class(&self) -> Option<usize> {
        match &self.state.activity {
            Some(Activity::Serve { .. }) => {
                self.state.serving.as_ref().map(|j| j.class)
            }
            Some(Activity::Pause { class, .. })
            | Some(Activity::Resume { class, .. }) => Some(*class),
            None => None,
        }
    }

    fn on_arrival(&mut self, c: usize, ev: Event) -> StepInfo {
        let t = ev.time;
        let n = self.config.n();
        self.next_arrival[c] =
            t + exp_sample(&mut self.arrival_rngs[c], self.lambdas[c]);

        // Attribute the arrival to the job whose effective service the
        // server is in (original, pause or resume time all count).
        if let Some(owner) = self.owner_class() {
            self.cycle.arrivals[owner * n + c] += 1;
        }
        // A higher-priority arrival during a resume makes it fail.
        if let Some(Activity::Resume {
            class, preemptors, ..
        }) = &mut self.state.activity
        {
            if c < *class {
                *preemptors += 1;
            }
        }
        // Early arrival: no job of this class present has been served.
        if !self.state.has_attained_job(c) {
            self.pending_taps[c].push(t);
        }

        let size = self.config.class(c).size.sample(&mut self.size_rngs[c]);
        let job = Job {
            id: self.next_id,
            class: c,
            arrival: t,
            size,
            remaining: size,
            attained: 0.0,
            paused: false,
            redraw: false,
        };
        self.next_id += 1;
        let info = StepInfo {
            event: ev,
            class: Some(c),
            job: Some(job.id),
        };

        match &self.state.activity {
            None => {
                // Arrival to an empty system: the idle stretch ends and
                // a busy period begins with this job.
                debug_assert_eq!(self.state.total_jobs(), 0);
                self.cycle.idle = t - self.cycle_start;
                self.busy_start = t;
                self.state.queues[c].push_back(job);
                self.dispatch(t);
            }
            Some(Activity::Serve { .. }) => {
                let served = self.state.serving.as_ref().expect("serving job");
                if c < served.class {
                    self.preempt_serving(t);
                    self.state.queues[c].push_back(job);
                    if self.config.mode() != Mode::PauseResume {
                        // No overheads in the repeat modes: the best
                        // job (this arrival) enters service at once.
                        self.dispatch(t);
                    }
                } else {
                    self.state.queues[c].push_back(job);
                }
            }
            // Overheads are nonpreemptible: the arrival queues even if
            // it outranks the overhead's owner.
            Some(Activity::Pause { .. }) | Some(Activity::Resume { .. }) => {
                self.state.queues[c].push_back(job);
            }
        }
        info
    }

    /// Take the serving job off the server, bank its progress, and —
    /// in pause/resume mode — start its pause and a new overhead chain.
    fn preempt_serving(&mut self, t: f64) {
        let mut job = self.state.serving.take().expect("preempting idle server");
        let since = match self.state.activity.take() {
            Some(Activity::Serve { since, .. }) => since,
            other => unreachable!("preempting during {other:?}"),
        };
        let elapsed = t - since;
        job.attained += elapsed;
        self.cycle.serve[job.class] += elapsed;
        let k = job.class;
        match self.config.mode() {
            Mode::PauseResume => {
                job.remaining = (job.remaining - elapsed).max(0.0);
                job.paused = true;
                self.state.queues[k].push_front(job);
                self.cycle.chains[k] += 1;
                self.open_links[k] = 0;
                self.begin_pause(k, job.id, t);
            }
            Mode::RepeatDifferent => {
                job.redraw = true;
                self.state.queues[k].push_front(job);
            }
            Mode::RepeatIdentical => {
                job.remaining = job.size;
                self.state.queues[k].push_front(job);
            }
        }
    }

    /// Serve or resume the best-priority job. Runs whenever the server
    /// comes free with jobs present.
    fn dispatch(&mut self, t: f64) {
        debug_assert!(self.state.activity.is_none());
        let k = self.state.best_class().expect("dispatch on empty system");
        // Best-priority selection: nothing better may be waiting.
        debug_assert!(
            self.state.queues[..k].iter().all(VecDeque::is_empty),
            "dispatch skipped a higher-priority job"
        );
        let front = self.state.queues[k].front().expect("nonempty queue");
        if front.paused {
            self.begin_resume(k, front.id, t);
        } else {
            let job = self.state.queues[k].pop_front().expect("nonempty queue");
            self.begin_serving(job, t);
        }
    }

    fn begin_serving(&mut self, mut job: Job, t: f64) {
        if job.redraw {
            job.size = self
                .config
                .class(job.class)
                .size
                .sample(&mut self.size_rngs[job.class]);
            job.remaining = job.size;
            job.redraw = false;
        }
        // A job of this class begins service: every pending
        // early-arrival clock for the class stops now.
        let grid_len = self.theta_grid.len();
        for t0 in self.pending_taps[job.class].drain(..) {
            let x = t - t0;
            self.cycle.taps[job.class] += 1;
            self.cycle.tap_x[job.class] += x;
            for (g, &th) in self.theta_grid.iter().enumerate() {
                self.cycle.tap_tf[job.class * grid_len + g] +=
                    (-th * x).exp();
            }
        }
        self.state.activity = Some(Activity::Serve {
            since: t,
            until: t + job.remaining,
        });
        self.state.serving = Some(job);
    }

    fn begin_pause(&mut self, k: usize, job: u64, t: f64) {
        let dur = self.config.class(k).pause.sample(&mut self.pause_rngs[k]);
        // One chain link per pause (each pause is answered by exactly
        // one resume attempt).
        self.cycle.links[k] += 1;
        self.open_links[k] += 1;
        self.state.activity = Some(Activity::Pause {
            class: k,
            job,
            since: t,
            until: t + dur,
        });
    }

    fn begin_resume(&mut self, k: usize, job: u64, t: f64) {
        let dur = self.config.class(k).resume.sample(&mut self.resume_rngs[k]);
        self.state.activity = Some(Activity::Resume {
            class: k,
            job,
            since: t,
            until: t + dur,
            preemptors: 0,
        });
    }

    fn on_service_completion(&mut self, ev: Event) -> StepInfo {
        let t = ev.time;
        let job = self.state.serving.take().expect("completion without job");
        let since = match self.state.activity.take() {
            Some(Activity::Serve { since, until }) => {
                debug_assert_eq!(until, t);
                since
            }
            other => unreachable!("service completion during {other:?}"),
        };
        let k = job.class;
        self.cycle.serve[k] += t - since;
        let response = t - job.arrival;
        self.cycle.completions[k] += 1;
        self.cycle.resp[k] += response;
        self.cycle.resp2[k] += response * response;
        let info = StepInfo {
            event: ev,
            class: Some(k),
            job: Some(job.id),
        };

        if self.state.total_jobs() == 0 {
            // Empty-system epoch: the regeneration cycle (idle stretch
            // plus busy period) is complete.
            debug_assert!(self.pending_taps.iter().all(Vec::is_empty));
            let length = t - self.cycle_start;
            let busy = t - self.busy_start;
            self.collector
                .flush(&self.cycle, length, busy, &self.theta_grid);
            self.cycle.reset();
            self.cycle_start = t;
            if self.collector.cycles() >= self.min_cycles {
                self.finished = true;
                self.end_time = t;
            }
        } else {
            self.dispatch(t);
        }
        info
    }

    fn on_pause_completion(&mut self, ev: Event) -> StepInfo {
        let t = ev.time;
        let (k, job, since) = match self.state.activity.take() {
            Some(Activity::Pause {
                class,
                job,
                since,
                until,
            }) => {
                debug_assert_eq!(until, t);
                (class, job, since)
            }
            other => unreachable!("pause completion during {other:?}"),
        };
        self.cycle.pause[k] += t - since;
        // The job that was paused must still be waiting at its queue
        // front — nothing can overtake it within its class.
        debug_assert_eq!(
            self.state.queues[k].front().map(|j| j.id),
            Some(job)
        );
        self.dispatch(t);
        StepInfo {
            event: ev,
            class: Some(k),
            job: Some(job),
        }
    }

    fn on_resume_completion(&mut self, ev: Event) -> StepInfo {
        let t = ev.time;
        let (k, job_id, since, preemptors) = match self.state.activity.take() {
            Some(Activity::Resume {
                class,
                job,
                since,
                until,
                preemptors,
            }) => {
                debug_assert_eq!(until, t);
                (class, job, since, preemptors)
            }
            other => unreachable!("resume completion during {other:?}"),
        };
        self.cycle.resume[k] += t - since;
        if preemptors > 0 {
            // Failed resume: a higher-priority job arrived during it,
            // so the chain grows another pause-resume link.
            self.begin_pause(k, job_id, t);
        } else {
            let mut job = self.state.queues[k]
                .pop_front()
                .expect("resumed class has no job");
            debug_assert!(job.paused, "resumed a job that was never paused");
            debug_assert_eq!(job.id, job_id);
            job.paused = false;
            // The chain closes; record its link count.
            let links = self.open_links[k] as usize;
            debug_assert!(links >= 1, "chain closed without any pause");
            let hist = &mut self.cycle.link_hist[k];
            if hist.len() < links {
                hist.resize(links, 0);
            }
            hist[links - 1] += 1;
            self.open_links[k] = 0;
            self.begin_serving(job, t);
        }
        StepInfo {
            event: ev,
            class: Some(k),
            job: Some(job_id),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ClassSpec;
    use crate::durations::Distribution;

    fn exp(rate: f64) -> Distribution {
        Distribution::exponential(rate).unwrap()
    }

    fn two_class_overhead() -> SystemConfig {
        SystemConfig::new(
            Mode::PauseResume,
            vec![
                ClassSpec::new(0.2, exp(2.0)),
                ClassSpec::new(0.5, exp(1.0)).with_overheads(
                    Distribution::deterministic(0.1).unwrap(),
                    exp(10.0),
                ),
            ],
        )
        .unwrap()
    }

    #[test]
    fn events_order_by_time_then_tie_rank() {
        let sc = Event::new(1.0, EventKind::ServiceCompletion);
        let pc = Event::new(1.0, EventKind::PauseCompletion);
        let rc = Event::new(1.0, EventKind::ResumeCompletion);
        let ar = Event::new(1.0, EventKind::Arrival(0));
        assert_eq!(sc.order(&pc), Ordering::Less);
        assert_eq!(pc.order(&rc), Ordering::Less);
        assert_eq!(rc.order(&ar), Ordering::Less);
        assert_eq!(ar.order(&sc), Ordering::Greater);

        let early = Event::new(0.5, EventKind::Arrival(1));
        assert_eq!(early.order(&sc), Ordering::Less);

        let a0 = Event::new(2.0, EventKind::Arrival(0));
        let a1 = Event::new(2.0, EventKind::Arrival(1));
        assert_eq!(a0.order(&a1), Ordering::Less);
        assert_eq!(a0.order(&a0), Ordering::Equal);
        assert!(sc < pc && pc < rc && rc < ar);
    }

    #[test]
    fn tie_ranks_are_pinned() {
        assert_eq!(EventKind::ServiceCompletion.tie_rank(), 0);
        assert_eq!(EventKind::PauseCompletion.tie_rank(), 1);
        assert_eq!(EventKind::ResumeCompletion.tie_rank(), 2);
        assert_eq!(EventKind::Arrival(3).tie_rank(), 3);
        assert_eq!(Event::new(0.0, EventKind::Arrival(3)).tie_rank, 3);
    }

    #[test]
    fn first_events_follow_the_scheduling_algorithm() {
        let cfg = SystemConfig::new(
            Mode::PauseResume,
            vec![ClassSpec::new(0.5, exp(1.0))],
        )
        .unwrap();
        let mut sim = Simulation::new(&cfg, &SimOpts::default()).unwrap();
        assert_eq!(sim.state().mode(), ServerMode::Idle);

        let first = sim.step().unwrap();
        assert!(matches!(first.event.kind, EventKind::Arrival(0)));
        assert!(matches!(
            sim.state().mode(),
            ServerMode::Serving { class: 0, .. }
        ));
        assert_eq!(sim.state().total_jobs(), 1);
        assert_eq!(sim.clock(), first.event.time);
    }

    #[test]
    fn pause_state_reached_and_progress_recorded() {
        let cfg = two_class_overhead();
        let opts = SimOpts {
            seed: 11,
            min_busy_cycles: 50_000,
            ..SimOpts::default()
        };
        let mut sim = Simulation::new(&cfg, &opts).unwrap();
        let mut saw_pause = false;
        for _ in 0..200_000 {
            if sim.step().is_none() {
                break;
            }
            if sim.state().mode() == (ServerMode::InPause { class: 1 }) {
                saw_pause = true;
                let progress = sim.state().preempted_progress(1);
                assert!(progress.is_some());
                assert!(progress.unwrap() > 0.0);
                break;
            }
        }
        assert!(saw_pause, "never reached a class-1 pause");
    }

    #[test]
    fn overheads_are_nonpreemptible() {
        // While in a pause or resume, arrivals must never change the
        // activity; they only queue.
        let cfg = two_class_overhead();
        let opts = SimOpts {
            seed: 3,
            min_busy_cycles: 10_000,
            ..SimOpts::default()
        };
        let mut sim = Simulation::new(&cfg, &opts).unwrap();
        let mut checked = 0u32;
        while checked < 500 {
            let before = sim.state().mode();
            let info = match sim.step() {
                Some(info) => info,
                None => break,
            };
            if matches!(
                before,
                ServerMode::InPause { .. } | ServerMode::InResume { .. }
            ) && matches!(info.event.kind, EventKind::Arrival(_))
            {
                assert_eq!(sim.state().mode(), before);
                checked += 1;
            }
        }
        assert!(checked > 0, "no arrival landed during an overhead");
    }

    #[test]
    fn repeat_identical_jobs_keep_their_size_across_preemptions() {
        let cfg = SystemConfig::new(
            Mode::RepeatIdentical,
            vec![
                ClassSpec::new(0.5, Distribution::deterministic(0.6).unwrap()),
                ClassSpec::new(
                    0.25,
                    Distribution::point_mixture(
                        vec![0.6, 0.4],
                        vec![0.3, 1.2],
                    )
                    .unwrap(),
                ),
            ],
        )
        .unwrap();
        let opts = SimOpts {
            seed: 5,
            min_busy_cycles: 5_000,
            ..SimOpts::default()
        };
        let mut sim = Simulation::new(&cfg, &opts).unwrap();
        while sim.step().is_some() {
            if let Some(job) = &sim.state().serving {
                // Sizes only ever come from the two-point support.
                assert!(
                    job.class == 0
                        || (job.size - 0.3).abs() < 1e-12
                        || (job.size - 1.2).abs() < 1e-12
                );
                assert!(job.remaining <= job.size + 1e-12);
            }
        }
    }
}

//! Per-class response-time analysis.
//!
//! A tagged class-`k` arrival that finds the system in steady state waits
//! for three independent pieces of work before leaving: the backlog of
//! work the supersystem of classes `0..=k` already owes (an M/G/1 queue
//! with setup whose "service" is one class-`k` effective job), the
//! class-restricted busy period its own job drags along, and the *extra
//! work* a class-`k` arrival triggers when it lands while a lower class
//! holds the server — the pause it causes, possibly the tail of a resume
//! it interrupted, and any higher-priority jobs already present.
//!
//! This module builds those pieces: the conditional laws of a resume
//! attempt split by success ([`resume_conditional_transforms`]), the
//! mixture of busy-period fragments that makes up the extra work
//! ([`extra_work_mixture`]), the response-time transform itself
//! ([`response_transform`]) and its moments ([`response_moments`]).
//!
//! Every transform here is evaluated in value/complement pairs so that
//! `1 - transform` is available without cancellation; moment extraction
//! differentiates the complement, which is why the finite-difference
//! stencils stay accurate near zero.

use serde::Serialize;

use crate::busy::Session;
use crate::config::{Mode, SystemConfig};
use crate::durations::Distribution;
use crate::error::{Error, Result};
use crate::joint::{mode_job_tv, poisson_argument, poisson_tv, require_mode, Tv};
use crate::loads::{load_profile, LoadProfile};
use crate::numeric::{one_sided_derivative, richardson};

/// Highest extractable moment order.
const MAX_MOMENT: usize = 4;

/// Relative agreement demanded of the two extrapolation refinement
/// levels, by moment order (index = order).
const MOMENT_TOL: [f64; 5] = [0.0, 1e-6, 1e-6, 1e-4, 1e-4];

/// Per-order widening of the base differencing step: higher orders
/// divide by a higher power of the step, so they need wider nodes to
/// keep roundoff amplification below the accuracy targets above.
const MOMENT_STEP_SCALE: [f64; 5] = [0.0, 1.0, 1.0, 5.0, 20.0];

/// Passes of the crude mean-scale probe that sizes the base step.
const SCALE_PROBE_PASSES: usize = 8;

fn check_theta(theta: f64) -> Result<()> {
    if theta.is_finite() && theta >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "transform argument theta = {theta} must be nonnegative and finite"
        )))
    }
}

// ------------------------------------------------------ conditional resumes

/// Law of a single class-`j` resume attempt, split by whether any
/// higher-priority arrival landed while it ran.
///
/// An attempt succeeds when no class-`<j` job arrives before it
/// finishes; with Poisson preemptors of total rate `λ` the success
/// probability is `D̃(λ)`. Conditioning tilts the resume length: the
/// successful branch is biased short, the failed branch biased long.
/// Both conditional transforms, their means, and the reconstruction
/// `p·D̃⁰ + (1-p)·D̃¹ = D̃` are exposed here.
#[derive(Debug, Clone)]
pub struct ConditionalResume {
    class: usize,
    resume: Distribution,
    preemptor_rate: f64,
    success_prob: f64,
    failure_prob: f64,
    mean_success: f64,
    mean_failure: Option<f64>,
}

impl ConditionalResume {
    /// Class whose resume attempts are being split.
    pub fn class(&self) -> usize {
        self.class
    }

    /// Total arrival rate of the classes that can interrupt the attempt.
    pub fn preemptor_rate(&self) -> f64 {
        self.preemptor_rate
    }

    /// Probability that one attempt completes uninterrupted.
    pub fn success_prob(&self) -> f64 {
        self.success_prob
    }

    /// Mean length of an attempt conditioned on success.
    pub fn mean_success(&self) -> f64 {
        self.mean_success
    }

    /// Mean length of an attempt conditioned on failure.
    ///
    /// # Output
    /// [`Error::DegenerateCase`] when failure has probability zero (no
    /// preemptors, or an attempt too short to ever be caught).
    pub fn mean_failure(&self) -> Result<f64> {
        self.mean_failure.ok_or_else(|| self.degenerate())
    }

    /// Transform of an attempt conditioned on success:
    /// `D̃(θ+λ) / D̃(λ)`.
    ///
    /// # Input
    /// `theta` — transform argument, nonnegative.
    pub fn success_transform(&self, theta: f64) -> Result<f64> {
        Ok(self.resume.lst(theta + self.preemptor_rate)? / self.success_prob)
    }

    /// Transform of an attempt conditioned on failure:
    /// `(D̃(θ) - D̃(θ+λ)) / (1 - D̃(λ))`, evaluated as a divided
    /// difference so close arguments do not cancel.
    ///
    /// # Output
    /// [`Error::DegenerateCase`] when failure has probability zero.
    pub fn failure_transform(&self, theta: f64) -> Result<f64> {
        check_theta(theta)?;
        if self.failure_prob == 0.0 {
            return Err(self.degenerate());
        }
        let dd = self
            .resume
            .lst_divided_difference(theta, theta + self.preemptor_rate);
        Ok(self.preemptor_rate * dd / self.failure_prob)
    }

    fn degenerate(&self) -> Error {
        Error::DegenerateCase(format!(
            "class {} resume attempts never fail (preemptor rate {}, \
             success probability 1)",
            self.class, self.preemptor_rate
        ))
    }
}

/// Split the law of one class-`j` resume attempt by success.
///
/// # Input
/// `config` — a pause/resume system; `j` — class whose resume is split.
///
/// # Output
/// A [`ConditionalResume`]. Construction succeeds even when failure has
/// probability zero; only the failure-branch accessors report the
/// degeneracy.
///
/// # Examples
/// ```
/// use preemptq::{ClassSpec, Distribution, Mode, SystemConfig};
/// use preemptq::response::resume_conditional_transforms;
/// let cfg = SystemConfig::new(
///     Mode::PauseResume,
///     vec![
///         ClassSpec::new(1.0, Distribution::exponential(4.0).unwrap()),
///         ClassSpec::new(0.1, Distribution::exponential(1.0).unwrap())
///             .with_overheads(
///                 Distribution::deterministic(0.05).unwrap(),
///                 Distribution::deterministic(0.2).unwrap(),
///             ),
///     ],
/// )
/// .unwrap();
/// let split = resume_conditional_transforms(&cfg, 1).unwrap();
/// // Det(0.2) attempt against rate-1 preemptors: succeeds w.p. e^{-0.2}.
/// assert!((split.success_prob() - (-0.2f64).exp()).abs() < 1e-12);
/// ```
pub fn resume_conditional_transforms(
    config: &SystemConfig,
    j: usize,
) -> Result<ConditionalResume> {
    require_mode(config, Mode::PauseResume, "the conditional resume split")?;
    config.check_class(j)?;
    let resume = &config.class(j).resume;
    let lam = config.lambda_below(j);
    let success_prob = resume.lst_inner(lam);
    let failure_prob = resume.one_minus_lst(lam);
    let deriv = resume.lst_deriv_inner(lam);
    let mean_failure = if failure_prob > 0.0 {
        Some((resume.mean() + deriv) / failure_prob)
    } else {
        None
    };
    Ok(ConditionalResume {
        class: j,
        resume: resume.clone(),
        preemptor_rate: lam,
        success_prob,
        failure_prob,
        mean_success: -deriv / success_prob,
        mean_failure,
    })
}

/// Value/complement transform of the run-to-completion remainder of a
/// class-`j` resume attempt, measured from the first interrupting
/// arrival, evaluated at `x`.
///
/// Only meaningful when attempts can fail (`λ_{<j} > 0` and the attempt
/// is long enough to be caught); callers guard on that.
fn remainder_tv(config: &SystemConfig, j: usize, x: f64) -> Tv {
    let resume = &config.class(j).resume;
    let lam = config.lambda_below(j);
    let failure_prob = resume.one_minus_lst(lam);
    let dd = resume.lst_divided_difference(lam, x);
    Tv {
        v: lam * dd / failure_prob,
        om: (resume.one_minus_lst(x) - x * dd) / failure_prob,
    }
}

/// Mean of the run-to-completion remainder behind [`remainder_tv`].
fn remainder_mean(config: &SystemConfig, j: usize) -> f64 {
    let resume = &config.class(j).resume;
    let lam = config.lambda_below(j);
    let failure_prob = resume.one_minus_lst(lam);
    (resume.mean() - failure_prob / lam) / failure_prob
}

// ------------------------------------------------------ extra-work mixture

/// Work composition one mixture component describes: what sits in front
/// of the tagged arrival, before any excess-length tilting.
#[derive(Debug, Clone, PartialEq)]
enum CaseForm {
    /// A class-`i` job span heading a class-`<k` busy period.
    Job { i: usize },
    /// A class-`j` pause followed by a class-`i` job span.
    PauseThenJob { i: usize, j: usize },
    /// A class-`j` pause alone.
    Pause { j: usize },
    /// The remainder of a failed class-`j` resume, its pause, then a
    /// class-`i` job span.
    RemainderPauseThenJob { i: usize, j: usize },
    /// The remainder of a failed class-`j` resume and its pause.
    RemainderPause { j: usize },
    /// No extra work at all.
    Idle,
}

/// One weighted component of the extra-work mixture.
///
/// `mean` is the mean of the class-`<k` busy period the component's
/// starter launches; for excess components it is also the normalizer of
/// the length tilt.
#[derive(Debug, Clone, Serialize)]
pub struct MixtureComponent {
    label: String,
    probability: f64,
    mean: f64,
    excess: bool,
    #[serde(skip)]
    case: CaseForm,
}

impl MixtureComponent {
    /// Case tag with the class indices involved, e.g. `b(i=0,j=2)`.
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Weight of this component in the mixture.
    pub fn probability(&self) -> f64 {
        self.probability
    }

    /// Mean of the underlying busy period.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Whether the component is the excess (equilibrium remainder) of
    /// its busy period rather than the busy period itself.
    pub fn is_excess(&self) -> bool {
        self.excess
    }
}

/// Distribution of the extra work a class-`k` arrival finds when it is
/// the first of its class to arrive in the current cycle.
///
/// The mixture weights are derived in closed form from the load profile;
/// they are asserted to sum to one but never renormalized — any gap is
/// surfaced through [`mass_deficit`](ExtraWorkMixture::mass_deficit).
#[derive(Debug, Clone)]
pub struct ExtraWorkMixture {
    config: SystemConfig,
    class: usize,
    components: Vec<MixtureComponent>,
    mass_deficit: f64,
}

impl ExtraWorkMixture {
    /// Class the tagged arrival belongs to.
    pub fn class(&self) -> usize {
        self.class
    }

    /// Components with positive weight, in case order.
    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    /// Sum of the component weights.
    pub fn total_probability(&self) -> f64 {
        self.components.iter().map(|c| c.probability).sum()
    }

    /// `1 -` [`total_probability`](ExtraWorkMixture::total_probability):
    /// the numerical gap left by the closed-form weights.
    pub fn mass_deficit(&self) -> f64 {
        self.mass_deficit
    }

    /// Transform of the mixture at `theta`.
    ///
    /// # Input
    /// `theta` — transform argument, nonnegative.
    ///
    /// # Output
    /// `Σ p_c · transform_c(theta)`; equals the total probability at
    /// `theta = 0`.
    pub fn transform(&self, theta: f64) -> Result<f64> {
        let session = Session::new(&self.config);
        mixture_tv(
            &session,
            self.class,
            &self.components,
            self.mass_deficit,
            theta,
        )
        .map(|tv| tv.v)
    }

    /// Transform of the component at `index` alone.
    ///
    /// # Output
    /// A value in `[0, 1]`, exactly `1` at `theta = 0`.
    pub fn component_transform(&self, index: usize, theta: f64) -> Result<f64> {
        let comp = self.components.get(index).ok_or_else(|| {
            Error::Domain(format!(
                "component index {index} out of range for a mixture with {} \
                 components",
                self.components.len()
            ))
        })?;
        check_theta(theta)?;
        if theta == 0.0 {
            return Ok(1.0);
        }
        let session = Session::new(&self.config);
        let fp = session.fixed_point(self.class, theta)?;
        component_tv(&self.config, comp, theta, &fp.q).map(|tv| tv.v)
    }
}

/// Construct the components and the mass deficit for class `k`.
///
/// Pause/resume systems get the full case list `a`–`h`; repeat systems
/// collapse to the job-busy excesses (`a`) plus the idle atom (`h`),
/// because preempted work there re-runs inside the job span itself and
/// leaves nothing behind when the server frees up.
fn build_components(
    config: &SystemConfig,
    k: usize,
    profile: &LoadProfile,
) -> (Vec<MixtureComponent>, f64) {
    let surv = 1.0 - profile.rho_below(k);
    let mut comps = match config.mode() {
        Mode::PauseResume => pause_resume_components(config, k, profile, surv),
        Mode::RepeatDifferent | Mode::RepeatIdentical => {
            let mut comps: Vec<MixtureComponent> = (0..k)
                .map(|i| MixtureComponent {
                    label: format!("a(i={i})"),
                    probability: profile.rho(i),
                    mean: profile.mean_span(i) / surv,
                    excess: true,
                    case: CaseForm::Job { i },
                })
                .collect();
            comps.push(MixtureComponent {
                label: "h".to_string(),
                probability: surv,
                mean: 0.0,
                excess: false,
                case: CaseForm::Idle,
            });
            comps
        }
    };
    comps.retain(|c| c.probability > 0.0);
    let total: f64 = comps.iter().map(|c| c.probability).sum();
    (comps, 1.0 - total)
}

fn pause_resume_components(
    config: &SystemConfig,
    k: usize,
    profile: &LoadProfile,
    surv: f64,
) -> Vec<MixtureComponent> {
    let idle = 1.0 - profile.total();
    let denom = 1.0 - profile.rho_at_most(k);
    let mut comps = Vec::new();

    for i in 0..k {
        comps.push(MixtureComponent {
            label: format!("a(i={i})"),
            probability: idle * profile.rho(i) / denom,
            mean: profile.mean_span(i) / surv,
            excess: true,
            case: CaseForm::Job { i },
        });
    }

    for j in k + 1..config.n() {
        let cls = config.class(j);
        let sigma_j = profile.sigma(j);
        let pause_mean = cls.pause.mean();
        let lam_j = config.lambda_below(j);
        let failure_prob = cls.resume.one_minus_lst(lam_j);
        // Mean failed attempts per preemption and the remainder mean;
        // both only enter cases that exist when failures do.
        let fail = failure_prob / cls.resume.lst_inner(lam_j);
        let rem_mean = if failure_prob > 0.0 {
            remainder_mean(config, j)
        } else {
            0.0
        };

        for i in 0..k {
            let starter = pause_mean + profile.mean_span(i);
            comps.push(MixtureComponent {
                label: format!("b(i={i},j={j})"),
                probability: config.lambda(i) * sigma_j * starter / denom,
                mean: starter / surv,
                excess: true,
                case: CaseForm::PauseThenJob { i, j },
            });
        }

        for l in k..j {
            comps.push(MixtureComponent {
                label: format!("c(l={l},j={j})"),
                probability: config.lambda(l) * sigma_j * pause_mean / denom,
                mean: pause_mean / surv,
                excess: true,
                case: CaseForm::Pause { j },
            });
        }

        if fail > 0.0 {
            for i in 0..k {
                let starter = rem_mean + pause_mean + profile.mean_span(i);
                comps.push(MixtureComponent {
                    label: format!("d(i={i},j={j})"),
                    probability: config.lambda(i) * sigma_j * fail * starter
                        / denom,
                    mean: starter / surv,
                    excess: true,
                    case: CaseForm::RemainderPauseThenJob { i, j },
                });
            }
            for l in k..j {
                let starter = rem_mean + pause_mean;
                comps.push(MixtureComponent {
                    label: format!("e(l={l},j={j})"),
                    probability: config.lambda(l) * sigma_j * fail * starter
                        / denom,
                    mean: starter / surv,
                    excess: true,
                    case: CaseForm::RemainderPause { j },
                });
            }
        }

        comps.push(MixtureComponent {
            label: format!("f(j={j})"),
            probability: sigma_j * surv / denom,
            mean: pause_mean / surv,
            excess: false,
            case: CaseForm::Pause { j },
        });

        if fail > 0.0 {
            comps.push(MixtureComponent {
                label: format!("g(j={j})"),
                probability: sigma_j * fail * surv / denom,
                mean: (rem_mean + pause_mean) / surv,
                excess: false,
                case: CaseForm::RemainderPause { j },
            });
        }
    }

    comps.push(MixtureComponent {
        label: "h".to_string(),
        probability: idle * surv / denom,
        mean: 0.0,
        excess: false,
        case: CaseForm::Idle,
    });
    comps
}

/// Transform of the busy period a component's starter launches, before
/// any excess tilt, at the level-`k` fixed point complements `q`.
fn case_tv(
    config: &SystemConfig,
    case: &CaseForm,
    theta: f64,
    q: &[f64],
) -> Result<Tv> {
    let pause =
        |j: usize| poisson_tv(config, &config.class(j).pause, theta, q);
    let arg = poisson_argument(config, theta, q);
    Ok(match *case {
        CaseForm::Job { i } => mode_job_tv(config, i, theta, q)?,
        CaseForm::PauseThenJob { i, j } => {
            pause(j).product(mode_job_tv(config, i, theta, q)?)
        }
        CaseForm::Pause { j } => pause(j),
        CaseForm::RemainderPauseThenJob { i, j } => remainder_tv(config, j, arg)
            .product(pause(j))
            .product(mode_job_tv(config, i, theta, q)?),
        CaseForm::RemainderPause { j } => {
            remainder_tv(config, j, arg).product(pause(j))
        }
        CaseForm::Idle => Tv::ONE,
    })
}

/// Transform of one component at `theta > 0`.
fn component_tv(
    config: &SystemConfig,
    comp: &MixtureComponent,
    theta: f64,
    q: &[f64],
) -> Result<Tv> {
    let base = case_tv(config, &comp.case, theta, q)?;
    if !comp.excess {
        return Ok(base);
    }
    let scale = theta * comp.mean;
    Ok(Tv {
        v: base.om / scale,
        om: (scale - base.om) / scale,
    })
}

/// Transform of the whole mixture in value/complement form.
fn mixture_tv(
    session: &Session<'_>,
    k: usize,
    components: &[MixtureComponent],
    mass_deficit: f64,
    theta: f64,
) -> Result<Tv> {
    check_theta(theta)?;
    if theta == 0.0 {
        return Ok(Tv {
            v: 1.0 - mass_deficit,
            om: mass_deficit,
        });
    }
    let fp = session.fixed_point(k, theta)?;
    let mut v = 0.0;
    let mut om = mass_deficit;
    for comp in components {
        let tv = component_tv(session.config(), comp, theta, &fp.q)?;
        v += comp.probability * tv.v;
        om += comp.probability * tv.om;
    }
    Ok(Tv { v, om })
}

fn require_stable(profile: &LoadProfile) -> Result<()> {
    if profile.is_stable() {
        Ok(())
    } else {
        Err(Error::UnstableSystem(format!(
            "offered load {} is at or above one",
            profile.total()
        )))
    }
}

/// Build the extra-work mixture seen by an early class-`k` arrival.
///
/// # Input
/// `config` — a stable pause/resume system; `k` — tagged class.
///
/// # Output
/// The [`ExtraWorkMixture`] with all positive-weight components. Repeat
/// modes are rejected: their early arrivals see only higher-class
/// busy-period remainders, which the response transform accounts for
/// internally.
///
/// # Examples
/// ```
/// use preemptq::{ClassSpec, Distribution, Mode, SystemConfig};
/// use preemptq::response::extra_work_mixture;
/// let cfg = SystemConfig::new(
///     Mode::PauseResume,
///     vec![ClassSpec::new(0.5, Distribution::exponential(1.0).unwrap())],
/// )
/// .unwrap();
/// let mix = extra_work_mixture(&cfg, 0).unwrap();
/// // A sole class finds no extra work: one atom at zero.
/// assert_eq!(mix.components().len(), 1);
/// assert_eq!(mix.components()[0].probability(), 1.0);
/// ```
pub fn extra_work_mixture(
    config: &SystemConfig,
    k: usize,
) -> Result<ExtraWorkMixture> {
    require_mode(config, Mode::PauseResume, "the extra-work mixture")?;
    config.check_class(k)?;
    let profile = load_profile(config)?;
    require_stable(&profile)?;
    let (components, mass_deficit) = build_components(config, k, &profile);
    Ok(ExtraWorkMixture {
        config: config.clone(),
        class: k,
        components,
        mass_deficit,
    })
}

/// Evaluate the extra-work transform `X̃*_k(theta)` directly.
///
/// # Output
/// A value in `[0, 1]`; the mixture's total probability at `theta = 0`.
pub fn extra_work_transform(
    config: &SystemConfig,
    k: usize,
    theta: f64,
) -> Result<f64> {
    require_mode(config, Mode::PauseResume, "the extra-work transform")?;
    config.check_class(k)?;
    let profile = load_profile(config)?;
    require_stable(&profile)?;
    let (components, mass_deficit) = build_components(config, k, &profile);
    let session = Session::new(config);
    mixture_tv(&session, k, &components, mass_deficit, theta).map(|tv| tv.v)
}

// ----------------------------------------------------------- response time

/// The three independent factors of the class-`k` response transform,
/// evaluated at one argument.
#[derive(Debug, Clone, Serialize)]
pub struct ResponseComponents {
    class: usize,
    theta: f64,
    setup_factor: f64,
    service_factor: f64,
    extra_work_factor: f64,
    value: f64,
}

impl ResponseComponents {
    /// Tagged class.
    pub fn class(&self) -> usize {
        self.class
    }

    /// Transform argument the factors were evaluated at.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Queueing factor of the supersystem: delay from work of classes
    /// `0..=k` already owed when the tagged job arrives.
    pub fn setup_factor(&self) -> f64 {
        self.setup_factor
    }

    /// Transform of the tagged job's own class-`<k` busy period (its
    /// effective service in the supersystem).
    pub fn service_factor(&self) -> f64 {
        self.service_factor
    }

    /// Transform of the extra work mixed over the early-arrival cases.
    pub fn extra_work_factor(&self) -> f64 {
        self.extra_work_factor
    }

    /// Product of the three factors: the response transform itself.
    pub fn value(&self) -> f64 {
        self.value
    }
}

/// One-class response analysis with shared busy-period state.
struct Evaluator<'a> {
    session: Session<'a>,
    profile: LoadProfile,
    k: usize,
    components: Vec<MixtureComponent>,
    mass_deficit: f64,
    /// `1 - ρ_{≤k}`: probability the supersystem queue is empty.
    gap: f64,
    rho_k: f64,
    /// Mean of the class-`k` effective-job busy period.
    busy_mean: f64,
}

struct Parts {
    setup: f64,
    service: Tv,
    extra: Tv,
    total: Tv,
}

impl<'a> Evaluator<'a> {
    fn new(config: &'a SystemConfig, k: usize) -> Result<Self> {
        config.check_class(k)?;
        let profile = load_profile(config)?;
        require_stable(&profile)?;
        let (components, mass_deficit) = build_components(config, k, &profile);
        let surv = 1.0 - profile.rho_below(k);
        let busy_mean = profile.mean_span(k) / surv;
        Ok(Evaluator {
            session: Session::new(config),
            gap: 1.0 - profile.rho_at_most(k),
            rho_k: profile.rho(k),
            profile,
            k,
            components,
            mass_deficit,
            busy_mean,
        })
    }

    fn parts(&self, theta: f64) -> Result<Parts> {
        check_theta(theta)?;
        if theta == 0.0 {
            let extra = Tv {
                v: 1.0 - self.mass_deficit,
                om: self.mass_deficit,
            };
            return Ok(Parts {
                setup: 1.0,
                service: Tv::ONE,
                extra,
                total: extra,
            });
        }
        let config = self.session.config();
        let fp = self.session.fixed_point(self.k, theta)?;
        let service = mode_job_tv(config, self.k, theta, &fp.q)?;
        let extra = mixture_tv(
            &self.session,
            self.k,
            &self.components,
            self.mass_deficit,
            theta,
        )?;
        // Excess complement of the service busy period, then the M/G/1
        // queueing factor gap / (gap + ρ_k·(1 - excess)) — all written
        // in complements so nothing cancels as theta shrinks.
        let scale = theta * self.busy_mean;
        let om_excess = (scale - service.om) / scale;
        let denom = self.gap + self.rho_k * om_excess;
        let setup = self.gap / denom;
        let total = Tv {
            v: setup * service.v * extra.v,
            om: (self.gap * (service.om + service.v * extra.om)
                + self.rho_k * om_excess)
                / denom,
        };
        Ok(Parts {
            setup,
            service,
            extra,
            total,
        })
    }

    fn tv(&self, theta: f64) -> Result<Tv> {
        Ok(self.parts(theta)?.total)
    }

    /// Extract the first `m` moments by one-sided differencing of the
    /// transform complement with two Richardson refinement levels.
    fn moments(&self, m: usize) -> Result<Vec<f64>> {
        if m > MAX_MOMENT {
            return Err(Error::Domain(format!(
                "moment order {m} exceeds the supported maximum {MAX_MOMENT}"
            )));
        }
        if m == 0 {
            return Ok(Vec::new());
        }

        // Crude mean scale: om(t)/t underestimates the mean and tightens
        // as t shrinks, so a few passes settle on the right magnitude.
        let mut scale = self.profile.mean_span(self.k).max(1e-9);
        for _ in 0..SCALE_PROBE_PASSES {
            let t = 1e-3 / scale;
            let crude = self.tv(t)?.om / t;
            if crude <= 0.0 {
                // The transform is identically one: a zero response time.
                return Ok(vec![0.0; m]);
            }
            let settled = (crude - scale).abs() <= 0.1 * scale;
            scale = crude;
            if settled {
                break;
            }
        }
        let h0 = 1e-3 / scale;

        let mut f = |t: f64| self.tv(t).map(|tv| tv.om);
        let mut out = Vec::with_capacity(m);
        for r in 1..=m {
            let h = h0 * MOMENT_STEP_SCALE[r];
            let d1 = one_sided_derivative(&mut f, r, h)?;
            let d2 = one_sided_derivative(&mut f, r, h / 2.0)?;
            let d3 = one_sided_derivative(&mut f, r, h / 4.0)?;
            let first = richardson(d1, d2, 4);
            let second = richardson(d2, d3, 4);
            let best = richardson(first, second, 5);
            let disagreement =
                (second - first).abs() / best.abs().max(f64::MIN_POSITIVE);
            let tol = MOMENT_TOL[r];
            if disagreement > 10.0 * tol {
                return Err(Error::NumericPrecision(format!(
                    "order-{r} moment refinements disagree by {disagreement:.3e} \
                     (target {tol:.0e})"
                )));
            }
            // Moments alternate sign against the complement derivatives.
            out.push(if r % 2 == 1 { best } else { -best });
        }
        Ok(out)
    }
}

/// Transform of the class-`k` response time at `theta`.
///
/// # Input
/// `config` — a stable system in any preemption mode; `k` — tagged
/// class; `theta` — transform argument, nonnegative.
///
/// # Output
/// A value in `[0, 1]`, within the mixture mass deficit of `1` at
/// `theta = 0`.
///
/// # Examples
/// ```
/// use preemptq::{ClassSpec, Distribution, Mode, SystemConfig};
/// use preemptq::response::response_transform;
/// let cfg = SystemConfig::new(
///     Mode::PauseResume,
///     vec![ClassSpec::new(0.5, Distribution::exponential(1.0).unwrap())],
/// )
/// .unwrap();
/// // M/M/1: response is exponential with rate μ - λ = 0.5.
/// let t = response_transform(&cfg, 0, 1.0).unwrap();
/// assert!((t - 1.0 / 3.0).abs() < 1e-10);
/// ```
pub fn response_transform(
    config: &SystemConfig,
    k: usize,
    theta: f64,
) -> Result<f64> {
    Evaluator::new(config, k)?.tv(theta).map(|tv| tv.v)
}

/// The response transform at `theta` split into its three factors.
pub fn response_components(
    config: &SystemConfig,
    k: usize,
    theta: f64,
) -> Result<ResponseComponents> {
    let parts = Evaluator::new(config, k)?.parts(theta)?;
    Ok(ResponseComponents {
        class: k,
        theta,
        setup_factor: parts.setup,
        service_factor: parts.service.v,
        extra_work_factor: parts.extra.v,
        value: parts.total.v,
    })
}

/// First `m` moments of the class-`k` response time.
///
/// # Input
/// `m` — number of moments, at most 4.
///
/// # Output
/// `[E[T], E[T²], ...]`, extracted by one-sided finite differences of
/// the transform complement at zero with Richardson extrapolation; the
/// two refinement levels must agree to `1e-6` relative for orders one
/// and two and `1e-4` for orders three and four, within a factor of
/// ten, else [`Error::NumericPrecision`] is returned.
///
/// # Examples
/// ```
/// use preemptq::{ClassSpec, Distribution, Mode, SystemConfig};
/// use preemptq::response::response_moments;
/// let cfg = SystemConfig::new(
///     Mode::PauseResume,
///     vec![ClassSpec::new(0.5, Distribution::exponential(1.0).unwrap())],
/// )
/// .unwrap();
/// let m = response_moments(&cfg, 0, 2).unwrap();
/// assert!((m[0] - 2.0).abs() < 1e-5); // E[T] = 1/(μ-λ)
/// assert!((m[1] - 8.0).abs() < 1e-4); // E[T²] = 2/(μ-λ)²
/// ```
pub fn response_moments(
    config: &SystemConfig,
    k: usize,
    m: usize,
) -> Result<Vec<f64>> {
    Evaluator::new(config, k)?.moments(m)
}

/// Response analysis bundle: moments plus re-evaluable transform.
#[derive(Debug, Clone)]
pub struct ResponseResult {
    config: SystemConfig,
    class: usize,
    moments: Vec<f64>,
}

impl ResponseResult {
    /// Tagged class.
    pub fn class(&self) -> usize {
        self.class
    }

    /// Moments `[E[T], E[T²], ...]` computed at construction.
    pub fn moments(&self) -> &[f64] {
        &self.moments
    }

    /// Response transform at `theta`.
    pub fn transform(&self, theta: f64) -> Result<f64> {
        response_transform(&self.config, self.class, theta)
    }

    /// Factor decomposition of the transform at `theta`.
    pub fn components(&self, theta: f64) -> Result<ResponseComponents> {
        response_components(&self.config, self.class, theta)
    }
}

/// Compute a [`ResponseResult`] for class `k` with `m` moments.
pub fn response_result(
    config: &SystemConfig,
    k: usize,
    m: usize,
) -> Result<ResponseResult> {
    let moments = response_moments(config, k, m)?;
    Ok(ResponseResult {
        config: config.clone(),
        class: k,
        moments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ClassSpec;

    const GRID: [f64; 6] = [0.01, 0.1, 0.5, 1.0, 2.0, 5.0];

    fn exp(rate: f64) -> Distribution {
        Distribution::exponential(rate).unwrap()
    }

    fn det(value: f64) -> Distribution {
        Distribution::deterministic(value).unwrap()
    }

    fn pr(classes: Vec<ClassSpec>) -> SystemConfig {
        SystemConfig::new(Mode::PauseResume, classes).unwrap()
    }

    /// Two classes; the low class pays Det(0.1) pauses and Exp(10)
    /// resumes. Total load 0.6204.
    fn ref_config() -> SystemConfig {
        pr(vec![
            ClassSpec::new(0.2, exp(2.0)),
            ClassSpec::new(0.5, exp(1.0)).with_overheads(det(0.1), exp(10.0)),
        ])
    }

    /// Three classes with mixed overhead families. Total load 0.4733125.
    fn c3_config() -> SystemConfig {
        pr(vec![
            ClassSpec::new(0.3, exp(5.0)),
            ClassSpec::new(0.2, exp(2.5)).with_overheads(exp(2.0), exp(1.6)),
            ClassSpec::new(0.2, exp(1.0)).with_overheads(
                Distribution::uniform(0.1, 0.5).unwrap(),
                Distribution::erlang(2, 4.0).unwrap(),
            ),
        ])
    }

    fn mm1_config() -> SystemConfig {
        pr(vec![ClassSpec::new(0.5, exp(1.0))])
    }

    fn rd3_config() -> SystemConfig {
        SystemConfig::new(
            Mode::RepeatDifferent,
            vec![
                ClassSpec::new(0.4, Distribution::erlang(2, 5.0).unwrap()),
                ClassSpec::new(0.35, exp(2.5)),
                ClassSpec::new(
                    0.3,
                    Distribution::hyper_exponential(
                        vec![0.6, 0.4],
                        vec![3.0, 1.0],
                    )
                    .unwrap(),
                ),
            ],
        )
        .unwrap()
    }

    fn ri2_config() -> SystemConfig {
        SystemConfig::new(
            Mode::RepeatIdentical,
            vec![
                ClassSpec::new(0.5, det(0.6)),
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
        .unwrap()
    }

    fn find<'m>(
        mix: &'m ExtraWorkMixture,
        label: &str,
    ) -> &'m MixtureComponent {
        mix.components()
            .iter()
            .find(|c| c.label() == label)
            .unwrap_or_else(|| panic!("no component labelled {label}"))
    }

    fn family_mass(mix: &ExtraWorkMixture, family: char) -> f64 {
        mix.components()
            .iter()
            .filter(|c| c.label().starts_with(family))
            .map(|c| c.probability())
            .sum()
    }

    // ------------------------------------------------ conditional resumes

    #[test]
    fn success_branch_of_exponential_resume_is_memoryless() {
        let split = resume_conditional_transforms(&ref_config(), 1).unwrap();
        assert!((split.success_prob() - 10.0 / 10.2).abs() < 1e-15);
        assert!((split.mean_success() - 1.0 / 10.2).abs() < 1e-15);
        for th in GRID {
            let got = split.success_transform(th).unwrap();
            let want = 10.2 / (10.2 + th);
            assert!(
                (got - want).abs() < 1e-13,
                "theta {th}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn deterministic_resume_failure_branch_hand_values() {
        let cfg = pr(vec![
            ClassSpec::new(1.0, exp(4.0)),
            ClassSpec::new(0.1, exp(1.0)).with_overheads(det(0.05), det(0.2)),
        ]);
        let split = resume_conditional_transforms(&cfg, 1).unwrap();
        let e02 = (-0.2f64).exp();
        assert!((split.success_prob() - e02).abs() < 1e-14);
        // Det attempts always run the full 0.2 whichever branch they land
        // in, so the failure transform at 1 collapses to e^{-0.2}.
        assert!((split.failure_transform(1.0).unwrap() - e02).abs() < 1e-13);
        assert!((split.mean_failure().unwrap() - 0.2).abs() < 1e-13);
        assert_eq!(split.success_transform(0.0).unwrap(), 1.0);
        assert!((split.failure_transform(0.0).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn conditional_transforms_reconstruct_the_parent() {
        let resumes = [
            exp(10.0),
            det(0.2),
            Distribution::erlang(2, 4.0).unwrap(),
            Distribution::uniform(0.1, 0.5).unwrap(),
        ];
        for resume in resumes {
            let cfg = pr(vec![
                ClassSpec::new(0.7, exp(4.0)),
                ClassSpec::new(0.1, exp(1.0))
                    .with_overheads(det(0.05), resume.clone()),
            ]);
            let split = resume_conditional_transforms(&cfg, 1).unwrap();
            let p = split.success_prob();
            for th in GRID {
                let rebuilt = p * split.success_transform(th).unwrap()
                    + (1.0 - p) * split.failure_transform(th).unwrap();
                let parent = resume.lst(th).unwrap();
                assert!(
                    (rebuilt - parent).abs() < 1e-12,
                    "{resume:?} at {th}: rebuilt {rebuilt}, parent {parent}"
                );
            }
        }
    }

    #[test]
    fn failure_branch_without_preemptors_is_degenerate() {
        let cfg = ref_config();
        let split = resume_conditional_transforms(&cfg, 0).unwrap();
        assert_eq!(split.success_prob(), 1.0);
        assert!(matches!(
            split.failure_transform(1.0),
            Err(Error::DegenerateCase(_))
        ));
        assert!(matches!(split.mean_failure(), Err(Error::DegenerateCase(_))));
        // Success branch is just the unconditional law.
        let d = split.success_transform(0.7).unwrap();
        assert!((d - cfg.class(0).resume.lst(0.7).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn certain_success_resume_is_degenerate_for_failure() {
        let cfg = pr(vec![
            ClassSpec::new(0.4, exp(4.0)),
            ClassSpec::new(0.1, exp(1.0)).with_overheads(det(0.1), det(0.0)),
        ]);
        let split = resume_conditional_transforms(&cfg, 1).unwrap();
        assert_eq!(split.success_prob(), 1.0);
        assert_eq!(split.success_transform(3.0).unwrap(), 1.0);
        assert!(matches!(
            split.failure_transform(0.5),
            Err(Error::DegenerateCase(_))
        ));
    }

    #[test]
    fn conditional_means_match_reference_values() {
        let split = resume_conditional_transforms(&ref_config(), 1).unwrap();
        // Exp(10) against rate 0.2: exact failure mean 101/510.
        assert!((split.mean_failure().unwrap() - 101.0 / 510.0).abs() < 1e-13);
        let p = split.success_prob();
        let mixed = p * split.mean_success()
            + (1.0 - p) * split.mean_failure().unwrap();
        assert!((mixed - 0.1).abs() < 1e-13, "means must mix to E[D]");
    }

    // ------------------------------------------------- extra-work mixture

    #[test]
    fn lowest_class_mixture_has_only_job_and_idle_cases() {
        let mix = extra_work_mixture(&ref_config(), 1).unwrap();
        let labels: Vec<&str> =
            mix.components().iter().map(|c| c.label()).collect();
        assert_eq!(labels, vec!["a(i=0)", "h"]);
        assert!((find(&mix, "a(i=0)").probability() - 0.1).abs() < 1e-14);
        assert!((find(&mix, "h").probability() - 0.9).abs() < 1e-14);
        assert!(find(&mix, "a(i=0)").is_excess());
        assert!(!find(&mix, "h").is_excess());
    }

    #[test]
    fn single_class_mixture_is_a_unit_point_mass() {
        let mix = extra_work_mixture(&mm1_config(), 0).unwrap();
        assert_eq!(mix.components().len(), 1);
        assert_eq!(mix.components()[0].label(), "h");
        assert_eq!(mix.components()[0].probability(), 1.0);
        for th in GRID {
            assert_eq!(mix.transform(th).unwrap(), 1.0);
        }
    }

    #[test]
    fn mixture_family_masses_match_frozen_values() {
        let mix = extra_work_mixture(&c3_config(), 1).unwrap();
        let frozen = [
            ('a', 0.038168641956669434),
            ('b', 0.036234619159054876),
            ('c', 0.014493847663621955),
            ('d', 0.01698497773080697),
            ('e', 0.008756699630104928),
            ('f', 0.2270702800634106),
            ('g', 0.060315543141843446),
            ('h', 0.5979753906544878),
        ];
        for (family, want) in frozen {
            let got = family_mass(&mix, family);
            assert!(
                (got - want).abs() < 1e-12,
                "family {family}: got {got}, want {want}"
            );
        }

        let mix0 = extra_work_mixture(&c3_config(), 0).unwrap();
        let frozen0 = [
            ('a', 0.0),
            ('c', 0.04468085106382979),
            ('e', 0.02466755319148935),
            ('f', 0.29787234042553196),
            ('g', 0.07247340425531917),
            ('h', 0.5603058510638298),
        ];
        for (family, want) in frozen0 {
            let got = family_mass(&mix0, family);
            assert!(
                (got - want).abs() < 1e-12,
                "k=0 family {family}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn mixture_probabilities_normalize() {
        for cfg in [ref_config(), c3_config(), mm1_config()] {
            for k in 0..cfg.n() {
                let mix = extra_work_mixture(&cfg, k).unwrap();
                assert!(
                    (mix.total_probability() - 1.0).abs() < 1e-10,
                    "class {k}: total {}",
                    mix.total_probability()
                );
                assert!(mix.mass_deficit().abs() < 1e-10);
                for c in mix.components() {
                    assert!(
                        c.probability() > 0.0 && c.probability() <= 1.0,
                        "{}: probability {}",
                        c.label(),
                        c.probability()
                    );
                }
            }
        }
    }

    #[test]
    fn unstable_config_is_rejected() {
        let cfg = pr(vec![
            ClassSpec::new(1.4, exp(2.0)),
            ClassSpec::new(0.5, exp(1.0)).with_overheads(det(0.1), exp(10.0)),
        ]);
        assert!(matches!(
            extra_work_mixture(&cfg, 1),
            Err(Error::UnstableSystem(_))
        ));
        assert!(matches!(
            response_transform(&cfg, 0, 1.0),
            Err(Error::UnstableSystem(_))
        ));
        assert!(matches!(
            response_moments(&cfg, 0, 2),
            Err(Error::UnstableSystem(_))
        ));
    }

    #[test]
    fn repeat_mode_mixture_is_not_offered() {
        assert!(matches!(
            extra_work_mixture(&rd3_config(), 1),
            Err(Error::UnsupportedConfiguration(_))
        ));
        assert!(matches!(
            extra_work_transform(&ri2_config(), 1, 0.5),
            Err(Error::UnsupportedConfiguration(_))
        ));
    }

    #[test]
    fn component_transforms_are_one_at_zero() {
        let mix = extra_work_mixture(&c3_config(), 1).unwrap();
        for idx in 0..mix.components().len() {
            assert_eq!(mix.component_transform(idx, 0.0).unwrap(), 1.0);
        }
        assert!(matches!(
            mix.component_transform(mix.components().len(), 0.5),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn remainder_component_recovers_conditional_remainder() {
        // For the top class the busy argument is theta itself, so the
        // full case (g) factorizes into remainder x pause transforms;
        // with an Exp(10) resume the remainder is again Exp(10).
        let mix = extra_work_mixture(&ref_config(), 0).unwrap();
        let g = mix
            .components()
            .iter()
            .position(|c| c.label() == "g(j=1)")
            .unwrap();
        for th in [0.1, 0.2, 0.5, 1.0] {
            let got = mix.component_transform(g, th).unwrap();
            let want = 10.0 / (10.0 + th) * (-0.1 * th).exp();
            assert!(
                (got - want).abs() < 1e-12,
                "theta {th}: got {got}, want {want}"
            );
        }
        assert!((find(&mix, "g(j=1)").mean() - 0.2).abs() < 1e-12);
        assert!((find(&mix, "f(j=1)").mean() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn mixture_transform_matches_frozen_grid() {
        let cases = [
            (
                ref_config(),
                0,
                [
                    0.9994164189878774,
                    0.9941917883599323,
                    0.9715604711796078,
                    0.9445728922021313,
                    0.8946325772590853,
                    0.772240569871361,
                ],
            ),
            (
                ref_config(),
                1,
                [
                    0.9993868769103628,
                    0.9942177205343458,
                    0.9768348795377814,
                    0.9627244611029162,
                    0.9461242977525354,
                    0.9259216252800966,
                ],
            ),
            (
                c3_config(),
                1,
                [
                    0.9984650901072893,
                    0.9850626922535208,
                    0.9332604279068815,
                    0.8822086878737041,
                    0.8096258979697577,
                    0.7027193615791653,
                ],
            ),
            (
                c3_config(),
                2,
                [
                    0.9982900488827382,
                    0.9851652476240254,
                    0.9513853998643846,
                    0.9295686767137121,
                    0.9059210057056742,
                    0.8761524529057387,
                ],
            ),
        ];
        for (cfg, k, wants) in cases {
            for (&th, &want) in GRID.iter().zip(&wants) {
                let got = extra_work_transform(&cfg, k, th).unwrap();
                assert!(
                    (got - want).abs() < 1e-9,
                    "k={k} theta {th}: got {got}, want {want}"
                );
            }
        }
    }

    // ------------------------------------------------------ response time

    #[test]
    fn mm1_response_transform_is_exponential() {
        let cfg = mm1_config();
        assert!((response_transform(&cfg, 0, 0.0).unwrap() - 1.0).abs() < 1e-12);
        for th in GRID {
            let got = response_transform(&cfg, 0, th).unwrap();
            let want = 0.5 / (0.5 + th);
            assert!(
                (got - want).abs() < 1e-12,
                "theta {th}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn mm1_moments_to_fourth_order() {
        let m = response_moments(&mm1_config(), 0, 4).unwrap();
        let wants = [2.0, 8.0, 48.0, 384.0];
        let tols = [1e-6, 1e-6, 1e-4, 1e-4];
        for ((got, want), tol) in m.iter().zip(wants).zip(tols) {
            assert!(
                (got - want).abs() < tol * want,
                "got {got}, want {want} within {tol}"
            );
        }
    }

    #[test]
    fn reference_config_moments_match_high_precision() {
        let cfg = ref_config();
        let m0 = response_moments(&cfg, 0, 2).unwrap();
        assert!((m0[0] - 0.61394444444444444444).abs() < 1e-6 * 0.614);
        assert!((m0[1] - 0.68832049382716049383).abs() < 1e-6 * 0.688);
        let m1 = response_moments(&cfg, 1, 2).unwrap();
        assert!((m1[0] - 2.9264477227490926121).abs() < 1e-6 * 2.93);
        assert!((m1[1] - 17.51238711390210819).abs() < 1e-6 * 17.5);
    }

    #[test]
    fn three_class_overhead_moments_match_high_precision() {
        let cfg = c3_config();
        let wants = [
            (0.40044464760638297872, 0.31932720487682963634),
            (0.88975773218022868285, 2.1491445933864848237),
            (3.406302874121685869, 27.633399288791170729),
        ];
        for (k, (et, et2)) in wants.iter().enumerate() {
            let m = response_moments(&cfg, k, 2).unwrap();
            assert!(
                (m[0] - et).abs() < 1e-6 * et,
                "k={k}: mean {} vs {et}",
                m[0]
            );
            assert!(
                (m[1] - et2).abs() < 1e-6 * et2,
                "k={k}: second {} vs {et2}",
                m[1]
            );
        }
    }

    #[test]
    fn response_transform_matches_frozen_grid() {
        let cfg = ref_config();
        let wants0 = [
            0.9938947813139084,
            0.9418659047620411,
            0.7603516730970844,
            0.60722543070137,
            0.42377332607009305,
            0.20441662143653674,
        ];
        let wants1 = [
            0.9715855944831704,
            0.7746865966872554,
            0.41200724474726874,
            0.2624403678551551,
            0.1534136567643676,
            0.06899695668324936,
        ];
        for ((&th, &w0), &w1) in GRID.iter().zip(&wants0).zip(&wants1) {
            let g0 = response_transform(&cfg, 0, th).unwrap();
            let g1 = response_transform(&cfg, 1, th).unwrap();
            assert!((g0 - w0).abs() < 1e-9, "k=0 theta {th}: {g0} vs {w0}");
            assert!((g1 - w1).abs() < 1e-9, "k=1 theta {th}: {g1} vs {w1}");
        }
    }

    #[test]
    fn textbook_two_class_zero_overhead_means() {
        let cfg = pr(vec![
            ClassSpec::new(0.25, exp(1.0)),
            ClassSpec::new(0.25, exp(1.0)),
        ]);
        let m0 = response_moments(&cfg, 0, 1).unwrap();
        let m1 = response_moments(&cfg, 1, 1).unwrap();
        assert!((m0[0] - 4.0 / 3.0).abs() < 1e-8, "class 0 mean {}", m0[0]);
        assert!((m1[0] - 8.0 / 3.0).abs() < 1e-8, "class 1 mean {}", m1[0]);
    }

    #[test]
    fn repeat_mode_moments_match_high_precision() {
        let rd = rd3_config();
        let m = response_moments(&rd, 0, 2).unwrap();
        assert!((m[0] - 0.45714285714285714286).abs() < 1e-6 * 0.457);
        assert!((m[1] - 0.32272108843537414966).abs() < 1e-6 * 0.323);
        let m2 = response_moments(&rd, 2, 2).unwrap();
        assert!((m2[0] - 1.3264227416578757426).abs() < 1e-6 * 1.33);
        assert!((m2[1] - 4.0942372639882107944).abs() < 1e-6 * 4.09);

        let ri = ri2_config();
        let m = response_moments(&ri, 1, 2).unwrap();
        assert!((m[0] - 2.082064371025287134).abs() < 1e-6 * 2.08);
        assert!((m[1] - 9.7880804695962187805).abs() < 1e-6 * 9.79);
    }

    #[test]
    fn repeat_response_grids_match_high_precision() {
        let rd = rd3_config();
        let wants_rd1 = [
            (0.5, 0.75754741689232879),
            (1.0, 0.6131520302117381),
            (2.0, 0.4469980783118896),
        ];
        for (th, want) in wants_rd1 {
            let got = response_transform(&rd, 1, th).unwrap();
            assert!(
                (got - want).abs() < 1e-12,
                "rd k=1 theta {th}: {got} vs {want}"
            );
        }
        let ri = ri2_config();
        let wants_ri0 = [
            (0.5, 0.7),
            (1.0, 0.49608117128388637),
            (2.0, 0.25546627651017924),
        ];
        for (th, want) in wants_ri0 {
            let got = response_transform(&ri, 0, th).unwrap();
            assert!(
                (got - want).abs() < 1e-12,
                "ri k=0 theta {th}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn setup_decomposition_identity() {
        // E[T] must split into the supersystem queueing delay (an M/G/1
        // mean applied to the effective job), the effective job itself,
        // and the mean extra work.
        let cfg = ref_config();
        let k = 1;
        let ev = Evaluator::new(&cfg, k).unwrap();
        let mean = ev.moments(1).unwrap()[0];

        let e_service = ev.busy_mean;
        let mut om_service = |t: f64| {
            if t == 0.0 {
                return Ok(0.0);
            }
            let fp = ev.session.fixed_point(k, t)?;
            Ok(mode_job_tv(&cfg, k, t, &fp.q)?.om)
        };
        let h = 1e-3 / e_service;
        let second = -richardson(
            one_sided_derivative(&mut om_service, 2, h).unwrap(),
            one_sided_derivative(&mut om_service, 2, h / 2.0).unwrap(),
            4,
        );
        let lam = cfg.lambda(k);
        let e_setup = lam * second / (2.0 * (1.0 - lam * e_service));

        let mut om_extra = |t: f64| {
            mixture_tv(&ev.session, k, &ev.components, ev.mass_deficit, t)
                .map(|tv| tv.om)
        };
        let e_extra = richardson(
            one_sided_derivative(&mut om_extra, 1, h).unwrap(),
            one_sided_derivative(&mut om_extra, 1, h / 2.0).unwrap(),
            4,
        );

        let total = e_setup + e_service + e_extra;
        assert!(
            (mean - total).abs() < 1e-4 * mean,
            "mean {mean} vs decomposition {total} \
             (setup {e_setup}, service {e_service}, extra {e_extra})"
        );
    }

    #[test]
    fn response_components_multiply_to_the_transform() {
        let cfg = c3_config();
        for th in [0.0, 0.3, 1.7] {
            let parts = response_components(&cfg, 1, th).unwrap();
            let direct = response_transform(&cfg, 1, th).unwrap();
            let product = parts.setup_factor()
                * parts.service_factor()
                * parts.extra_work_factor();
            assert!((parts.value() - direct).abs() < 1e-14);
            assert!((parts.value() - product).abs() < 1e-14);
            for f in [
                parts.setup_factor(),
                parts.service_factor(),
                parts.extra_work_factor(),
            ] {
                assert!(f > 0.0 && f <= 1.0 + 1e-12, "factor {f} at {th}");
            }
        }
        let at_zero = response_components(&cfg, 1, 0.0).unwrap();
        assert_eq!(at_zero.setup_factor(), 1.0);
        assert_eq!(at_zero.service_factor(), 1.0);
    }

    #[test]
    fn response_result_bundles_transform_and_moments() {
        let cfg = ref_config();
        let res = response_result(&cfg, 1, 2).unwrap();
        assert_eq!(res.class(), 1);
        assert_eq!(res.moments().len(), 2);
        let direct = response_moments(&cfg, 1, 2).unwrap();
        assert_eq!(res.moments(), &direct[..]);
        let t = res.transform(1.0).unwrap();
        assert!((t - response_transform(&cfg, 1, 1.0).unwrap()).abs() < 1e-15);
        assert!((res.components(1.0).unwrap().value() - t).abs() < 1e-15);
    }

    #[test]
    fn response_mean_dominates_the_effective_size() {
        for (cfg, n) in [(ref_config(), 2), (c3_config(), 3)] {
            let profile = load_profile(&cfg).unwrap();
            for k in 0..n {
                let mean = response_moments(&cfg, k, 1).unwrap()[0];
                assert!(
                    mean >= profile.mean_span(k),
                    "class {k}: mean {mean} below span {}",
                    profile.mean_span(k)
                );
            }
        }
    }

    #[test]
    fn invalid_requests_are_domain_errors() {
        let cfg = ref_config();
        assert!(matches!(
            response_moments(&cfg, 0, 5),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            response_transform(&cfg, 2, 1.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            response_transform(&cfg, 0, -1.0),
            Err(Error::Domain(_))
        ));
        assert!(response_moments(&cfg, 0, 0).unwrap().is_empty());
    }
}

//! Joint transforms of a random time span and the class-indexed arrival
//! counts observed during it.
//!
//! For a span `R` during which `A_i` jobs of class `i` arrive, the joint
//! transform is `E[e^{-θR} · Π_i z_i^{A_i}]` with `θ ≥ 0` and
//! `z ∈ [0,1]ⁿ`. Three span constructions matter here:
//!
//! * a **Poisson span**: an independent duration `V` watched by all
//!   arrival streams — transform `Ṽ(θ + Σ λ_i(1-z_i))`;
//! * an **overhead chain**: the pause, the resume, and — every time the
//!   resume is spoiled by a higher-priority arrival — another
//!   pause/resume round, until a clean resume;
//! * a **job span**: everything a tagged job occupies the server with:
//!   its service plus one overhead chain per higher-priority arrival
//!   during that service (pause/resume mode), or its service attempts cut
//!   short by higher-priority arrivals (repeat modes).
//!
//! Spans can be summed; independence makes the transform of a sum the
//! product of the parts' transforms.
//!
//! # Numerical form
//!
//! Every internal evaluator returns the pair `(value, 1 - value)` with the
//! complement computed from cancellation-free building blocks. Downstream
//! consumers divide complements by arguments of the same magnitude
//! (excess transforms, fixed-point residuals near extinction), which is
//! only accurate if the complement retains full relative precision as the
//! value approaches one. The `z` arguments are therefore passed internally
//! as complements `q_i = 1 - z_i`.

use crate::config::{Mode, SystemConfig};
use crate::durations::Distribution;
use crate::error::{Error, Result};

/// A transform value `v` carried together with its complement `om = 1-v`.
///
/// The invariant `v + om = 1` holds to rounding; `om` is the numerically
/// authoritative side when `v` is close to one.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Tv {
    pub v: f64,
    pub om: f64,
}

impl Tv {
    pub const ONE: Tv = Tv { v: 1.0, om: 0.0 };

    fn from_lst(dist: &Distribution, arg: f64) -> Tv {
        Tv {
            v: dist.lst_inner(arg),
            om: dist.one_minus_lst(arg),
        }
    }

    /// Transform of the sum of two independent spans.
    pub fn product(self, other: Tv) -> Tv {
        Tv {
            v: self.v * other.v,
            om: self.om + self.v * other.om,
        }
    }
}

/// Selector for one joint span transform.
#[derive(Debug, Clone, PartialEq)]
pub enum JointKind {
    /// An independent duration watched by all arrival streams.
    Poisson(Distribution),
    /// The full server occupancy of one class-`k` job.
    Job(usize),
    /// Class-`k` job occupancy when preempted work restarts with a fresh
    /// size.
    RepeatDifferentJob(usize),
    /// Class-`k` job occupancy when preempted work restarts with its
    /// original size.
    RepeatIdenticalJob(usize),
    /// An independent sum of spans; transform is the product.
    Sum(Vec<JointKind>),
}

/// Validate `(theta, z)` and return the complement vector `q = 1 - z`.
fn check_args(config: &SystemConfig, theta: f64, z: &[f64]) -> Result<Vec<f64>> {
    if !(theta.is_finite() && theta >= 0.0) {
        return Err(Error::Domain(format!(
            "transform argument theta = {theta} must be nonnegative and finite"
        )));
    }
    if z.len() != config.n() {
        return Err(Error::Domain(format!(
            "z has length {} but the system has {} classes",
            z.len(),
            config.n()
        )));
    }
    for (i, &zi) in z.iter().enumerate() {
        if !(zi >= 0.0 && zi <= 1.0) {
            return Err(Error::Domain(format!(
                "z[{i}] = {zi} lies outside [0, 1]"
            )));
        }
    }
    Ok(z.iter().map(|&zi| 1.0 - zi).collect())
}

pub(crate) fn require_mode(config: &SystemConfig, mode: Mode, what: &str) -> Result<()> {
    if config.mode() == mode {
        Ok(())
    } else {
        Err(Error::UnsupportedConfiguration(format!(
            "{what} is defined for {mode:?} mode, but the config uses {:?} mode",
            config.mode()
        )))
    }
}

/// `Σ_i λ_i q_i` over `lo ≤ i < hi`.
fn weighted_q(config: &SystemConfig, q: &[f64], lo: usize, hi: usize) -> f64 {
    (lo..hi).map(|i| config.lambda(i) * q[i]).sum()
}

/// Scalar argument `θ + Σ_i λ_i(1-z_i)` at which every arrival stream
/// thins an independent duration, written in the complement weights `q`.
pub(crate) fn poisson_argument(config: &SystemConfig, theta: f64, q: &[f64]) -> f64 {
    theta + weighted_q(config, q, 0, config.n())
}

/// Transform of an independent duration `V` seen by all arrival streams:
/// `Ṽ(θ + Σ_i λ_i(1-z_i))`.
///
/// # Examples
/// ```
/// use preemptq::{ClassSpec, Distribution, Mode, SystemConfig};
/// use preemptq::joint::poisson_joint_transform;
/// let cfg = SystemConfig::new(
///     Mode::PauseResume,
///     vec![ClassSpec::new(0.5, Distribution::exponential(1.0).unwrap())],
/// )
/// .unwrap();
/// let v = Distribution::exponential(1.0).unwrap();
/// let t = poisson_joint_transform(&cfg, &v, 1.0, &[0.0]).unwrap();
/// assert!((t - 0.4).abs() < 1e-15); // 1/(1 + 1 + 0.5)
/// ```
pub fn poisson_joint_transform(
    config: &SystemConfig,
    duration: &Distribution,
    theta: f64,
    z: &[f64],
) -> Result<f64> {
    let q = check_args(config, theta, z)?;
    Ok(poisson_tv(config, duration, theta, &q).v)
}

pub(crate) fn poisson_tv(
    config: &SystemConfig,
    duration: &Distribution,
    theta: f64,
    q: &[f64],
) -> Tv {
    let arg = poisson_argument(config, theta, q);
    Tv::from_lst(duration, arg)
}

/// Transform of the overhead chain a preempted class-`k` job must run
/// before its service can continue: pause, resume, and a fresh round for
/// every resume during which a class-`<k` job arrived.
pub fn overhead_chain_transform(
    config: &SystemConfig,
    k: usize,
    theta: f64,
    z: &[f64],
) -> Result<f64> {
    require_mode(config, Mode::PauseResume, "the overhead chain")?;
    config.check_class(k)?;
    let q = check_args(config, theta, z)?;
    Ok(chain_tv(config, k, theta, &q).v)
}

/// Overhead chain in value/complement form.
///
/// With `u = C̃_k(a)`, `w = D̃_k(a)`, `v = D̃_k(g)` where `a` counts all
/// arrivals and `g` counts classes `≥ k` plus the bare rate of classes
/// `< k` (an arrival there spoils the resume regardless of `z`), the
/// chain transform is `u·v / (1 - u·(w - v))`. Rewriting the denominator
/// as `(1 - u·w) + u·v` makes both the value and the complement ratios of
/// positive quantities.
pub(crate) fn chain_tv(config: &SystemConfig, k: usize, theta: f64, q: &[f64]) -> Tv {
    let cls = config.class(k);
    let a_arg = poisson_argument(config, theta, q);
    let g_arg = theta + weighted_q(config, q, k, config.n()) + config.lambda_below(k);
    let u = Tv::from_lst(&cls.pause, a_arg);
    let w = Tv::from_lst(&cls.resume, a_arg);
    let v = Tv::from_lst(&cls.resume, g_arg);
    let om_uw = u.product(w).om;
    let denom = om_uw + u.v * v.v;
    Tv {
        v: u.v * v.v / denom,
        om: om_uw / denom,
    }
}

/// Transform of the complete server occupancy of one class-`k` job in
/// pause/resume mode: its service time, all arrivals during it, and one
/// overhead chain per class-`<k` arrival during the service itself.
pub fn job_joint_transform(
    config: &SystemConfig,
    k: usize,
    theta: f64,
    z: &[f64],
) -> Result<f64> {
    require_mode(config, Mode::PauseResume, "the job joint transform")?;
    config.check_class(k)?;
    let q = check_args(config, theta, z)?;
    Ok(job_tv(config, k, theta, &q).v)
}

pub(crate) fn job_tv(config: &SystemConfig, k: usize, theta: f64, q: &[f64]) -> Tv {
    let mut arg = theta + weighted_q(config, q, k, config.n());
    if k > 0 {
        let chain = chain_tv(config, k, theta, q);
        for i in 0..k {
            // 1 - z_i·chain = (1 - z_i) + z_i·(1 - chain)
            arg += config.lambda(i) * (q[i] + (1.0 - q[i]) * chain.om);
        }
    }
    Tv::from_lst(&config.class(k).size, arg)
}

/// Job occupancy transform when preempted work restarts with a fresh
/// size: `S̃_k(φ) / (1 - (Σ_{i<k} λ_i z_i / φ)·(1 - S̃_k(φ)))` with
/// `φ = θ + Σ_{i≥k} λ_i(1-z_i) + Σ_{i<k} λ_i`.
pub fn repeat_different_joint_transform(
    config: &SystemConfig,
    k: usize,
    theta: f64,
    z: &[f64],
) -> Result<f64> {
    require_mode(config, Mode::RepeatDifferent, "the repeat-different job transform")?;
    config.check_class(k)?;
    let q = check_args(config, theta, z)?;
    Ok(repeat_different_tv(config, k, theta, &q).v)
}

pub(crate) fn repeat_different_tv(
    config: &SystemConfig,
    k: usize,
    theta: f64,
    q: &[f64],
) -> Tv {
    let size = &config.class(k).size;
    let tail = weighted_q(config, q, k, config.n());
    let phi = theta + tail + config.lambda_below(k);
    let sv = Tv::from_lst(size, phi);
    if k == 0 {
        return sv;
    }
    restart_tv(sv, phi, theta + tail + weighted_q(config, q, 0, k))
}

/// Geometric-restart combination shared by the repeat modes.
///
/// `sv` is the transform of one complete attempt at argument `phi`;
/// `om_num` is `φ - Σ_{i<k} λ_i z_i` assembled as a sum of positive
/// terms, so the complement of the result keeps full relative precision
/// even as everything approaches one.
fn restart_tv(sv: Tv, phi: f64, om_num: f64) -> Tv {
    let cut = (phi - om_num) / phi; // Σ λ_i z_i / φ, in [0, 1)
    let denom = 1.0 - cut * sv.om;
    Tv {
        v: sv.v / denom,
        om: sv.om * (om_num / phi) / denom,
    }
}

/// Job occupancy transform when preempted work restarts with its original
/// size: the repeat-different expression conditioned on each atom of a
/// discrete size distribution.
pub fn repeat_identical_joint_transform(
    config: &SystemConfig,
    k: usize,
    theta: f64,
    z: &[f64],
) -> Result<f64> {
    require_mode(config, Mode::RepeatIdentical, "the repeat-identical job transform")?;
    config.check_class(k)?;
    let q = check_args(config, theta, z)?;
    repeat_identical_tv(config, k, theta, &q).map(|t| t.v)
}

pub(crate) fn repeat_identical_tv(
    config: &SystemConfig,
    k: usize,
    theta: f64,
    q: &[f64],
) -> Result<Tv> {
    let size = &config.class(k).size;
    let atoms = size.atoms().ok_or_else(|| {
        Error::UnsupportedConfiguration(format!(
            "repeat-identical analysis needs a discrete size distribution for \
             class {k}, got {:?}",
            size.family()
        ))
    })?;
    let tail = weighted_q(config, q, k, config.n());
    let phi = theta + tail + config.lambda_below(k);
    let om_num = theta + tail + weighted_q(config, q, 0, k);
    let mut acc = Tv { v: 0.0, om: 0.0 };
    for (p, s) in atoms {
        let attempt = Tv {
            v: (-phi * s).exp(),
            om: -(-phi * s).exp_m1(),
        };
        let one = if k == 0 {
            attempt
        } else {
            restart_tv(attempt, phi, om_num)
        };
        acc.v += p * one.v;
        acc.om += p * one.om;
    }
    Ok(acc)
}

/// Transform of a sum of independent spans: the product of the parts.
pub fn sum_joint_transform(
    config: &SystemConfig,
    parts: &[JointKind],
    theta: f64,
    z: &[f64],
) -> Result<f64> {
    if parts.is_empty() {
        return Err(Error::Domain(
            "sum of spans needs at least one part".into(),
        ));
    }
    let q = check_args(config, theta, z)?;
    let mut acc = Tv::ONE;
    for part in parts {
        acc = acc.product(kind_tv(config, part, theta, &q)?);
    }
    Ok(acc.v)
}

/// Evaluate any span kind at `(theta, z)`.
pub fn joint_transform(
    config: &SystemConfig,
    kind: &JointKind,
    theta: f64,
    z: &[f64],
) -> Result<f64> {
    match kind {
        JointKind::Sum(parts) => sum_joint_transform(config, parts, theta, z),
        _ => {
            let q = check_args(config, theta, z)?;
            kind_tv(config, kind, theta, &q).map(|t| t.v)
        }
    }
}

pub(crate) fn kind_tv(
    config: &SystemConfig,
    kind: &JointKind,
    theta: f64,
    q: &[f64],
) -> Result<Tv> {
    match kind {
        JointKind::Poisson(dist) => Ok(poisson_tv(config, dist, theta, q)),
        JointKind::Job(k) => {
            require_mode(config, Mode::PauseResume, "the job span")?;
            config.check_class(*k)?;
            Ok(job_tv(config, *k, theta, q))
        }
        JointKind::RepeatDifferentJob(k) => {
            require_mode(config, Mode::RepeatDifferent, "the repeat-different job span")?;
            config.check_class(*k)?;
            Ok(repeat_different_tv(config, *k, theta, q))
        }
        JointKind::RepeatIdenticalJob(k) => {
            require_mode(config, Mode::RepeatIdentical, "the repeat-identical job span")?;
            config.check_class(*k)?;
            repeat_identical_tv(config, *k, theta, q)
        }
        JointKind::Sum(parts) => {
            if parts.is_empty() {
                return Err(Error::Domain(
                    "sum of spans needs at least one part".into(),
                ));
            }
            let mut acc = Tv::ONE;
            for part in parts {
                acc = acc.product(kind_tv(config, part, theta, q)?);
            }
            Ok(acc)
        }
    }
}

/// The mode-appropriate job span transform in value/complement form.
pub(crate) fn mode_job_tv(
    config: &SystemConfig,
    k: usize,
    theta: f64,
    q: &[f64],
) -> Result<Tv> {
    match config.mode() {
        Mode::PauseResume => Ok(job_tv(config, k, theta, q)),
        Mode::RepeatDifferent => Ok(repeat_different_tv(config, k, theta, q)),
        Mode::RepeatIdentical => repeat_identical_tv(config, k, theta, q),
    }
}

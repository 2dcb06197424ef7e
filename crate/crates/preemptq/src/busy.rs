//! Class-restricted busy periods: fixed-point marks, transforms, means,
//! and excess (equilibrium residual) transforms.
//!
//! A "class `< level` busy period" starts when some initiating span
//! begins occupying the server and ends when the server next becomes
//! free of work from classes below `level`. Marking every class-`i`
//! arrival during the initiating span with the transform of the
//! sub-busy-period it spawns turns the span's joint transform into the
//! busy-period transform; the marks `b` solve a componentwise-monotone
//! fixed-point system and are found by iterating from below, which
//! yields the least solution even when the restricted system is
//! overloaded and the busy period can be infinite.
//!
//! Internally the solver iterates on the complements `q = 1 - b`: near
//! stability the marks approach one, and the complement form keeps full
//! relative precision where the direct form would lose it to
//! cancellation.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::joint::{kind_tv, mode_job_tv, JointKind, Tv};
use crate::loads::{load_profile, LoadProfile};
use crate::numeric::forward_derivative4;

/// Sup-norm change below which the fixed-point iteration stops.
const FIXED_POINT_TOL: f64 = 1e-12;

/// Iteration cap; reaching it reports non-convergence with the residual.
const FIXED_POINT_CAP: u64 = 1_000_000;

/// Below `θ·mean` of this size, the excess transform switches to a
/// derivative-based evaluation to dodge cancellation in `1 - Ṽ(θ)`.
const EXCESS_SAFE_THRESHOLD: f64 = 1e-6;

/// Converged marks of the class-restricted busy-period system.
///
/// `level` counts the admitted classes: arrivals of class `i < level`
/// extend the busy period, everything else is ignored. `level = 0`
/// admits nothing (the busy period is just the initiating span) and
/// `level = n` admits every class. Entries `b[i]` for `i ≥ level` are
/// pinned at exactly one.
#[derive(Debug, Clone)]
pub struct BusyFixedPoint {
    theta: f64,
    level: usize,
    b: Vec<f64>,
    /// Complements `1 - b`, exact where `b` would round.
    pub(crate) q: Vec<f64>,
    iterations: u64,
    residual: f64,
}

impl BusyFixedPoint {
    /// Transform argument the marks were solved at.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Number of admitted classes.
    pub fn level(&self) -> usize {
        self.level
    }

    /// Busy-period marks per class; `b[i] = 1` exactly for `i ≥ level`.
    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Number of fixed-point sweeps after the initial evaluation.
    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    /// Sup-norm of the last update.
    pub fn residual(&self) -> f64 {
        self.residual
    }
}

fn check_level(config: &SystemConfig, level: usize) -> Result<()> {
    if level > config.n() {
        return Err(Error::Domain(format!(
            "busy-period level {level} exceeds the class count {}",
            config.n()
        )));
    }
    Ok(())
}

fn check_theta(theta: f64) -> Result<()> {
    if !theta.is_finite() || theta < 0.0 {
        return Err(Error::Domain(format!(
            "transform argument must be a nonnegative real, got {theta}"
        )));
    }
    Ok(())
}

/// Least solution of the busy-period mark system at `(level, θ)`.
///
/// # Input
/// `level ∈ [0, n]` (number of admitted classes) and `θ ≥ 0`.
///
/// # Output
/// The converged [`BusyFixedPoint`]. Starting from marks of zero, each
/// sweep replaces `b_i` (for `i < level`) with the class-`i` job span
/// transform evaluated at `(θ, b)`; iterates increase monotonically, so
/// the limit is the least solution — the honest busy-period transform,
/// which is defective when the admitted classes are overloaded.
///
/// # Errors
/// Reaching the iteration cap returns a convergence error carrying the
/// last residual; convergence slows as the admitted load approaches one.
pub fn solve_busy_fixed_point(
    config: &SystemConfig,
    level: usize,
    theta: f64,
) -> Result<BusyFixedPoint> {
    check_level(config, level)?;
    check_theta(theta)?;
    let n = config.n();
    // Seed marks of zero for admitted classes (q = 1), one elsewhere.
    let mut seed = vec![0.0; n];
    for qi in seed.iter_mut().take(level) {
        *qi = 1.0;
    }
    let mut q = vec![0.0; n];
    for i in 0..level {
        q[i] = mode_job_tv(config, i, theta, &seed)?.om;
    }
    let mut iterations = 0u64;
    let mut residual;
    let mut last_delta = f64::INFINITY;
    loop {
        let mut delta = 0.0_f64;
        let prev = q.clone();
        for i in 0..level {
            let next = mode_job_tv(config, i, theta, &prev)?.om;
            // The map is monotone, so complements may only shrink; the
            // slack absorbs rounding jitter near the fixed point.
            assert!(
                next <= prev[i] + 1e-14,
                "busy-period iterate moved backwards for class {i}: \
                 {next} after {}",
                prev[i]
            );
            delta = delta.max(prev[i] - next);
            q[i] = next;
        }
        iterations += 1;
        residual = delta;
        if delta < FIXED_POINT_TOL {
            // Converged; keep sweeping while the residual still strictly
            // shrinks, so the iterate settles on the floating-point fixed
            // point instead of stopping anywhere inside the tolerance.
            // The extra accuracy matters downstream, where excess
            // transforms divide these complements by theta and would
            // otherwise inflate a stopping error like 1/theta.
            if delta == 0.0
                || delta >= last_delta
                || iterations >= FIXED_POINT_CAP
            {
                break;
            }
        } else if iterations >= FIXED_POINT_CAP {
            return Err(Error::NoConvergence {
                iterations,
                residual,
            });
        }
        last_delta = delta;
    }
    let b = q.iter().map(|qi| 1.0 - qi).collect();
    Ok(BusyFixedPoint {
        theta,
        level,
        b,
        q,
        iterations,
        residual,
    })
}

/// Transform of the class-`< level` busy period initiated by `kind`.
///
/// # Input
/// Any span kind valid for the config's mode, a level in `[0, n]`, and
/// `θ ≥ 0`.
///
/// # Output
/// The initiating span's joint transform evaluated at `(θ, b)` with `b`
/// from [`solve_busy_fixed_point`].
pub fn busy_transform(
    config: &SystemConfig,
    kind: &JointKind,
    level: usize,
    theta: f64,
) -> Result<f64> {
    let fp = solve_busy_fixed_point(config, level, theta)?;
    kind_tv(config, kind, theta, &fp.q).map(|t| t.v)
}

/// Mean span of an initiating kind, mode-consistently.
fn kind_mean_span(
    config: &SystemConfig,
    kind: &JointKind,
    profile: &LoadProfile,
) -> Result<f64> {
    match kind {
        JointKind::Poisson(dist) => Ok(dist.mean()),
        JointKind::Job(k)
        | JointKind::RepeatDifferentJob(k)
        | JointKind::RepeatIdenticalJob(k) => {
            // Mode mismatches surface through the transform evaluator;
            // probing at the origin reuses its checks.
            kind_tv(config, kind, 0.0, &vec![0.0; config.n()])?;
            config.check_class(*k)?;
            Ok(profile.mean_span(*k))
        }
        JointKind::Sum(parts) => {
            if parts.is_empty() {
                return Err(Error::Domain(
                    "sum of spans needs at least one part".into(),
                ));
            }
            let mut acc = 0.0;
            for part in parts {
                acc += kind_mean_span(config, part, profile)?;
            }
            Ok(acc)
        }
    }
}

/// Mean length of the class-`< level` busy period initiated by `kind`.
///
/// # Output
/// `E[span]/(1 - ρ_{<level})` when the admitted load is below one,
/// `f64::INFINITY` otherwise (an overloaded restriction is a legal
/// query, not an error).
///
/// # Examples
/// ```
/// use preemptq::{ClassSpec, Distribution, Mode, SystemConfig};
/// use preemptq::joint::JointKind;
/// use preemptq::busy::busy_mean;
/// let cfg = SystemConfig::new(
///     Mode::PauseResume,
///     vec![ClassSpec::new(0.5, Distribution::exponential(1.0).unwrap())],
/// )
/// .unwrap();
/// let m = busy_mean(&cfg, &JointKind::Job(0), 1).unwrap();
/// assert!((m - 2.0).abs() < 1e-12);
/// ```
pub fn busy_mean(
    config: &SystemConfig,
    kind: &JointKind,
    level: usize,
) -> Result<f64> {
    check_level(config, level)?;
    let profile = load_profile(config)?;
    let span = kind_mean_span(config, kind, &profile)?;
    let rho_admitted = profile.rho_below(level);
    if rho_admitted >= 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(span / (1.0 - rho_admitted))
}

/// Excess (equilibrium residual) transform `(1 - Ṽ(θ))/(θ·E[V])` of a
/// duration given by its transform and mean.
///
/// # Input
/// `base` evaluates the duration's transform; `mean` is its (positive,
/// finite) expectation; `θ ≥ 0`.
///
/// # Output
/// The excess transform value; exactly one at `θ = 0`. For
/// `θ·mean < 1e-6` the numerator is replaced by `-θ·Ṽ'(θ/2)` with the
/// derivative taken by a short one-sided stencil, avoiding the
/// cancellation in `1 - Ṽ(θ)`.
///
/// # Examples
/// ```
/// use preemptq::busy::excess_transform;
/// // The exponential is its own excess distribution.
/// let v = excess_transform(|t| Ok(1.0 / (1.0 + t)), 1.0, 1.0).unwrap();
/// assert!((v - 0.5).abs() < 1e-12);
/// ```
pub fn excess_transform<F>(mut base: F, mean: f64, theta: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !mean.is_finite() || mean <= 0.0 {
        return Err(Error::Domain(format!(
            "excess transform needs a positive finite mean, got {mean}"
        )));
    }
    check_theta(theta)?;
    if theta == 0.0 {
        return Ok(1.0);
    }
    if theta * mean < EXCESS_SAFE_THRESHOLD {
        let h = 1e-4 / mean;
        let d = forward_derivative4(&mut base, theta / 2.0, h)?;
        return Ok(-d / mean);
    }
    let v = base(theta)?;
    Ok((1.0 - v) / (theta * mean))
}

/// Memoizing evaluation context for one configuration.
///
/// Response-transform evaluation hits the same `(level, θ)` fixed point
/// many times; the session caches solved marks behind a lock so sweeps
/// may share it across threads.
pub struct Session<'a> {
    config: &'a SystemConfig,
    cache: RwLock<HashMap<(usize, u64), Arc<BusyFixedPoint>>>,
}

impl<'a> Session<'a> {
    /// New session with an empty fixed-point cache.
    pub fn new(config: &'a SystemConfig) -> Self {
        Session {
            config,
            cache: RwLock::new(HashMap::new()),
        }
    }

    /// The configuration this session analyzes.
    pub fn config(&self) -> &'a SystemConfig {
        self.config
    }

    /// Memoized [`solve_busy_fixed_point`].
    pub fn fixed_point(
        &self,
        level: usize,
        theta: f64,
    ) -> Result<Arc<BusyFixedPoint>> {
        let key = (level, theta.to_bits());
        if let Some(hit) = self.cache.read().expect("lock poisoned").get(&key)
        {
            return Ok(hit.clone());
        }
        let fp = Arc::new(solve_busy_fixed_point(self.config, level, theta)?);
        self.cache
            .write()
            .expect("lock poisoned")
            .insert(key, fp.clone());
        Ok(fp)
    }

    /// Busy-period transform of `kind` at `(level, θ)` using cached
    /// marks.
    pub fn busy_transform(
        &self,
        kind: &JointKind,
        level: usize,
        theta: f64,
    ) -> Result<f64> {
        self.busy_tv(kind, level, theta).map(|t| t.v)
    }

    /// Complement-pair form of [`Session::busy_transform`].
    pub(crate) fn busy_tv(
        &self,
        kind: &JointKind,
        level: usize,
        theta: f64,
    ) -> Result<Tv> {
        check_theta(theta)?;
        let fp = self.fixed_point(level, theta)?;
        kind_tv(self.config, kind, theta, &fp.q)
    }

    /// Busy-period mean of `kind` at `level`; see [`busy_mean`].
    pub fn busy_mean(&self, kind: &JointKind, level: usize) -> Result<f64> {
        busy_mean(self.config, kind, level)
    }
}

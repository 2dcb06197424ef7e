//! Per-class server loads and the branching stability criterion.
//!
//! Each class-`k` job ties up the server for its own service plus, in
//! pause/resume mode, the pause and resume periods its preemptions
//! trigger, or, in the repeat modes, the wasted earlier attempts. The
//! per-class load splits into the service part `σ_k` and the overhead
//! parts `γ_k` (pauses) and `δ_k` (resumes); their sum `ρ_k` is the
//! fraction of time the server spends on behalf of class `k`, and the
//! system is stable exactly when the total over all classes is below one.
//!
//! The same per-job means feed a branching-process view of the queue:
//! during the time the server is occupied by one class-`i` job, class-`j`
//! arrivals accrue at rate `λ_j`, so the mean offspring matrix has
//! entries `λ_j·E[R_i]` where `E[R_i]` is the mean occupation span. Its
//! spectral radius equals the total load, giving an independent check of
//! the stability boundary.

use serde::Serialize;

use crate::config::{Mode, SystemConfig};
use crate::error::{Error, Result};
use crate::joint::{mode_job_tv, require_mode};
use crate::numeric::refined_derivative;

/// Convergence demanded of the derivative-based occupation-span means
/// used in the repeat modes.
const SPAN_DERIVATIVE_TOL: f64 = 1e-8;

/// Per-class decomposition of the offered server load.
///
/// All vectors are indexed by class, `0` being the highest priority.
#[derive(Debug, Clone, Serialize)]
pub struct LoadProfile {
    /// Service load `σ_k = λ_k·E[S_k]`.
    sigma: Vec<f64>,
    /// Pause-overhead load `γ_k`; zero for class 0 and in repeat modes.
    gamma: Vec<f64>,
    /// Resume-overhead load `δ_k`; zero for class 0 and in repeat modes.
    delta: Vec<f64>,
    /// Total class load `ρ_k = σ_k + γ_k + δ_k`.
    rho: Vec<f64>,
    /// Mean occupation span `E[R_k]` of one class-`k` job.
    mean_span: Vec<f64>,
    /// Prefix sums of `rho`: `rho_prefix[k] = Σ_{i<k} ρ_i`, length `n+1`.
    rho_prefix: Vec<f64>,
}

impl LoadProfile {
    /// Number of classes.
    pub fn n(&self) -> usize {
        self.rho.len()
    }

    /// Service load `σ_k`.
    pub fn sigma(&self, k: usize) -> f64 {
        self.sigma[k]
    }

    /// Pause-overhead load `γ_k`.
    pub fn gamma(&self, k: usize) -> f64 {
        self.gamma[k]
    }

    /// Resume-overhead load `δ_k`.
    pub fn delta(&self, k: usize) -> f64 {
        self.delta[k]
    }

    /// Total load `ρ_k` of class `k`.
    pub fn rho(&self, k: usize) -> f64 {
        self.rho[k]
    }

    /// Load of the classes with priority over `k`: `Σ_{i<k} ρ_i`.
    /// Accepts `k = n`, where it equals [`LoadProfile::total`].
    pub fn rho_below(&self, k: usize) -> f64 {
        self.rho_prefix[k]
    }

    /// Load of class `k` and everything above it: `Σ_{i≤k} ρ_i`.
    pub fn rho_at_most(&self, k: usize) -> f64 {
        self.rho_prefix[k + 1]
    }

    /// Total offered load `ρ = Σ_k ρ_k`.
    pub fn total(&self) -> f64 {
        *self.rho_prefix.last().expect("prefix sums are non-empty")
    }

    /// Mean occupation span `E[R_k]`: the expected total server time one
    /// class-`k` job consumes, counting service, any pause/resume
    /// overheads it triggers, and any repeated attempts.
    pub fn mean_span(&self, k: usize) -> f64 {
        self.mean_span[k]
    }

    /// Whether the total load is below the stability boundary.
    pub fn is_stable(&self) -> bool {
        self.total() < 1.0
    }
}

/// Stability assessment of a configuration via the total load and,
/// independently, the spectral radius of the mean offspring matrix.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    rho: f64,
    stable: bool,
    mean_offspring_matrix: Vec<Vec<f64>>,
    spectral_radius: f64,
}

impl StabilityReport {
    /// Total offered load `ρ`.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `true` iff `ρ < 1`.
    pub fn stable(&self) -> bool {
        self.stable
    }

    /// Mean offspring matrix `M` with `M[i][j] = λ_j·E[R_i]`: the
    /// expected number of class-`j` arrivals during the occupation span
    /// of one class-`i` job.
    pub fn mean_offspring_matrix(&self) -> &[Vec<f64>] {
        &self.mean_offspring_matrix
    }

    /// Spectral radius of the mean offspring matrix, computed by power
    /// iteration; agrees with `ρ` because the matrix has rank one.
    pub fn spectral_radius(&self) -> f64 {
        self.spectral_radius
    }
}

/// Mean pause and resume overhead accumulated by one class-`k` job over
/// its lifetime in pause/resume mode.
///
/// # Input
/// `config` must use pause/resume mode; `k` is a class index.
///
/// # Output
/// `(E[C*_k], E[D*_k])`: the expected total pause time and expected
/// total resume time one class-`k` job triggers, counting the repeats of
/// resumes that are themselves interrupted. Class 0 is never preempted,
/// so its overheads are zero.
///
/// # Examples
/// ```
/// use preemptq::{ClassSpec, Distribution, Mode, SystemConfig};
/// use preemptq::loads::overhead_loads;
/// let cfg = SystemConfig::new(
///     Mode::PauseResume,
///     vec![ClassSpec::new(0.5, Distribution::exponential(1.0).unwrap())],
/// )
/// .unwrap();
/// assert_eq!(overhead_loads(&cfg, 0).unwrap(), (0.0, 0.0));
/// ```
pub fn overhead_loads(config: &SystemConfig, k: usize) -> Result<(f64, f64)> {
    require_mode(config, Mode::PauseResume, "the overhead load")?;
    config.check_class(k)?;
    let lam_hi = config.lambda_below(k);
    if lam_hi == 0.0 {
        // No higher-priority traffic means no preemptions at all.
        return Ok((0.0, 0.0));
    }
    let spec = config.class(k);
    // Each preemption spawns a geometric number of (pause, resume)
    // rounds, a resume succeeding with probability D̃_k(λ_{<k}); the
    // preemption count itself has mean λ_{<k}·E[S_k].
    let success = spec.resume.lst(lam_hi)?;
    let scale = lam_hi * spec.size.mean() / success;
    Ok((scale * spec.pause.mean(), scale * spec.resume.mean()))
}

/// Mean occupation span of one class-`k` job in a repeat mode, obtained
/// as the derivative of the job span transform at the origin.
fn repeat_mean_span(config: &SystemConfig, k: usize) -> Result<f64> {
    // E[R_k] is -d/dθ of the span transform at θ=0 with all marks at 1,
    // i.e. +d/dθ of its complement, which the evaluator carries in a
    // cancellation-free form. A crude secant fixes the step scale, then
    // two one-sided stencils at h and h/2 are Richardson-combined.
    let q = vec![0.0; config.n()];
    let mut f = |theta: f64| mode_job_tv(config, k, theta, &q).map(|t| t.om);
    let probe = 1e-6;
    let crude = f(probe)? / probe;
    let h0 = 1e-3 / crude.max(1.0);
    for h in [h0, h0 / 4.0] {
        let (est, disagreement) = refined_derivative(&mut f, 1, h)?;
        if disagreement <= SPAN_DERIVATIVE_TOL {
            return Ok(est);
        }
    }
    Err(Error::NumericPrecision(format!(
        "the occupation-span derivative for class {k} did not settle to \
         {SPAN_DERIVATIVE_TOL:.0e} under step refinement"
    )))
}

/// Per-class load decomposition for any service mode.
///
/// # Input
/// Any valid configuration; stability is not required.
///
/// # Output
/// A [`LoadProfile`] with `σ_k`, `γ_k`, `δ_k`, `ρ_k`, the mean
/// occupation spans, and prefix sums of `ρ`. In the repeat modes all
/// overhead components are zero and `ρ_k` reflects the abandoned
/// attempts through the occupation span instead.
///
/// # Examples
/// ```
/// use preemptq::{ClassSpec, Distribution, Mode, SystemConfig};
/// use preemptq::loads::load_profile;
/// let cfg = SystemConfig::new(
///     Mode::PauseResume,
///     vec![ClassSpec::new(0.5, Distribution::exponential(1.0).unwrap())],
/// )
/// .unwrap();
/// let p = load_profile(&cfg).unwrap();
/// assert!((p.total() - 0.5).abs() < 1e-15);
/// ```
pub fn load_profile(config: &SystemConfig) -> Result<LoadProfile> {
    let n = config.n();
    let mut sigma = Vec::with_capacity(n);
    let mut gamma = Vec::with_capacity(n);
    let mut delta = Vec::with_capacity(n);
    let mut rho = Vec::with_capacity(n);
    let mut mean_span = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = config.lambda(k);
        let mean_size = config.class(k).size.mean();
        sigma.push(lambda * mean_size);
        match config.mode() {
            Mode::PauseResume => {
                let (e_pause, e_resume) = overhead_loads(config, k)?;
                gamma.push(lambda * e_pause);
                delta.push(lambda * e_resume);
                mean_span.push(mean_size + e_pause + e_resume);
            }
            Mode::RepeatDifferent | Mode::RepeatIdentical => {
                gamma.push(0.0);
                delta.push(0.0);
                mean_span.push(repeat_mean_span(config, k)?);
            }
        }
        rho.push(lambda * mean_span[k]);
    }
    let mut rho_prefix = Vec::with_capacity(n + 1);
    rho_prefix.push(0.0);
    for k in 0..n {
        rho_prefix.push(rho_prefix[k] + rho[k]);
    }
    Ok(LoadProfile {
        sigma,
        gamma,
        delta,
        rho,
        mean_span,
        rho_prefix,
    })
}

/// Spectral radius of a nonnegative square matrix by power iteration.
fn spectral_radius_power(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    if n == 0 {
        return 0.0;
    }
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut radius = 0.0;
    for _ in 0..500 {
        let y: Vec<f64> = m
            .iter()
            .map(|row| row.iter().zip(&x).map(|(a, b)| a * b).sum())
            .collect();
        let norm = y.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm;
        x = y.into_iter().map(|v| v / norm).collect();
        if (next - radius).abs() <= 1e-14 * next.max(1.0) {
            return next;
        }
        radius = next;
    }
    radius
}

/// Stability assessment from two independent angles: the total load and
/// the spectral radius of the mean offspring matrix.
///
/// # Input
/// Any valid configuration; an overloaded system still yields a report.
///
/// # Output
/// A [`StabilityReport`] whose `stable` flag is `ρ < 1` and whose
/// spectral radius is computed by power iteration on the offspring
/// matrix rather than read off the load sum.
pub fn stability_report(config: &SystemConfig) -> Result<StabilityReport> {
    let profile = load_profile(config)?;
    let n = config.n();
    let mean_offspring_matrix: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| config.lambda(j) * profile.mean_span(i))
                .collect()
        })
        .collect();
    let spectral_radius = spectral_radius_power(&mean_offspring_matrix);
    let rho = profile.total();
    Ok(StabilityReport {
        rho,
        stable: rho < 1.0,
        mean_offspring_matrix,
        spectral_radius,
    })
}

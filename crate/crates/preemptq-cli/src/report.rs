//! Report assembly: the JSON document every command emits.
//!
//! A report always echoes the fully-resolved configuration and the
//! stability analysis; depending on the command it adds per-class
//! analytic results (loads, busy means, response moments and transform
//! samples), simulation estimates, and analytic-versus-simulated
//! z-scores. Reports are deterministic given (config, seed, command).

use serde::Serialize;

use preemptq::busy::busy_mean;
use preemptq::joint::JointKind;
use preemptq::loads::{load_profile, overhead_loads, stability_report};
use preemptq::response::{
    extra_work_transform, response_moments, response_transform,
    resume_conditional_transforms,
};
use preemptq::sim::SimEstimates;
use preemptq::{Mode, Result, SystemConfig};

/// A transform value at one abscissa.
#[derive(Debug, Clone, Serialize)]
pub struct ThetaSample {
    /// Abscissa.
    pub theta: f64,
    /// Transform value.
    pub value: f64,
}

/// Response-time results of one class, or a marker explaining their
/// absence.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum ResponseSection {
    /// The system is unstable; response times do not exist.
    Marker(&'static str),
    /// Moments and transform samples.
    Ready {
        /// Raw moments, first to `m`-th.
        moments: Vec<f64>,
        /// Response transform on the report's theta grid.
        transform: Vec<ThetaSample>,
    },
}

/// Analytic results of one class.
#[derive(Debug, Clone, Serialize)]
pub struct ClassAnalysis {
    /// Class index (0 is the highest priority).
    pub class: usize,
    /// Arrival rate.
    pub lambda: f64,
    /// Original-service load.
    pub sigma: f64,
    /// Pause-overhead load.
    pub gamma: f64,
    /// Resume-overhead load.
    pub delta: f64,
    /// Total load of the class.
    pub rho: f64,
    /// Mean occupation span of one job (original service plus
    /// overheads, or including abandoned attempts in repeat modes).
    pub mean_span: f64,
    /// Expected total pause time one job triggers.
    pub mean_pause_per_job: f64,
    /// Expected total resume time one job triggers.
    pub mean_resume_per_job: f64,
    /// Mean busy period a job of this class starts, admitting only
    /// higher-priority interruptions (null when that restriction is
    /// overloaded).
    pub busy_mean: f64,
    /// Response-time results, or `"unstable"`.
    pub response: ResponseSection,
}

/// Stability analysis of the configuration.
#[derive(Debug, Clone, Serialize)]
pub struct StabilitySection {
    /// Per-class loads.
    pub rho_per_class: Vec<f64>,
    /// Total load.
    pub rho_total: f64,
    /// Spectral radius of the mean offspring matrix.
    pub spectral_radius: f64,
    /// Whether the system is stable.
    pub stable: bool,
}

/// One analytic-versus-simulated comparison.
#[derive(Debug, Clone, Serialize)]
pub struct ZRow {
    /// Class the quantity belongs to; absent for system-wide rows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<usize>,
    /// Name of the compared quantity.
    pub quantity: String,
    /// Analytic value.
    pub analytic: f64,
    /// Simulated value.
    pub simulated: f64,
    /// Standard error of the simulated value.
    pub std_error: f64,
    /// Standardized deviation.
    pub z: f64,
}

/// The `validate` command's comparison table.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationSection {
    /// Threshold on `|z|` for the run to pass.
    pub z_limit: f64,
    /// All comparisons.
    pub rows: Vec<ZRow>,
    /// Largest `|z|` over the rows.
    pub max_abs_z: f64,
    /// Whether every row is within the limit.
    pub passed: bool,
}

/// The complete report of one command invocation.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    /// The command that produced the report.
    pub command: &'static str,
    /// Configuration echo with resolved defaults.
    pub config: SystemConfig,
    /// Theta grid used for transform samples.
    pub theta_grid: Vec<f64>,
    /// Master seed of the simulation, when one ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Stability analysis.
    pub stability: StabilitySection,
    /// Per-class analytic results.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analytic: Option<Vec<ClassAnalysis>>,
    /// Simulation estimates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimEstimates>,
    /// Comparison table (validate only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationSection>,
}

/// Build the stability section.
pub fn stability_section(config: &SystemConfig) -> Result<StabilitySection> {
    let profile = load_profile(config)?;
    let report = stability_report(config)?;
    Ok(StabilitySection {
        rho_per_class: (0..config.n()).map(|k| profile.rho(k)).collect(),
        rho_total: profile.total(),
        spectral_radius: report.spectral_radius(),
        stable: report.stable(),
    })
}

/// Build the per-class analytic sections.
///
/// # Input
/// `moments` — how many response moments to extract (ignored when the
/// system is unstable); `grid` — transform abscissas.
///
/// # Output
/// One [`ClassAnalysis`] per class. On unstable systems the load and
/// busy-period figures are still reported and the response section
/// carries the `"unstable"` marker instead of numbers.
pub fn analyze_classes(
    config: &SystemConfig,
    grid: &[f64],
    moments: usize,
) -> Result<Vec<ClassAnalysis>> {
    let profile = load_profile(config)?;
    let stable = stability_report(config)?.stable();
    let mut classes = Vec::with_capacity(config.n());
    for k in 0..config.n() {
        let (pause, resume) = match config.mode() {
            Mode::PauseResume => overhead_loads(config, k)?,
            _ => (0.0, 0.0),
        };
        let response = if stable {
            let mut samples = Vec::with_capacity(grid.len());
            for &theta in grid {
                samples.push(ThetaSample {
                    theta,
                    value: response_transform(config, k, theta)?,
                });
            }
            ResponseSection::Ready {
                moments: response_moments(config, k, moments)?,
                transform: samples,
            }
        } else {
            ResponseSection::Marker("unstable")
        };
        classes.push(ClassAnalysis {
            class: k,
            lambda: config.lambda(k),
            sigma: profile.sigma(k),
            gamma: profile.gamma(k),
            delta: profile.delta(k),
            rho: profile.rho(k),
            mean_span: profile.mean_span(k),
            mean_pause_per_job: pause,
            mean_resume_per_job: resume,
            busy_mean: busy_mean(config, &JointKind::Job(k), k)?,
            response,
        });
    }
    Ok(classes)
}

/// Build the validate command's comparison table.
///
/// Pairs every simulated estimate that has an analytic counterpart
/// with that counterpart and records the z-score. Rows whose simulated
/// side is undefined (no samples) are skipped.
pub fn validation_section(
    config: &SystemConfig,
    analytic: &[ClassAnalysis],
    sim: &SimEstimates,
    z_limit: f64,
) -> Result<ValidationSection> {
    let profile = load_profile(config)?;
    let mut rows: Vec<ZRow> = Vec::new();
    let mut push = |class: Option<usize>,
                    quantity: &str,
                    target: f64,
                    estimate: &preemptq::Estimate| {
        if !estimate.value.is_finite() || !estimate.std_error.is_finite() {
            return;
        }
        rows.push(ZRow {
            class,
            quantity: quantity.to_string(),
            analytic: target,
            simulated: estimate.value,
            std_error: estimate.std_error,
            z: estimate.z_score(target),
        });
    };

    for (k, a) in analytic.iter().enumerate() {
        let c = &sim.classes[k];
        if let ResponseSection::Ready { moments, .. } = &a.response {
            push(Some(k), "response_mean", moments[0], &c.response_mean);
            if moments.len() > 1 {
                push(
                    Some(k),
                    "response_second_moment",
                    moments[1],
                    &c.response_second_moment,
                );
            }
        }
        push(
            Some(k),
            "mean_pause_per_job",
            a.mean_pause_per_job,
            &c.mean_pause_per_job,
        );
        push(
            Some(k),
            "mean_resume_per_job",
            a.mean_resume_per_job,
            &c.mean_resume_per_job,
        );
        push(
            Some(k),
            "mean_effective_size",
            a.mean_span,
            &c.mean_effective_size,
        );
        push(Some(k), "original_fraction", a.sigma, &c.original_fraction);
        push(Some(k), "pause_fraction", a.gamma, &c.pause_fraction);
        push(Some(k), "resume_fraction", a.delta, &c.resume_fraction);
        for (j, est) in c.arrivals_per_time.iter().enumerate() {
            push(
                Some(k),
                &format!("arrival_rate_of_class_{j}"),
                config.lambda(j),
                est,
            );
        }
        if config.mode() == Mode::PauseResume {
            if c.chains > 0 {
                let success =
                    resume_conditional_transforms(config, k)?.success_prob();
                push(Some(k), "resume_success_prob", success, &c.resume_success_prob);
            }
            if stability_report(config)?.stable() {
                for te in &c.early_arrivals.transform {
                    let target = extra_work_transform(config, k, te.theta)?;
                    push(
                        Some(k),
                        &format!("early_arrival_transform_at_{}", te.theta),
                        target,
                        &te.estimate,
                    );
                }
            }
        }
    }

    push(None, "busy_fraction", profile.total(), &sim.busy_fraction);
    push(
        None,
        "idle_fraction",
        1.0 - profile.total(),
        &sim.idle_fraction,
    );
    let total = config.lambda_total();
    let mut busy = 0.0;
    for c in 0..config.n() {
        busy += config.lambda(c) / total
            * busy_mean(config, &JointKind::Job(c), config.n())?;
    }
    if busy.is_finite() {
        push(None, "mean_busy_period", busy, &sim.mean_busy_period);
        push(
            None,
            "mean_cycle_length",
            busy + 1.0 / total,
            &sim.mean_cycle_length,
        );
    }

    let max_abs_z = rows
        .iter()
        .map(|r| r.z.abs())
        .fold(0.0_f64, f64::max);
    Ok(ValidationSection {
        z_limit,
        passed: max_abs_z <= z_limit,
        rows,
        max_abs_z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use preemptq::sim::{simulate, SimOpts};
    use preemptq::{ClassSpec, Distribution};

    fn two_class() -> SystemConfig {
        SystemConfig::new(
            Mode::PauseResume,
            vec![
                ClassSpec::new(0.2, Distribution::exponential(2.0).unwrap()),
                ClassSpec::new(0.5, Distribution::exponential(1.0).unwrap())
                    .with_overheads(
                        Distribution::deterministic(0.1).unwrap(),
                        Distribution::exponential(10.0).unwrap(),
                    ),
            ],
        )
        .unwrap()
    }

    #[test]
    fn analysis_reports_moments_and_transforms_when_stable() {
        let cfg = two_class();
        let grid = [0.5, 1.0];
        let classes = analyze_classes(&cfg, &grid, 2).unwrap();
        assert_eq!(classes.len(), 2);
        for (k, c) in classes.iter().enumerate() {
            assert_eq!(c.class, k);
            match &c.response {
                ResponseSection::Ready { moments, transform } => {
                    assert_eq!(moments.len(), 2);
                    assert_eq!(transform.len(), 2);
                    assert!(moments[0] > 0.0);
                    assert!(transform[0].value > transform[1].value);
                }
                ResponseSection::Marker(_) => panic!("stable config"),
            }
        }
        // The high class pays no overheads.
        assert_eq!(classes[0].mean_pause_per_job, 0.0);
        assert!(classes[1].mean_pause_per_job > 0.0);
    }

    #[test]
    fn unstable_analysis_keeps_loads_and_marks_response() {
        let cfg = SystemConfig::new(
            Mode::PauseResume,
            vec![ClassSpec::new(
                1.5,
                Distribution::exponential(1.0).unwrap(),
            )],
        )
        .unwrap();
        let stability = stability_section(&cfg).unwrap();
        assert!(!stability.stable);
        assert!(stability.rho_total > 1.0);
        let classes = analyze_classes(&cfg, &[1.0], 2).unwrap();
        assert!(classes[0].sigma > 1.0);
        let json = serde_json::to_value(&classes[0].response).unwrap();
        assert_eq!(json, serde_json::json!("unstable"));
    }

    #[test]
    fn validation_rows_pair_every_estimate_with_its_target() {
        let cfg = two_class();
        let opts = SimOpts {
            seed: 1,
            min_busy_cycles: 5_000,
            theta_grid: vec![0.5, 1.0],
            ..SimOpts::default()
        };
        let sim = simulate(&cfg, &opts).unwrap();
        let analytic = analyze_classes(&cfg, &opts.theta_grid, 2).unwrap();
        let section =
            validation_section(&cfg, &analytic, &sim, 4.0).unwrap();
        assert!(section.rows.len() > 20);
        assert!(section.max_abs_z.is_finite());
        for row in &section.rows {
            assert!(row.z.abs() <= section.max_abs_z);
            assert!(row.std_error.is_finite());
        }
        // A healthy run at 5k cycles passes comfortably at the limit.
        assert!(section.passed, "max |z| = {}", section.max_abs_z);
        let quantities: Vec<&str> =
            section.rows.iter().map(|r| r.quantity.as_str()).collect();
        assert!(quantities.contains(&"response_mean"));
        assert!(quantities.contains(&"resume_success_prob"));
        assert!(quantities.contains(&"mean_busy_period"));
    }
}

//! Parameter sweeps: vary one scalar field of the configuration over
//! a grid and tabulate metrics as CSV.
//!
//! The swept field is addressed by a JSON path into the configuration
//! document, either in JSON Pointer form (`/classes/1/lambda`) or
//! dotted form (`classes.1.lambda`). Each grid point re-validates the
//! modified document, so sweeping across a validity boundary fails
//! with the usual field-named error. Grid points evaluate
//! independently (and concurrently, when the library's parallel
//! feature is on); the CSV rows always come out in grid order.

use preemptq::exec::try_map_collect;
use preemptq::loads::{load_profile, stability_report};
use preemptq::response::response_moments;
use preemptq::{Error, Result, SystemConfig};

/// A metric column of the sweep table.
///
/// Per-class metrics name the class after a colon, e.g.
/// `mean_response:1`.
#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    /// Total load of the system.
    RhoTotal,
    /// Stability indicator (1 stable, 0 unstable).
    Stable,
    /// Spectral radius of the mean offspring matrix.
    SpectralRadius,
    /// Load of one class.
    Rho(usize),
    /// Mean occupation span of one class.
    MeanSpan(usize),
    /// Mean response time of one class (NaN when unstable).
    MeanResponse(usize),
    /// Second response moment of one class (NaN when unstable).
    SecondResponse(usize),
}

impl Metric {
    /// Parse a metric name.
    ///
    /// # Input
    /// One of `rho_total`, `stable`, `spectral_radius`, or a per-class
    /// name `rho:<k>`, `mean_span:<k>`, `mean_response:<k>`,
    /// `second_response:<k>`.
    ///
    /// # Output
    /// The metric, or an [`Error::InvalidParameter`] naming the
    /// unknown metric.
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "rho_total" => return Ok(Metric::RhoTotal),
            "stable" => return Ok(Metric::Stable),
            "spectral_radius" => return Ok(Metric::SpectralRadius),
            _ => {}
        }
        if let Some((base, class)) = name.split_once(':') {
            let k: usize = class.parse().map_err(|_| {
                Error::InvalidParameter(format!(
                    "metric {name:?}: class index {class:?} is not a number"
                ))
            })?;
            return match base {
                "rho" => Ok(Metric::Rho(k)),
                "mean_span" => Ok(Metric::MeanSpan(k)),
                "mean_response" => Ok(Metric::MeanResponse(k)),
                "second_response" => Ok(Metric::SecondResponse(k)),
                _ => Err(Error::InvalidParameter(format!(
                    "unknown per-class metric {base:?}"
                ))),
            };
        }
        Err(Error::InvalidParameter(format!(
            "unknown metric {name:?}; expected rho_total, stable, \
             spectral_radius, or rho:<k>, mean_span:<k>, mean_response:<k>, \
             second_response:<k>"
        )))
    }

    /// The column header of the metric (its canonical name).
    pub fn name(&self) -> String {
        match self {
            Metric::RhoTotal => "rho_total".into(),
            Metric::Stable => "stable".into(),
            Metric::SpectralRadius => "spectral_radius".into(),
            Metric::Rho(k) => format!("rho:{k}"),
            Metric::MeanSpan(k) => format!("mean_span:{k}"),
            Metric::MeanResponse(k) => format!("mean_response:{k}"),
            Metric::SecondResponse(k) => format!("second_response:{k}"),
        }
    }
}

/// Reject a class index outside the configuration.
fn check_class(config: &SystemConfig, k: usize) -> Result<()> {
    if k >= config.n() {
        return Err(Error::InvalidParameter(format!(
            "metric names class {k}, but the config has {} classes",
            config.n()
        )));
    }
    Ok(())
}

/// Evaluate every metric on one configuration.
fn evaluate(config: &SystemConfig, metrics: &[Metric]) -> Result<Vec<f64>> {
    let profile = load_profile(config)?;
    let report = stability_report(config)?;
    let mut row = Vec::with_capacity(metrics.len());
    for metric in metrics {
        let value = match metric {
            Metric::RhoTotal => profile.total(),
            Metric::Stable => f64::from(u8::from(report.stable())),
            Metric::SpectralRadius => report.spectral_radius(),
            Metric::Rho(k) => {
                check_class(config, *k)?;
                profile.rho(*k)
            }
            Metric::MeanSpan(k) => {
                check_class(config, *k)?;
                profile.mean_span(*k)
            }
            Metric::MeanResponse(k) | Metric::SecondResponse(k) => {
                check_class(config, *k)?;
                if report.stable() {
                    let order = match metric {
                        Metric::MeanResponse(_) => 1,
                        _ => 2,
                    };
                    *response_moments(config, *k, order)?
                        .last()
                        .expect("requested at least one moment")
                } else {
                    f64::NAN
                }
            }
        };
        row.push(value);
    }
    Ok(row)
}

/// Parse an `a:b:steps` grid description into its points.
///
/// # Output
/// `steps` evenly spaced values from `a` to `b` inclusive (`steps` of
/// 1 yields just `a`), or an error describing the malformed part.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, steps] = parts.as_slice() else {
        return Err(Error::InvalidParameter(format!(
            "grid {text:?} must have the form a:b:steps"
        )));
    };
    let a: f64 = a.parse().map_err(|_| {
        Error::InvalidParameter(format!("grid start {a:?} is not a number"))
    })?;
    let b: f64 = b.parse().map_err(|_| {
        Error::InvalidParameter(format!("grid end {b:?} is not a number"))
    })?;
    let steps: usize = steps.parse().map_err(|_| {
        Error::InvalidParameter(format!("grid steps {steps:?} is not a count"))
    })?;
    if steps == 0 {
        return Err(Error::InvalidParameter(
            "grid needs at least one step".into(),
        ));
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter(
            "grid endpoints must be finite".into(),
        ));
    }
    if steps == 1 {
        return Ok(vec![a]);
    }
    Ok((0..steps)
        .map(|i| a + (b - a) * i as f64 / (steps - 1) as f64)
        .collect())
}

/// Normalize a parameter path to JSON Pointer form.
fn to_pointer(param: &str) -> String {
    if param.starts_with('/') {
        param.to_string()
    } else {
        format!("/{}", param.replace('.', "/"))
    }
}

/// Run a sweep and render it as CSV.
///
/// # Input
/// `document` — the configuration as parsed JSON; `param` — path of
/// the swept scalar (JSON Pointer or dotted); `grid` — values to
/// assign; `metrics` — columns to tabulate.
///
/// # Output
/// CSV text with a header row (the parameter path, then the metric
/// names) and one row per grid point, in grid order. Unstable points
/// render response metrics as `NaN` rather than failing; structurally
/// invalid points (a negative rate, say) fail with the validation
/// error.
pub fn run_sweep(
    document: &serde_json::Value,
    param: &str,
    grid: &[f64],
    metrics: &[Metric],
) -> Result<String> {
    let pointer = to_pointer(param);
    if document.pointer(&pointer).is_none() {
        return Err(Error::InvalidParameter(format!(
            "parameter path {param:?} does not exist in the config"
        )));
    }
    let rows = try_map_collect(grid, |&value| {
        let mut doc = document.clone();
        let slot = doc
            .pointer_mut(&pointer)
            .expect("pointer checked before the sweep");
        *slot = serde_json::Value::from(value);
        let config = SystemConfig::from_json_value(&doc)?;
        evaluate(&config, metrics)
    })?;

    let mut csv = String::new();
    csv.push_str(&param.replace(',', "_"));
    for metric in metrics {
        csv.push(',');
        csv.push_str(&metric.name());
    }
    csv.push('\n');
    for (value, row) in grid.iter().zip(&rows) {
        csv.push_str(&value.to_string());
        for cell in row {
            csv.push(',');
            csv.push_str(&cell.to_string());
        }
        csv.push('\n');
    }
    Ok(csv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn document() -> serde_json::Value {
        serde_json::json!({
            "mode": "pause_resume",
            "classes": [
                {"lambda": 0.2, "size": {"dist": "exp", "params": {"rate": 2.0}}},
                {"lambda": 0.5, "size": {"dist": "exp", "params": {"rate": 1.0}},
                 "pause": {"dist": "det", "params": {"value": 0.1}},
                 "resume": {"dist": "exp", "params": {"rate": 10.0}}},
            ],
        })
    }

    #[test]
    fn grids_are_inclusive_and_evenly_spaced() {
        assert_eq!(parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("2:2:1").unwrap(), vec![2.0]);
        let five = parse_grid("1:5:5").unwrap();
        assert_eq!(five, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("a:2:3").is_err());
        assert!(parse_grid("1:2:0").is_err());
    }

    #[test]
    fn metric_names_round_trip_through_parsing() {
        for name in [
            "rho_total",
            "stable",
            "spectral_radius",
            "rho:0",
            "mean_span:2",
            "mean_response:1",
            "second_response:0",
        ] {
            assert_eq!(Metric::parse(name).unwrap().name(), name);
        }
        assert!(Metric::parse("latency").is_err());
        assert!(Metric::parse("rho:x").is_err());
    }

    #[test]
    fn sweep_rows_flip_stability_where_the_load_crosses_one() {
        let metrics = [
            Metric::parse("rho_total").unwrap(),
            Metric::parse("stable").unwrap(),
            Metric::parse("mean_response:1").unwrap(),
        ];
        // The low class's rate swings the total load across 1.
        let grid = parse_grid("0.1:1.0:10").unwrap();
        let csv = run_sweep(&document(), "classes.1.lambda", &grid, &metrics)
            .unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "classes.1.lambda,rho_total,stable,mean_response:1"
        );
        let mut last_stable = 1.0;
        for line in lines {
            let cells: Vec<f64> = line
                .split(',')
                .map(|c| c.parse().unwrap())
                .collect();
            assert_eq!(cells.len(), 4);
            let (rho, stable, response) = (cells[1], cells[2], cells[3]);
            assert_eq!(stable == 1.0, rho < 1.0, "row: {line}");
            assert!(
                stable <= last_stable,
                "stability must flip at most once downward"
            );
            last_stable = stable;
            assert_eq!(response.is_nan(), stable == 0.0, "row: {line}");
        }
    }

    #[test]
    fn pointer_and_dotted_paths_address_the_same_field() {
        let metrics = [Metric::parse("rho_total").unwrap()];
        let grid = [0.3];
        let dotted =
            run_sweep(&document(), "classes.0.lambda", &grid, &metrics)
                .unwrap();
        let pointer =
            run_sweep(&document(), "/classes/0/lambda", &grid, &metrics)
                .unwrap();
        let dotted_row = dotted.lines().nth(1).unwrap();
        let pointer_row = pointer.lines().nth(1).unwrap();
        assert_eq!(
            dotted_row.split(',').nth(1).unwrap(),
            pointer_row.split(',').nth(1).unwrap()
        );
        let err = run_sweep(&document(), "classes.9.lambda", &grid, &metrics)
            .unwrap_err();
        assert!(err.to_string().contains("classes.9.lambda"));
    }

    #[test]
    fn invalid_grid_points_fail_with_field_named_errors() {
        let metrics = [Metric::parse("rho_total").unwrap()];
        let err = run_sweep(
            &document(),
            "classes.1.lambda",
            &[-0.5],
            &metrics,
        )
        .unwrap_err();
        assert!(
            err.to_string().contains("classes[1].lambda"),
            "got: {err}"
        );
    }
}

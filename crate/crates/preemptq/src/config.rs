//! System configuration: class parameters, priority order and preemption
//! mode.
//!
//! Classes are indexed from zero and the index **is** the priority: class 0
//! preempts everything, class `n-1` preempts nothing. Within a class,
//! service is first-come first-served.

use crate::durations::Distribution;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// What happens to a preempted job's progress.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Progress is kept. Interrupting a job costs a pause overhead and
    /// continuing it costs a resume overhead; both overheads run to
    /// completion even if higher-priority work arrives meanwhile, and a
    /// resume during which a higher-priority job arrived has not helped —
    /// the interrupted job needs another pause/resume round before
    /// service continues.
    PauseResume,
    /// Progress is lost; the job restarts later with a fresh size drawn
    /// from its class distribution. No overheads.
    RepeatDifferent,
    /// Progress is lost; the job restarts later with the same size it had
    /// originally. No overheads.
    RepeatIdentical,
}

/// Arrival rate, size distribution and overhead distributions of one class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassSpec {
    /// Poisson arrival rate, jobs per time unit.
    pub lambda: f64,
    /// Job size (service requirement) distribution.
    pub size: Distribution,
    /// Pause overhead incurred when a job of this class is preempted.
    pub pause: Distribution,
    /// Resume overhead incurred when a preempted job of this class is
    /// picked up again.
    pub resume: Distribution,
}

impl ClassSpec {
    /// A class with the given rate and size and no overheads.
    pub fn new(lambda: f64, size: Distribution) -> Self {
        let zero = Distribution::deterministic(0.0).expect("det(0) is valid");
        Self {
            lambda,
            size,
            pause: zero.clone(),
            resume: zero,
        }
    }

    /// Replace the overhead distributions.
    pub fn with_overheads(mut self, pause: Distribution, resume: Distribution) -> Self {
        self.pause = pause;
        self.resume = resume;
        self
    }
}

/// A complete system description: ordered classes plus preemption mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemConfig {
    mode: Mode,
    classes: Vec<ClassSpec>,
}

impl SystemConfig {
    /// Validate and build a configuration.
    ///
    /// # Input
    /// `mode` — preemption mode; `classes` — at least one class in
    /// priority order (index 0 is highest).
    ///
    /// # Output
    /// The validated configuration, or an error naming the offending
    /// field: rates must be positive and finite, size means positive; in
    /// the repeat modes overheads must be absent (point mass at zero) and
    /// repeat-identical additionally requires discrete size
    /// distributions.
    pub fn new(mode: Mode, classes: Vec<ClassSpec>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::InvalidParameter(
                "classes: at least one class is required".into(),
            ));
        }
        for (i, c) in classes.iter().enumerate() {
            if !(c.lambda.is_finite() && c.lambda > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "classes[{i}].lambda = {} must be positive and finite",
                    c.lambda
                )));
            }
            if c.size.mean() <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "classes[{i}].size: mean must be positive"
                )));
            }
            if mode != Mode::PauseResume {
                for (field, dist) in [("pause", &c.pause), ("resume", &c.resume)] {
                    if !dist.is_zero() {
                        return Err(Error::InvalidParameter(format!(
                            "classes[{i}].{field}: overheads must be absent (or a \
                             point mass at zero) outside pause_resume mode"
                        )));
                    }
                }
            }
            if mode == Mode::RepeatIdentical && !c.size.is_discrete() {
                return Err(Error::UnsupportedConfiguration(format!(
                    "classes[{i}].size: repeat_identical mode requires a discrete \
                     size distribution (det or pointmix)"
                )));
            }
        }
        Ok(Self { mode, classes })
    }

    /// Number of classes.
    pub fn n(&self) -> usize {
        self.classes.len()
    }

    /// Preemption mode.
    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// All classes, in priority order.
    pub fn classes(&self) -> &[ClassSpec] {
        &self.classes
    }

    /// One class by index.
    pub fn class(&self, k: usize) -> &ClassSpec {
        &self.classes[k]
    }

    /// Error unless `k` is a valid class index.
    pub(crate) fn check_class(&self, k: usize) -> Result<()> {
        if k < self.n() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "class index {k} out of range for {} classes",
                self.n()
            )))
        }
    }

    /// Arrival rate of class `i`.
    pub fn lambda(&self, i: usize) -> f64 {
        self.classes[i].lambda
    }

    /// Sum of arrival rates of classes with higher priority than `k`,
    /// `Σ_{i<k} λ_i` (zero for `k = 0`).
    pub fn lambda_below(&self, k: usize) -> f64 {
        self.classes[..k].iter().map(|c| c.lambda).sum()
    }

    /// Sum of arrival rates over `a ≤ i < b`.
    pub fn lambda_range(&self, a: usize, b: usize) -> f64 {
        self.classes[a..b].iter().map(|c| c.lambda).sum()
    }

    /// Total arrival rate.
    pub fn lambda_total(&self) -> f64 {
        self.lambda_below(self.n())
    }

    /// Parse from the JSON config representation.
    ///
    /// Expected shape:
    /// ```json
    /// {
    ///   "mode": "pause_resume",
    ///   "classes": [
    ///     {"lambda": 0.2, "size": {"dist": "exp", "params": {"rate": 2.0}},
    ///      "pause": {"dist": "det", "params": {"value": 0.1}},
    ///      "resume": {"dist": "exp", "params": {"rate": 10.0}}}
    ///   ]
    /// }
    /// ```
    /// `mode` defaults to `pause_resume`; `pause` and `resume` default to
    /// a point mass at zero. Errors name the offending field, e.g.
    /// `classes[1].lambda`.
    pub fn from_json_value(v: &serde_json::Value) -> Result<Self> {
        let obj = v.as_object().ok_or_else(|| {
            Error::InvalidParameter("config: expected a JSON object".into())
        })?;
        for key in obj.keys() {
            if key != "mode" && key != "classes" {
                return Err(Error::InvalidParameter(format!(
                    "config: unknown key \"{key}\""
                )));
            }
        }
        let mode = match obj.get("mode") {
            None => Mode::PauseResume,
            Some(m) => match m.as_str() {
                Some("pause_resume") => Mode::PauseResume,
                Some("repeat_different") => Mode::RepeatDifferent,
                Some("repeat_identical") => Mode::RepeatIdentical,
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "mode: expected \"pause_resume\", \"repeat_different\" \
                         or \"repeat_identical\", got {m}"
                    )))
                }
            },
        };
        let raw_classes = obj
            .get("classes")
            .and_then(|c| c.as_array())
            .ok_or_else(|| {
                Error::InvalidParameter("classes: missing or not an array".into())
            })?;
        let mut classes = Vec::with_capacity(raw_classes.len());
        for (i, rc) in raw_classes.iter().enumerate() {
            let co = rc.as_object().ok_or_else(|| {
                Error::InvalidParameter(format!("classes[{i}]: expected an object"))
            })?;
            for key in co.keys() {
                if !["lambda", "size", "pause", "resume"].contains(&key.as_str()) {
                    return Err(Error::InvalidParameter(format!(
                        "classes[{i}]: unknown key \"{key}\""
                    )));
                }
            }
            let lambda = co.get("lambda").and_then(|x| x.as_f64()).ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "classes[{i}].lambda: missing or not a number"
                ))
            })?;
            let size_v = co.get("size").ok_or_else(|| {
                Error::InvalidParameter(format!("classes[{i}].size: missing"))
            })?;
            let size =
                Distribution::from_config_value(size_v, &format!("classes[{i}].size"))?;
            let overhead = |field: &str| -> Result<Distribution> {
                match co.get(field) {
                    None => Ok(Distribution::deterministic(0.0).expect("det(0)")),
                    Some(v) => Distribution::from_config_value(
                        v,
                        &format!("classes[{i}].{field}"),
                    ),
                }
            };
            classes.push(ClassSpec {
                lambda,
                size,
                pause: overhead("pause")?,
                resume: overhead("resume")?,
            });
        }
        Self::new(mode, classes)
    }

    /// Parse from JSON text; see [`SystemConfig::from_json_value`].
    pub fn from_json_str(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| {
            Error::InvalidParameter(format!("config is not valid JSON: {e}"))
        })?;
        Self::from_json_value(&v)
    }
}

impl<'de> Deserialize<'de> for SystemConfig {
    fn deserialize<D: serde::Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(d)?;
        Self::from_json_value(&value).map_err(serde::de::Error::custom)
    }
}

//! Duration distributions with closed-form Laplace–Stieltjes transforms.
//!
//! Every random duration in the model — job sizes, pause overheads, resume
//! overheads — is described by a [`Distribution`]: a family tag plus
//! precomputed first and second moments. Only families with closed-form
//! transforms are supported, because the analytical pipeline evaluates
//! `E[e^{-θV}]` and its derivative exactly rather than numerically.
//!
//! Besides the plain transform value, each family also exposes the
//! *complement* `1 − E[e^{-θV}]` in a cancellation-free form
//! ([`Distribution::one_minus_lst`]). Downstream code that divides such
//! complements by small arguments (excess transforms, finite-difference
//! moment extraction near zero) relies on these forms staying accurate to
//! machine precision for arbitrarily small `θ`; the naive `1.0 - lst(θ)`
//! loses most significant digits there.

use crate::error::{Error, Result};
use rand::Rng;
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Distribution family with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Exponential with the given rate; mean `1/rate`.
    Exponential { rate: f64 },
    /// Point mass at `value`. `Deterministic(0)` is the "no overhead"
    /// distribution: its transform is identically one.
    Deterministic { value: f64 },
    /// Sum of `shape` independent exponentials of the given rate.
    Erlang { shape: u32, rate: f64 },
    /// Mixture of exponentials: branch `i` is chosen with probability
    /// `probs[i]` and is exponential with rate `rates[i]`.
    HyperExponential { probs: Vec<f64>, rates: Vec<f64> },
    /// Uniform on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    /// Discrete mixture of point masses: value `values[i]` with
    /// probability `probs[i]`.
    PointMixture { probs: Vec<f64>, values: Vec<f64> },
}

/// A nonnegative random duration with closed-form transform and moments.
///
/// Values are immutable after construction and safe to share between
/// threads; all evaluation methods take `&self`.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    family: Family,
    mean: f64,
    second_moment: f64,
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}

fn check_mixture(probs: &[f64], label: &str) -> Result<()> {
    require(!probs.is_empty(), || format!("{label}: empty probability vector"))?;
    for (i, &p) in probs.iter().enumerate() {
        require(p.is_finite() && p > 0.0, || {
            format!("{label}[{i}] = {p} must be a positive probability")
        })?;
    }
    let sum: f64 = probs.iter().sum();
    require((sum - 1.0).abs() <= 1e-9, || {
        format!("{label} sums to {sum}, expected 1")
    })
}

impl Distribution {
    /// Exponential distribution with the given positive rate.
    pub fn exponential(rate: f64) -> Result<Self> {
        require(rate.is_finite() && rate > 0.0, || {
            format!("exponential rate = {rate} must be positive and finite")
        })?;
        Ok(Self {
            family: Family::Exponential { rate },
            mean: 1.0 / rate,
            second_moment: 2.0 / (rate * rate),
        })
    }

    /// Point mass at `value ≥ 0`. Zero is allowed and models the absence
    /// of an overhead.
    pub fn deterministic(value: f64) -> Result<Self> {
        require(value.is_finite() && value >= 0.0, || {
            format!("deterministic value = {value} must be nonnegative and finite")
        })?;
        Ok(Self {
            family: Family::Deterministic { value },
            mean: value,
            second_moment: value * value,
        })
    }

    /// Erlang distribution: sum of `shape ≥ 1` exponentials of rate `rate`.
    pub fn erlang(shape: u32, rate: f64) -> Result<Self> {
        require(shape >= 1, || format!("erlang shape = {shape} must be at least 1"))?;
        require(rate.is_finite() && rate > 0.0, || {
            format!("erlang rate = {rate} must be positive and finite")
        })?;
        let k = f64::from(shape);
        Ok(Self {
            family: Family::Erlang { shape, rate },
            mean: k / rate,
            second_moment: k * (k + 1.0) / (rate * rate),
        })
    }

    /// Hyperexponential mixture: probabilities must be positive and sum to
    /// one (within 1e-9); rates must all be positive.
    pub fn hyper_exponential(probs: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        check_mixture(&probs, "hyperexp probs")?;
        require(probs.len() == rates.len(), || {
            format!(
                "hyperexp has {} probs but {} rates",
                probs.len(),
                rates.len()
            )
        })?;
        for (i, &r) in rates.iter().enumerate() {
            require(r.is_finite() && r > 0.0, || {
                format!("hyperexp rates[{i}] = {r} must be positive and finite")
            })?;
        }
        let mean = probs.iter().zip(&rates).map(|(p, r)| p / r).sum();
        let second_moment = probs
            .iter()
            .zip(&rates)
            .map(|(p, r)| 2.0 * p / (r * r))
            .sum();
        Ok(Self {
            family: Family::HyperExponential { probs, rates },
            mean,
            second_moment,
        })
    }

    /// Uniform distribution on `[lo, hi]` with `0 ≤ lo < hi`.
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        require(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi, || {
            format!("uniform bounds [{lo}, {hi}] must satisfy 0 <= lo < hi")
        })?;
        Ok(Self {
            family: Family::Uniform { lo, hi },
            mean: 0.5 * (lo + hi),
            second_moment: (lo * lo + lo * hi + hi * hi) / 3.0,
        })
    }

    /// Discrete mixture of point masses at `values` with probabilities
    /// `probs` (positive, summing to one within 1e-9).
    pub fn point_mixture(probs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_mixture(&probs, "pointmix probs")?;
        require(probs.len() == values.len(), || {
            format!(
                "pointmix has {} probs but {} values",
                probs.len(),
                values.len()
            )
        })?;
        for (i, &v) in values.iter().enumerate() {
            require(v.is_finite() && v >= 0.0, || {
                format!("pointmix values[{i}] = {v} must be nonnegative and finite")
            })?;
        }
        let mean = probs.iter().zip(&values).map(|(p, v)| p * v).sum();
        let second_moment = probs.iter().zip(&values).map(|(p, v)| p * v * v).sum();
        Ok(Self {
            family: Family::PointMixture { probs, values },
            mean,
            second_moment,
        })
    }

    /// The family tag and parameters.
    pub fn family(&self) -> &Family {
        &self.family
    }

    /// First moment `E[V]`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Second moment `E[V²]`.
    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    /// Laplace–Stieltjes transform `E[e^{-θV}]` for `θ ≥ 0`.
    ///
    /// # Input
    /// `theta` — transform argument, must be nonnegative and finite.
    ///
    /// # Output
    /// A value in `(0, 1]`; exactly `1` at `θ = 0`.
    ///
    /// # Examples
    /// ```
    /// use preemptq::Distribution;
    /// let exp = Distribution::exponential(1.0).unwrap();
    /// assert_eq!(exp.lst(1.0).unwrap(), 0.5);
    /// let erl = Distribution::erlang(2, 2.0).unwrap();
    /// assert!((erl.lst(2.0).unwrap() - 0.25).abs() < 1e-15);
    /// ```
    pub fn lst(&self, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        Ok(self.lst_inner(theta))
    }

    /// Derivative of the transform, `d/dθ E[e^{-θV}]`, for `θ ≥ 0`.
    ///
    /// Always nonpositive; at `θ = 0` equals `-mean`.
    ///
    /// # Examples
    /// ```
    /// use preemptq::Distribution;
    /// let exp = Distribution::exponential(10.0).unwrap();
    /// let expect = -10.0 / (10.2_f64 * 10.2);
    /// assert!((exp.lst_deriv(0.2).unwrap() - expect).abs() < 1e-15);
    /// ```
    pub fn lst_deriv(&self, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        Ok(self.lst_deriv_inner(theta))
    }

    fn check_theta(&self, theta: f64) -> Result<()> {
        if theta.is_finite() && theta >= 0.0 {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "transform argument theta = {theta} must be nonnegative and finite"
            )))
        }
    }

    pub(crate) fn lst_inner(&self, theta: f64) -> f64 {
        if theta == 0.0 {
            return 1.0;
        }
        match &self.family {
            Family::Exponential { rate } => rate / (rate + theta),
            Family::Deterministic { value } => (-theta * value).exp(),
            Family::Erlang { shape, rate } => {
                (-f64::from(*shape) * (theta / rate).ln_1p()).exp()
            }
            Family::HyperExponential { probs, rates } => probs
                .iter()
                .zip(rates)
                .map(|(p, r)| p * r / (r + theta))
                .sum(),
            Family::Uniform { lo, hi } => {
                (-theta * lo).exp() * em1(theta * (hi - lo))
            }
            Family::PointMixture { probs, values } => probs
                .iter()
                .zip(values)
                .map(|(p, v)| p * (-theta * v).exp())
                .sum(),
        }
    }

    /// `1 − E[e^{-θV}]` evaluated without cancellation.
    ///
    /// Relative accuracy is maintained even for `θ` far below machine
    /// epsilon relative to the duration scale, where `1.0 - lst(θ)` would
    /// lose all precision.
    pub(crate) fn one_minus_lst(&self, theta: f64) -> f64 {
        if theta == 0.0 {
            return 0.0;
        }
        match &self.family {
            Family::Exponential { rate } => theta / (rate + theta),
            Family::Deterministic { value } => -(-theta * value).exp_m1(),
            Family::Erlang { shape, rate } => {
                -(-f64::from(*shape) * (theta / rate).ln_1p()).exp_m1()
            }
            Family::HyperExponential { probs, rates } => probs
                .iter()
                .zip(rates)
                .map(|(p, r)| p * theta / (r + theta))
                .sum(),
            Family::Uniform { lo, hi } => {
                let head = -(-theta * lo).exp_m1();
                head + (-theta * lo).exp() * one_minus_em1(theta * (hi - lo))
            }
            Family::PointMixture { probs, values } => probs
                .iter()
                .zip(values)
                .map(|(p, v)| -p * (-theta * v).exp_m1())
                .sum(),
        }
    }

    pub(crate) fn lst_deriv_inner(&self, theta: f64) -> f64 {
        match &self.family {
            Family::Exponential { rate } => {
                let d = rate + theta;
                -rate / (d * d)
            }
            Family::Deterministic { value } => -value * (-theta * value).exp(),
            Family::Erlang { shape, rate } => {
                let k = f64::from(*shape);
                -(k / rate) * (-(k + 1.0) * (theta / rate).ln_1p()).exp()
            }
            Family::HyperExponential { probs, rates } => probs
                .iter()
                .zip(rates)
                .map(|(p, r)| {
                    let d = r + theta;
                    -p * r / (d * d)
                })
                .sum(),
            Family::Uniform { lo, hi } => {
                let w = hi - lo;
                let e = (-theta * lo).exp();
                e * (w * em1_deriv(theta * w) - lo * em1(theta * w))
            }
            Family::PointMixture { probs, values } => probs
                .iter()
                .zip(values)
                .map(|(p, v)| -p * v * (-theta * v).exp())
                .sum(),
        }
    }

    /// Divided difference of the transform, `(Ṽ(u) - Ṽ(v))/(v - u)`,
    /// evaluated without the cancellation the literal quotient suffers
    /// when `u` and `v` are close.
    ///
    /// Defined for any `u, v ≥ 0` including `u = v`, where it equals
    /// `-Ṽ'(u)`. The value is always nonnegative. Every family except
    /// the uniform has an exact rearranged form; the uniform combines a
    /// product rule over its factor decomposition with a stable divided
    /// difference of `(1-e^{-x})/x`.
    pub(crate) fn lst_divided_difference(&self, u: f64, v: f64) -> f64 {
        if u == v {
            return -self.lst_deriv_inner(u);
        }
        // The quotient is symmetric in (u, v); order the arguments so the
        // rearranged forms below factor out the larger exponential.
        let (u, v) = if u < v { (u, v) } else { (v, u) };
        match &self.family {
            Family::Exponential { rate } => rate / ((rate + u) * (rate + v)),
            Family::Deterministic { value } => {
                (-u * value).exp() * value * em1((v - u) * value)
            }
            Family::Erlang { shape, rate } => {
                // (rᵤᵏ - rᵥᵏ)/(v-u) with r = rate/(rate+·); the power
                // difference factors through Σ rᵤ^m rᵥ^{k-1-m}.
                let ru = rate / (rate + u);
                let rv = rate / (rate + v);
                let mut sum = 0.0;
                let mut pu = 1.0;
                let k = *shape as usize;
                for m in 0..k {
                    sum += pu * rv.powi((k - 1 - m) as i32);
                    pu *= ru;
                }
                ru * rv / rate * sum
            }
            Family::HyperExponential { probs, rates } => probs
                .iter()
                .zip(rates)
                .map(|(p, r)| p * r / ((r + u) * (r + v)))
                .sum(),
            Family::Uniform { lo, hi } => {
                // Ṽ(y) = e^{-y·lo}·em1(y·w): product rule over divided
                // differences of the two factors.
                let w = hi - lo;
                let dd_head = (-u * lo).exp() * lo * em1((v - u) * lo);
                let dd_tail = em1_divided_difference(u * w, v * w);
                (-u * lo).exp() * w * dd_tail + em1(v * w) * dd_head
            }
            Family::PointMixture { probs, values } => probs
                .iter()
                .zip(values)
                .map(|(p, s)| p * (-u * s).exp() * s * em1((v - u) * s))
                .sum(),
        }
    }

    /// One independent draw from the distribution.
    ///
    /// # Input
    /// `rng` — any random source; callers that need reproducibility pass a
    /// seeded generator.
    ///
    /// # Output
    /// A nonnegative duration; the empirical mean over many draws
    /// converges to [`Distribution::mean`].
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.family {
            Family::Exponential { rate } => sample_exp(rng, *rate),
            Family::Deterministic { value } => *value,
            Family::Erlang { shape, rate } => {
                let mut acc = 0.0;
                for _ in 0..*shape {
                    acc += sample_exp(rng, *rate);
                }
                acc
            }
            Family::HyperExponential { probs, rates } => {
                let i = pick_index(rng, probs);
                sample_exp(rng, rates[i])
            }
            Family::Uniform { lo, hi } => rng.random_range(*lo..*hi),
            Family::PointMixture { probs, values } => {
                values[pick_index(rng, probs)]
            }
        }
    }

    /// True when the distribution is a point mass at exactly zero.
    pub fn is_zero(&self) -> bool {
        matches!(self.family, Family::Deterministic { value: 0.0 })
    }

    /// True for discrete distributions (point mass or point mixture).
    pub fn is_discrete(&self) -> bool {
        matches!(
            self.family,
            Family::Deterministic { .. } | Family::PointMixture { .. }
        )
    }

    /// The support as `(probability, value)` pairs, for discrete families.
    pub(crate) fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match &self.family {
            Family::Deterministic { value } => Some(vec![(1.0, *value)]),
            Family::PointMixture { probs, values } => Some(
                probs.iter().copied().zip(values.iter().copied()).collect(),
            ),
            _ => None,
        }
    }

    /// Parse from the config representation
    /// `{"dist": "<family>", "params": {...}}`.
    ///
    /// `path` prefixes error messages so callers can report the offending
    /// config field.
    pub(crate) fn from_config_value(
        v: &serde_json::Value,
        path: &str,
    ) -> Result<Self> {
        let obj = v.as_object().ok_or_else(|| {
            Error::InvalidParameter(format!("{path}: expected an object"))
        })?;
        let dist = obj
            .get("dist")
            .and_then(|d| d.as_str())
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "{path}.dist: missing or not a string"
                ))
            })?;
        let params = obj.get("params").cloned().unwrap_or_else(|| {
            serde_json::Value::Object(serde_json::Map::new())
        });
        let num = |field: &str| -> Result<f64> {
            params
                .get(field)
                .and_then(|x| x.as_f64())
                .ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "{path}.params.{field}: missing or not a number"
                    ))
                })
        };
        let vec = |field: &str| -> Result<Vec<f64>> {
            params
                .get(field)
                .and_then(|x| x.as_array())
                .map(|a| a.iter().map(|x| x.as_f64().unwrap_or(f64::NAN)).collect())
                .ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "{path}.params.{field}: missing or not an array of numbers"
                    ))
                })
        };
        let with_path = |r: Result<Self>| -> Result<Self> {
            r.map_err(|e| match e {
                Error::InvalidParameter(m) => {
                    Error::InvalidParameter(format!("{path}.params: {m}"))
                }
                other => other,
            })
        };
        match dist {
            "exp" => with_path(Self::exponential(num("rate")?)),
            "det" => with_path(Self::deterministic(num("value")?)),
            "erlang" => {
                let shape = num("shape")?;
                if shape.fract() != 0.0 || shape < 1.0 || shape > f64::from(u32::MAX) {
                    return Err(Error::InvalidParameter(format!(
                        "{path}.params.shape: {shape} is not a positive integer"
                    )));
                }
                with_path(Self::erlang(shape as u32, num("rate")?))
            }
            "hyperexp" => {
                with_path(Self::hyper_exponential(vec("probs")?, vec("rates")?))
            }
            "uniform" => with_path(Self::uniform(num("lo")?, num("hi")?)),
            "pointmix" => {
                with_path(Self::point_mixture(vec("probs")?, vec("values")?))
            }
            other => Err(Error::InvalidParameter(format!(
                "{path}.dist: unknown family \"{other}\" \
                 (expected exp, det, erlang, hyperexp, uniform or pointmix)"
            ))),
        }
    }
}

fn sample_exp<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    // 1 - U lies in (0, 1], keeping the logarithm finite.
    -(1.0 - rng.random::<f64>()).ln() / rate
}

fn pick_index<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// `(1 - e^{-x}) / x`, continuously extended to `1` at `x = 0`.
fn em1(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// `1 - em1(x)` without cancellation: `(x + e^{-x} - 1) / x`.
///
/// For small `x` the closed form subtracts nearly equal quantities, so a
/// series `x·Σ_{j≥0} (-x)^j / (j+2)!` is used below `x = 0.5`.
fn one_minus_em1(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if x > 0.5 {
        return (x + (-x).exp_m1()) / x;
    }
    let mut term = 0.5;
    let mut acc = term;
    let mut j = 0.0;
    loop {
        term *= -x / (j + 3.0);
        acc += term;
        j += 1.0;
        if term.abs() < acc.abs() * 1e-17 {
            return x * acc;
        }
    }
}

/// Divided difference of [`em1`]: `(em1(p) - em1(q)) / (q - p)`, extended
/// continuously to `-em1'(p)` at `p = q`. Symmetric and positive for
/// nonnegative arguments.
///
/// Three regimes keep the evaluation cancellation-free: a joint power
/// series when both arguments are small, the literal quotient when they
/// are far enough apart for the subtraction to be benign, and a midpoint
/// Taylor form (first derivative plus third-derivative correction) for
/// large nearby arguments.
fn em1_divided_difference(p: f64, q: f64) -> f64 {
    if p == q {
        return -em1_deriv(p);
    }
    let m = p.max(q);
    if m <= 0.5 {
        // Σ_{n≥1} (-1)^{n+1} σ_n / (n+1)!  with  σ_n = Σ_m p^{n-1-m} q^m,
        // via σ_{n+1} = p·σ_n + q^n.
        let mut sigma = 1.0;
        let mut qn = 1.0;
        let mut fact = 2.0;
        let mut sign = 1.0;
        let mut acc = 0.5;
        let mut n = 1.0;
        loop {
            qn *= q;
            sigma = p * sigma + qn;
            n += 1.0;
            fact *= n + 1.0;
            sign = -sign;
            let term = sign * sigma / fact;
            acc += term;
            if term.abs() < acc.abs() * 1e-17 {
                return acc;
            }
        }
    }
    if (q - p).abs() >= 1e-3 * m.max(1.0) {
        return (em1(p) - em1(q)) / (q - p);
    }
    let c = 0.5 * (p + q);
    -em1_deriv(c) - (q - p) * (q - p) / 24.0 * em1_third_deriv(c)
}

/// Third derivative of [`em1`] by the closed form
/// `e^{-x}(1/x + 3/x² + 6/x³) - 6(1 - e^{-x})/x⁴`.
///
/// Only consulted for `x` above roughly `0.5`, where the form is stable.
fn em1_third_deriv(x: f64) -> f64 {
    let e = (-x).exp();
    e / x + 3.0 * e / (x * x) + 6.0 * e / (x * x * x)
        - 6.0 * (1.0 - e) / (x * x * x * x)
}

/// Derivative of [`em1`]: `((1+x)e^{-x} - 1) / x²`, series below `x = 0.5`.
fn em1_deriv(x: f64) -> f64 {
    if x > 0.5 {
        return ((1.0 + x) * (-x).exp() - 1.0) / (x * x);
    }
    // -Σ_{n≥1} n (-x)^{n-1} / (n+1)!  =  -1/2 + x/3 - x²/8 + ...
    let mut pw = 1.0;
    let mut fact = 2.0;
    let mut acc = -0.5;
    let mut n = 1.0;
    loop {
        n += 1.0;
        pw *= -x;
        fact *= n + 1.0;
        let term = -n * pw / fact;
        acc += term;
        if term.abs() < acc.abs() * 1e-17 + 1e-300 {
            return acc;
        }
    }
}

impl Serialize for Distribution {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde_json::json;
        let (dist, params) = match &self.family {
            Family::Exponential { rate } => ("exp", json!({ "rate": rate })),
            Family::Deterministic { value } => ("det", json!({ "value": value })),
            Family::Erlang { shape, rate } => {
                ("erlang", json!({ "shape": shape, "rate": rate }))
            }
            Family::HyperExponential { probs, rates } => {
                ("hyperexp", json!({ "probs": probs, "rates": rates }))
            }
            Family::Uniform { lo, hi } => ("uniform", json!({ "lo": lo, "hi": hi })),
            Family::PointMixture { probs, values } => {
                ("pointmix", json!({ "probs": probs, "values": values }))
            }
        };
        let mut map = s.serialize_map(Some(2))?;
        map.serialize_entry("dist", dist)?;
        map.serialize_entry("params", &params)?;
        map.end()
    }
}

impl<'de> Deserialize<'de> for Distribution {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(d)?;
        Self::from_config_value(&value, "distribution").map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn all_families() -> Vec<Distribution> {
        vec![
            Distribution::exponential(1.0).unwrap(),
            Distribution::exponential(10.0).unwrap(),
            Distribution::deterministic(0.1).unwrap(),
            Distribution::deterministic(0.0).unwrap(),
            Distribution::erlang(2, 2.0).unwrap(),
            Distribution::erlang(5, 0.7).unwrap(),
            Distribution::hyper_exponential(vec![0.6, 0.4], vec![3.0, 1.0]).unwrap(),
            Distribution::uniform(0.0, 1.0).unwrap(),
            Distribution::uniform(0.1, 0.5).unwrap(),
            Distribution::point_mixture(vec![0.5, 0.5], vec![0.5, 2.0]).unwrap(),
        ]
    }

    #[test]
    fn lst_closed_form_values() {
        let exp = Distribution::exponential(1.0).unwrap();
        assert_eq!(exp.lst(1.0).unwrap(), 0.5);
        let det = Distribution::deterministic(0.1).unwrap();
        assert_eq!(det.lst(0.0).unwrap(), 1.0);
        let erl = Distribution::erlang(2, 2.0).unwrap();
        assert!((erl.lst(2.0).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn lst_deriv_closed_form_values() {
        let exp = Distribution::exponential(1.0).unwrap();
        assert_eq!(exp.lst_deriv(0.0).unwrap(), -1.0);
        let det = Distribution::deterministic(0.5).unwrap();
        assert_eq!(det.lst_deriv(0.0).unwrap(), -0.5);
        let e10 = Distribution::exponential(10.0).unwrap();
        let expect = -10.0 / (10.2_f64 * 10.2);
        assert!((e10.lst_deriv(0.2).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn negative_theta_is_a_domain_error() {
        let d = Distribution::exponential(1.0).unwrap();
        assert!(matches!(d.lst(-0.5), Err(Error::Domain(_))));
        assert!(matches!(d.lst_deriv(-0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(Distribution::exponential(0.0).is_err());
        assert!(Distribution::exponential(-1.0).is_err());
        assert!(Distribution::deterministic(-0.1).is_err());
        assert!(Distribution::erlang(0, 1.0).is_err());
        assert!(Distribution::uniform(0.5, 0.5).is_err());
        assert!(Distribution::uniform(-0.1, 0.5).is_err());
        assert!(Distribution::hyper_exponential(vec![0.6, 0.3], vec![1.0, 2.0]).is_err());
        assert!(Distribution::point_mixture(vec![0.5, 0.5], vec![0.3]).is_err());
    }

    #[test]
    fn lst_is_one_at_zero_and_monotone_on_grid() {
        let grid = [0.0, 1e-3, 1e-1, 1.0, 10.0];
        for d in all_families() {
            let mut prev = f64::INFINITY;
            for &th in &grid {
                let v = d.lst(th).unwrap();
                assert!(v > 0.0 && v <= 1.0, "{d:?} lst({th}) = {v}");
                assert!(v <= prev + 1e-15, "{d:?} not nonincreasing at {th}");
                prev = v;
            }
            assert_eq!(d.lst(0.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn lst_deriv_matches_central_difference() {
        let grid = [1e-3, 1e-1, 1.0, 10.0];
        let h = 1e-6;
        for d in all_families() {
            for &th in &grid {
                let fd =
                    (d.lst(th + h).unwrap() - d.lst(th - h).unwrap()) / (2.0 * h);
                let an = d.lst_deriv(th).unwrap();
                assert!(
                    (fd - an).abs() < 1e-8,
                    "{d:?} at {th}: analytic {an} vs fd {fd}"
                );
            }
        }
    }

    #[test]
    fn lst_deriv_at_zero_is_minus_mean() {
        for d in all_families() {
            let dv = d.lst_deriv(0.0).unwrap();
            let tol = 1e-12 * d.mean().max(1.0);
            assert!(
                (dv + d.mean()).abs() <= tol,
                "{d:?}: lst_deriv(0) = {dv}, mean = {}",
                d.mean()
            );
        }
    }

    #[test]
    fn divided_difference_matches_literal_quotient_when_far_apart() {
        let pairs = [(0.0, 1.0), (0.2, 2.5), (1.0, 10.0), (0.0, 0.3)];
        for d in all_families() {
            for &(u, v) in &pairs {
                let literal =
                    (d.lst(u).unwrap() - d.lst(v).unwrap()) / (v - u);
                let dd = d.lst_divided_difference(u, v);
                assert!(
                    (dd - literal).abs() <= 1e-12 * literal.abs().max(1e-6),
                    "{d:?} at ({u}, {v}): stable {dd} vs literal {literal}"
                );
                assert!(dd >= 0.0, "{d:?} at ({u}, {v}): negative value {dd}");
            }
        }
    }

    #[test]
    fn divided_difference_is_symmetric() {
        for d in all_families() {
            let a = d.lst_divided_difference(0.3, 1.7);
            let b = d.lst_divided_difference(1.7, 0.3);
            assert_eq!(a, b, "{d:?}");
        }
    }

    #[test]
    fn divided_difference_collapses_to_derivative_when_nearly_equal() {
        // At coincident arguments the quotient is -lst'(u) exactly; at a
        // gap of 1e-9 it must still agree to ~1e-9 relative, which the
        // literal subtraction could not deliver.
        for d in all_families() {
            for &u in &[0.0, 0.4, 2.0] {
                let slope = -d.lst_deriv(u).unwrap();
                let exact = d.lst_divided_difference(u, u);
                assert_eq!(exact, slope, "{d:?} at {u}");
                let near = d.lst_divided_difference(u, u + 1e-9);
                assert!(
                    (near - slope).abs() <= 1e-8 * slope.max(1e-12),
                    "{d:?} at {u}: near {near} vs slope {slope}"
                );
            }
        }
    }

    #[test]
    fn divided_difference_branches_agree_at_the_seam() {
        // Uniform(1, 3) maps (u, v) = (1, 1+g) to helper arguments with a
        // gap of 2g against a threshold of 2e-3, so g around 1e-3
        // straddles the quotient/midpoint crossover.
        let d = Distribution::uniform(1.0, 3.0).unwrap();
        let below = d.lst_divided_difference(1.0, 1.0 + 0.999e-3);
        let above = d.lst_divided_difference(1.0, 1.0 + 1.001e-3);
        let slope = (above - below) / 2e-6;
        let mid = d.lst_divided_difference(1.0, 1.0 + 1.000e-3);
        assert!(
            (mid - (below + 1e-6 * slope)).abs() <= 1e-10 * mid.abs(),
            "seam mismatch: below {below}, mid {mid}, above {above}"
        );
    }

    #[test]
    fn second_moment_respects_jensen() {
        for d in all_families() {
            assert!(
                d.second_moment() >= d.mean() * d.mean() - 1e-15,
                "{d:?}: E[V^2] = {} < mean^2",
                d.second_moment()
            );
        }
    }

    #[test]
    fn one_minus_lst_is_accurate_for_tiny_theta() {
        // At θ = 1e-12 the complement is ≈ θ·mean; the naive subtraction
        // would return with at best four significant digits.
        for d in all_families() {
            if d.mean() == 0.0 {
                assert_eq!(d.one_minus_lst(1e-12), 0.0);
                continue;
            }
            let th = 1e-12;
            let om = d.one_minus_lst(th);
            let expect = th * d.mean() - 0.5 * th * th * d.second_moment();
            assert!(
                (om - expect).abs() <= 1e-8 * expect.abs(),
                "{d:?}: one_minus_lst({th}) = {om:e}, expected ≈ {expect:e}"
            );
        }
    }

    #[test]
    fn one_minus_lst_complements_lst() {
        for d in all_families() {
            for th in [0.0, 0.05, 0.5, 2.0, 17.0] {
                let s = d.lst(th).unwrap() + d.one_minus_lst(th);
                assert!((s - 1.0).abs() < 1e-14, "{d:?} at {th}: {s}");
            }
        }
    }

    #[test]
    fn deterministic_sampling_is_exact() {
        let d = Distribution::deterministic(0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            assert_eq!(d.sample(&mut rng), 0.3);
        }
    }

    #[test]
    fn sample_means_obey_law_of_large_numbers() {
        let n = 1_000_000;
        for (i, d) in all_families().into_iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + i as u64);
            let mut sum = 0.0;
            let mut sum2 = 0.0;
            for _ in 0..n {
                let x = d.sample(&mut rng);
                sum += x;
                sum2 += x * x;
            }
            let m = sum / n as f64;
            let var = (d.second_moment() - d.mean() * d.mean()).max(0.0);
            let se = (var / n as f64).sqrt();
            // The absolute slack covers rounding drift of the naive
            // 10⁶-term summation for zero-variance families.
            assert!(
                (m - d.mean()).abs() <= 3.0 * se + 1e-9,
                "{d:?}: sample mean {m} vs {} (se {se})",
                d.mean()
            );
        }
    }

    #[test]
    fn uniform_second_moment_matches_samples() {
        let d = Distribution::uniform(0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let m2: f64 = (0..n).map(|_| {
            let x = d.sample(&mut rng);
            x * x
        }).sum::<f64>() / n as f64;
        assert!((m2 - 1.0 / 3.0).abs() < 0.01 / 3.0, "sample m2 {m2}");
    }

    #[test]
    fn empirical_lst_matches_transform() {
        let n = 1_000_000;
        for (i, d) in all_families().into_iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(2000 + i as u64);
            let samples: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
            for th in [0.5, 1.0, 2.0] {
                let mut sum = 0.0;
                let mut sum2 = 0.0;
                for &x in &samples {
                    let e = (-th * x).exp();
                    sum += e;
                    sum2 += e * e;
                }
                let m = sum / n as f64;
                let var = (sum2 / n as f64 - m * m).max(0.0);
                let se = (var / n as f64).sqrt();
                let want = d.lst(th).unwrap();
                assert!(
                    (m - want).abs() <= 3.0 * se + 1e-12,
                    "{d:?} at θ={th}: empirical {m} vs {want} (se {se})"
                );
            }
        }
    }

    #[test]
    fn config_round_trip_through_json() {
        for d in all_families() {
            let text = serde_json::to_string(&d).unwrap();
            let back: Distribution = serde_json::from_str(&text).unwrap();
            assert_eq!(d, back);
        }
    }

    #[test]
    fn config_parsing_reports_unknown_family() {
        let v: serde_json::Value =
            serde_json::from_str(r#"{"dist":"gamma","params":{"rate":1.0}}"#).unwrap();
        let err = Distribution::from_config_value(&v, "classes[0].size").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("classes[0].size.dist"), "{msg}");
        assert!(msg.contains("gamma"), "{msg}");
    }

    #[test]
    fn config_parsing_reports_bad_rate_with_path() {
        let v: serde_json::Value =
            serde_json::from_str(r#"{"dist":"exp","params":{"rate":-2.0}}"#).unwrap();
        let err = Distribution::from_config_value(&v, "classes[1].pause").unwrap_err();
        assert!(err.to_string().contains("classes[1].pause.params"), "{err}");
    }

    #[test]
    fn zero_overhead_marker() {
        assert!(Distribution::deterministic(0.0).unwrap().is_zero());
        assert!(!Distribution::deterministic(0.1).unwrap().is_zero());
        assert!(!Distribution::exponential(1.0).unwrap().is_zero());
    }
}

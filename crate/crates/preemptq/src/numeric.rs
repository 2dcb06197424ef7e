//! One-sided finite-difference stencils and Richardson extrapolation.
//!
//! Transforms are only defined for `θ ≥ 0`, so all derivatives at the
//! origin are taken with one-sided stencils on the nodes `0, h, 2h, ...`.
//! Each stencil below uses `r + 4` nodes for the `r`-th derivative, which
//! makes every truncation error `O(h⁴)` and lets a single Richardson
//! exponent serve all orders. Coefficients were generated exactly (by
//! solving the moment conditions `Σ_j w_j·j^m = r!·[m = r]`) and verified
//! against derivatives of `e^{-x}`.

use crate::error::Result;

/// Stencil numerators for derivative orders 1..=4; entry `r-1` applies to
/// the nodes `0..=(r+3)` and is divided by [`FD_DENOMINATORS`]`[r-1]·h^r`.
const FD_NUMERATORS: [&[f64]; 4] = [
    &[-25.0, 48.0, -36.0, 16.0, -3.0],
    &[45.0, -154.0, 214.0, -156.0, 61.0, -10.0],
    &[-49.0, 232.0, -461.0, 496.0, -307.0, 104.0, -15.0],
    &[56.0, -333.0, 852.0, -1219.0, 1056.0, -555.0, 164.0, -21.0],
];

const FD_DENOMINATORS: [f64; 4] = [12.0, 12.0, 8.0, 6.0];

/// Order in `h` of the truncation error of every stencil above.
pub(crate) const FD_ORDER: i32 = 4;

/// Maximum derivative order the stencil table supports.
pub(crate) const FD_MAX_ORDER: usize = 4;

/// `r`-th derivative of `f` at `0` from one one-sided stencil of spacing
/// `h`, sampling `f` at `0, h, ..., (r+3)h`.
pub(crate) fn one_sided_derivative<F>(f: &mut F, r: usize, h: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    assert!((1..=FD_MAX_ORDER).contains(&r), "derivative order {r}");
    let coeffs = FD_NUMERATORS[r - 1];
    let mut acc = 0.0;
    for (j, &c) in coeffs.iter().enumerate() {
        acc += c * f(j as f64 * h)?;
    }
    Ok(acc / (FD_DENOMINATORS[r - 1] * h.powi(r as i32)))
}

/// Richardson extrapolation of two estimates with error order `p`:
/// combines `D(h)` and `D(h/2)` into an estimate with the `h^p` term
/// cancelled.
pub(crate) fn richardson(d_h: f64, d_half: f64, p: i32) -> f64 {
    let w = (2.0_f64).powi(p);
    (w * d_half - d_h) / (w - 1.0)
}

/// Derivative estimate with one Richardson refinement and a convergence
/// report: returns `(estimate, relative disagreement between the h and
/// h/2 stencils)`.
pub(crate) fn refined_derivative<F>(
    f: &mut F,
    r: usize,
    h: f64,
) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let d_h = one_sided_derivative(f, r, h)?;
    let d_half = one_sided_derivative(f, r, 0.5 * h)?;
    let est = richardson(d_h, d_half, FD_ORDER);
    let scale = est.abs().max(1e-300);
    Ok((est, (d_h - d_half).abs() / scale))
}

/// First derivative at `x0` from the 4-node forward stencil
/// `[-11, 18, -9, 2]/(6h)`; used where a cheap, short-span estimate is
/// needed away from the origin.
pub(crate) fn forward_derivative4<F>(f: &mut F, x0: f64, h: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let c = [-11.0, 18.0, -9.0, 2.0];
    let mut acc = 0.0;
    for (j, &cj) in c.iter().enumerate() {
        acc += cj * f(x0 + j as f64 * h)?;
    }
    Ok(acc / (6.0 * h))
}

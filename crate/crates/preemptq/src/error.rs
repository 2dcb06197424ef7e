//! Error type shared by the analysis and simulation modules.

use thiserror::Error;

/// Errors produced by analysis routines, the simulator and config parsing.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation
    /// (negative transform argument, probability vector outside the unit
    /// cube, class index out of range, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value is syntactically valid but violates a
    /// constraint (nonpositive rate, weights that do not sum to one, ...).
    /// The message names the offending field.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The requested computation is not defined for this configuration,
    /// e.g. a repeat-identical analysis of a continuous size distribution.
    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    /// The operation requires a stable system but the offered load is at
    /// or above one.
    #[error("unstable system: {0}")]
    UnstableSystem(String),

    /// A fixed-point iteration hit its iteration cap before reaching the
    /// convergence tolerance. Carries the last residual observed.
    #[error("iteration did not converge after {iterations} steps (residual {residual:.3e})")]
    NoConvergence { iterations: u64, residual: f64 },

    /// A numeric extraction (finite-difference derivative, extrapolation)
    /// could not reach its accuracy target.
    #[error("numeric precision lost: {0}")]
    NumericPrecision(String),

    /// A quantity is degenerate in this regime, e.g. a conditional law of
    /// an event that has probability zero.
    #[error("degenerate case: {0}")]
    DegenerateCase(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

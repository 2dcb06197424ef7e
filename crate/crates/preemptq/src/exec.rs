//! Batch execution: data-parallel maps with a sequential fallback.
//!
//! Parameter sweeps, multi-replication simulations and randomized
//! cross-validation batteries all reduce to applying an expensive pure
//! function to every element of a batch. With the `parallel` feature
//! (on by default) these maps run on rayon's work-stealing pool; built
//! with `--no-default-features` the same API degrades to plain
//! sequential loops. Results are returned in input order either way,
//! so outputs are bit-identical across the two builds and across
//! thread counts.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::config::SystemConfig;
use crate::error::Result;
use crate::sim::{simulate, SimEstimates, SimOpts};

/// Apply `f` to every item of a batch, preserving input order.
///
/// # Input
/// A slice of inputs and a pure function; `f` may run on any thread.
///
/// # Output
/// `f`'s results in input order.
///
/// # Examples
/// ```
/// use preemptq::exec::map_collect;
/// let squares = map_collect(&[1, 2, 3], |&x| x * x);
/// assert_eq!(squares, vec![1, 4, 9]);
/// ```
pub fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Apply a fallible `f` to every item, stopping at the first error.
///
/// # Output
/// All results in input order, or the error of the earliest failing
/// item (by input order, regardless of execution order).
pub fn try_map_collect<T, U, F>(items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        let results: Vec<Result<U>> = items.par_iter().map(f).collect();
        results.into_iter().collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Map every item and fold the results with an associative,
/// commutative operation.
///
/// # Input
/// `identity` must be a neutral element of `combine`, and `combine`
/// must be associative and commutative — with the `parallel` feature
/// the fold tree depends on work-stealing.
///
/// # Examples
/// ```
/// use preemptq::exec::map_reduce;
/// let items = [1.0_f64, 2.0, 3.0];
/// let total = map_reduce(&items, || 0.0, |&x| x * x, |a, b| a + b);
/// assert!((total - 14.0).abs() < 1e-12);
/// ```
pub fn map_reduce<T, U, F, C>(
    items: &[T],
    identity: impl Fn() -> U + Sync + Send,
    f: F,
    combine: C,
) -> U
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
    C: Fn(U, U) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).reduce(&identity, combine)
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).fold(identity(), combine)
    }
}

/// Run one simulation per seed, concurrently when possible.
///
/// The replications share the configuration and options and differ
/// only in the master seed; each is internally sequential and fully
/// deterministic, so the result vector does not depend on the build's
/// parallelism.
///
/// # Output
/// One estimate bundle per seed, in seed order.
pub fn simulate_replications(
    config: &SystemConfig,
    opts: &SimOpts,
    seeds: &[u64],
) -> Result<Vec<SimEstimates>> {
    try_map_collect(seeds, |&seed| {
        let opts = SimOpts {
            seed,
            ..opts.clone()
        };
        simulate(config, &opts)
    })
}

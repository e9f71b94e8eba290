//! Data-parallel helpers with a sequential fallback.
//!
//! Everything in this module is deterministic: parallel variants first
//! materialize per-index results (each slot computed independently), then
//! combine them in index order, so a sum is bitwise identical no matter how
//! many threads rayon uses, and identical to the sequential fallback. Trace
//! files and seeded experiments therefore do not depend on the `parallel`
//! feature or the machine's core count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Batches at or below this size skip the thread pool; the handoff overhead
/// dwarfs the work for the small per-epoch sums (n of a few dozen).
const SMALL_BATCH: usize = 32;

/// Collect `f(0), f(1), .., f(n-1)` into a vector.
pub fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if n > SMALL_BATCH {
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

/// Sum `f(i)` over `i in 0..n`, combining in index order.
pub fn map_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_collect(n, f).iter().sum()
}

/// Sequential reference path for [`map_sum`]; also the benchmark baseline.
pub fn map_sum_seq<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64,
{
    (0..n).map(f).sum()
}

/// Maximum of `f(i)` over `i in 0..n`; NaN entries are ignored.
pub fn map_max<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_collect(n, f)
        .into_iter()
        .filter(|v| !v.is_nan())
        .fold(f64::NEG_INFINITY, f64::max)
}

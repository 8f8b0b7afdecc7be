//! Data-parallel helpers with a sequential fallback.
//!
//! Every hot loop in the crate (Monte Carlo simulation batches, subset
//! enumerations, experiment cells) funnels through these two functions.
//! With the `parallel` feature enabled they fan out over rayon; without it
//! they run as plain loops. Results are bit-identical either way: maps
//! collect into index order and sums reduce over fixed-size chunks, so the
//! float accumulation order never depends on thread scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this many items the parallel build runs sequentially anyway;
/// the fork/join overhead dwarfs the work.
const MIN_PAR_LEN: usize = 64;

const SUM_CHUNK: usize = 1024;

/// Apply `f` to every index in `0..n`, collecting results in index order.
pub fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if n >= MIN_PAR_LEN {
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

/// Like [`map_indexed`], for callers that already batched their work into
/// coarse tasks: parallelizes from two tasks up.
pub fn map_tasks<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if n >= 2 {
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

/// Sum `f(i)` over `0..n` with a fixed chunked accumulation order.
pub fn sum_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(SUM_CHUNK);
    let chunk_sum = |c: usize| {
        let lo = c * SUM_CHUNK;
        let hi = (lo + SUM_CHUNK).min(n);
        let mut acc = 0.0;
        for i in lo..hi {
            acc += f(i);
        }
        acc
    };
    let partials: Vec<f64> = map_indexed(chunks, chunk_sum);
    partials.into_iter().fold(0.0, |a, b| a + b)
}

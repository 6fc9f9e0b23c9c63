//! Data-parallel execution helpers.
//!
//! Work is always split into the same fixed chunks and partial results are
//! combined in chunk order, so the rayon and sequential paths agree to the
//! last bit. Only the scheduling differs.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How chunked work is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    /// Rayon's global pool. Without the `parallel` feature this runs
    /// sequentially.
    Parallel,
}

impl Default for Parallelism {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Parallelism::Parallel
        } else {
            Parallelism::Sequential
        }
    }
}

/// Splits `0..len` into consecutive ranges of at most `chunk` items.
pub fn chunk_ranges(len: usize, chunk: usize) -> Vec<Range<usize>> {
    let chunk = chunk.max(1);
    (0..len)
        .step_by(chunk)
        .map(|start| start..(start + chunk).min(len))
        .collect()
}

/// Applies `f` to each chunk of `0..len` and returns results in chunk order.
pub fn map_chunks<T, F>(par: Parallelism, len: usize, chunk: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    let ranges = chunk_ranges(len, chunk);
    match par {
        #[cfg(feature = "parallel")]
        Parallelism::Parallel => ranges.into_par_iter().map(f).collect(),
        _ => ranges.into_iter().map(f).collect(),
    }
}

/// Applies `f` to every item, preserving order.
pub fn map_items<I, T, F>(par: Parallelism, items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    match par {
        #[cfg(feature = "parallel")]
        Parallelism::Parallel => items.par_iter().map(f).collect(),
        _ => items.iter().map(f).collect(),
    }
}

/// Chunked map followed by an in-order fold of the partial results.
pub fn reduce_chunks<T, F, G>(
    par: Parallelism,
    len: usize,
    chunk: usize,
    map: F,
    mut combine: G,
) -> Option<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
    G: FnMut(&mut T, T),
{
    let mut parts = map_chunks(par, len, chunk, map).into_iter();
    let mut acc = parts.next()?;
    for part in parts {
        combine(&mut acc, part);
    }
    Some(acc)
}

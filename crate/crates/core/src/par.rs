//! Data-parallel helpers with a sequential fallback.
//!
//! Every helper produces bit-identical output regardless of [`Exec`]: work is
//! split over independent rows or items and results are collected in order.
//! Without the `parallel` feature, [`Exec::Parallel`] runs sequentially.

use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Execution policy for data-parallel loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// True when work will actually be spread over the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Below this many elements the rayon overhead outweighs the work.
const MIN_PARALLEL_LEN: usize = 1 << 14;

/// Calls `f(row_index, row)` for each `width`-long row of `buf`.
pub fn for_each_row_mut<T, F>(buf: &mut [T], width: usize, exec: Exec, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Send + Sync,
{
    if width == 0 {
        return;
    }
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && buf.len() >= MIN_PARALLEL_LEN {
        buf.par_chunks_mut(width).enumerate().for_each(|(i, row)| f(i, row));
        return;
    }
    let _ = exec;
    buf.chunks_mut(width).enumerate().for_each(|(i, row)| f(i, row));
}

/// Keeps the items of `items` for which `pred` holds, preserving order.
pub fn filter_copied<T, F>(items: &[T], exec: Exec, pred: F) -> Vec<T>
where
    T: Copy + Send + Sync,
    F: Fn(T) -> bool + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && items.len() >= MIN_PARALLEL_LEN {
        return items.par_iter().copied().filter(|&t| pred(t)).collect();
    }
    let _ = exec;
    items.iter().copied().filter(|&t| pred(t)).collect()
}

/// Evaluates `f(i)` for `i in 0..n`, returning results in index order.
///
/// Intended for coarse-grained batches (independent simulations, random
/// instances), so it parallelizes regardless of `n`.
pub fn map_range<R, F>(n: usize, exec: Exec, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

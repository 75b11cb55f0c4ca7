//! Execution policy for the batch entry points.
//!
//! With the `parallel` feature the batch kernels fan out over rayon's global
//! pool; without it, or with [`Execution::Sequential`], they run on the caller's
//! thread. Both paths produce results in index order, so outputs are identical
//! regardless of thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when work will actually be spread over a thread pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Evaluates `f(i)` for `i in 0..n` and returns the results in index order.
pub fn map_indexed<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Fills `out` in fixed-size chunks; `f(chunk_index, chunk)` writes one chunk.
pub fn fill_chunks<T, F>(exec: Execution, out: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        out.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
        return;
    }
    let _ = exec;
    out.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

/// Block size of the fixed reduction tree used by [`stable_sum`].
pub const REDUCTION_BLOCK: usize = 1024;

/// Sums `f(i)` over `0..n` with a fixed two-level reduction tree: each block of
/// [`REDUCTION_BLOCK`] terms is summed left to right, then the block sums are
/// added in block order. The result is bit-identical for every execution policy.
pub fn stable_sum<F>(exec: Execution, n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let blocks = n.div_ceil(REDUCTION_BLOCK);
    let partial = map_indexed(exec, blocks, |b| {
        let lo = b * REDUCTION_BLOCK;
        let hi = (lo + REDUCTION_BLOCK).min(n);
        (lo..hi).map(&f).fold(0.0, |acc, v| acc + v)
    });
    partial.into_iter().fold(0.0, |acc, v| acc + v)
}

//! Order-stable data-parallel helpers.
//!
//! Every helper takes an [`Execution`] so callers (and the benches) can pick
//! the strategy at runtime. Without the `parallel` feature the parallel
//! variant silently runs sequentially. Results are always returned in input
//! order, and reductions are performed over fixed-size chunks combined in
//! chunk order, so floating-point sums do not depend on the thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length used for deterministic parallel reductions.
pub const REDUCE_CHUNK: usize = 64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when work will actually fan out across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Maps `f` over `items`, preserving order.
pub fn map<T, U, F>(exec: Execution, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Maps `f` over `items` with each item's index, preserving order.
pub fn map_indexed<T, U, F>(exec: Execution, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    let _ = exec;
    items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
}

/// Folds fixed-size chunks of `items` into partial accumulators and merges
/// them left to right. The result is bit-identical for both strategies.
pub fn chunked_reduce<T, A, F, M>(
    exec: Execution,
    items: &[T],
    init: impl Fn() -> A + Sync + Send,
    fold: F,
    merge: M,
) -> A
where
    T: Sync,
    A: Send,
    F: Fn(&mut A, usize, &T) + Sync + Send,
    M: Fn(&mut A, A),
{
    let chunks: Vec<(usize, &[T])> =
        items.chunks(REDUCE_CHUNK).enumerate().map(|(c, chunk)| (c * REDUCE_CHUNK, chunk)).collect();
    let partials = map(exec, &chunks, |&(offset, chunk)| {
        let mut acc = init();
        for (i, item) in chunk.iter().enumerate() {
            fold(&mut acc, offset + i, item);
        }
        acc
    });
    let mut total = init();
    for p in partials {
        merge(&mut total, p);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        let xs: Vec<u32> = (0..1000).collect();
        let seq = map(Execution::Sequential, &xs, |x| x * 3);
        let par = map(Execution::Parallel, &xs, |x| x * 3);
        assert_eq!(seq, par);
        assert_eq!(seq[999], 2997);
    }

    #[test]
    fn chunked_sum_is_strategy_independent() {
        let xs: Vec<f64> = (0..10_000).map(|i| (i as f64).sin() * 1e-3 + 1e7).collect();
        let run = |e| chunked_reduce(e, &xs, || 0.0f64, |a, _, x| *a += x, |a, b| *a += b);
        assert_eq!(run(Execution::Sequential).to_bits(), run(Execution::Parallel).to_bits());
    }
}

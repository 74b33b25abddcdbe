//! Execution policy for the data-parallel loops (Monte-Carlo chunks, grid
//! sweeps, disk audits, independent runs).
//!
//! Every parallel loop is written as an indexed map whose results are
//! combined in index order, so sequential and parallel execution produce
//! bit-identical output. With the `parallel` feature disabled,
//! [`Execution::Parallel`] silently runs sequentially.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// True when this policy will actually fan out across threads.
    pub fn is_parallel(&self) -> bool {
        cfg!(feature = "parallel") && *self == Execution::Parallel
    }
}

/// `(0..n).map(f).collect()`, possibly in parallel, preserving order.
pub fn map_indexed<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec == Execution::Parallel {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Order-preserving map over a slice.
pub fn map_slice<S, T, F>(exec: Execution, items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    map_indexed(exec, items.len(), |i| f(&items[i]))
}

/// Runs `f` inside a pool of at most `threads` workers (0 = library default).
/// Sequential builds just call `f`.
pub fn with_pool<R, F>(threads: usize, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    if threads > 0 {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            return pool.install(f);
        }
    }
    let _ = threads;
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let f = |i: usize| (i as f64).sqrt().sin();
        let a = map_indexed(Execution::Sequential, 10_000, f);
        let b = map_indexed(Execution::Parallel, 10_000, f);
        assert_eq!(a, b);
    }

    #[test]
    fn pool_runs_closure() {
        let v = with_pool(2, || map_indexed(Execution::Parallel, 4, |i| i * 2));
        assert_eq!(v, vec![0, 2, 4, 6]);
    }
}

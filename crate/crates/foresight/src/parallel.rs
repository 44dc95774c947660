use anyhow::Context;
use foresight_core::PathExecutor;
use rayon::prelude::*;

/// Runs path kernels on a dedicated rayon pool.
///
/// `collect` on an indexed parallel iterator keeps index order, so the
/// output is the same for every thread count.
pub struct Parallel {
    pool: rayon::ThreadPool,
}

impl Parallel {
    /// `threads == 0` lets rayon pick the number of threads.
    pub fn new(threads: usize) -> anyhow::Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .context("failed to start the worker pool")?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl PathExecutor for Parallel {
    fn map_paths<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool
            .install(|| (0..n).into_par_iter().map(f).collect())
    }
}

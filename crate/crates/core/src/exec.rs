//! Execution of per-path kernels.
//!
//! Every Monte Carlo phase is written as a pure function of the path index.
//! An executor evaluates it for `0..n` and must return the results in index
//! order; all reductions happen afterwards on that ordered vector, so results
//! do not depend on how the work was scheduled.

use alloc::vec::Vec;

pub trait PathExecutor {
    fn map_paths<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs paths one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl PathExecutor for Sequential {
    fn map_paths<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

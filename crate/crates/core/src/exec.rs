//! Execution strategy for embarrassingly parallel loops.
//!
//! The core never spawns threads. Callers that want parallelism pass an
//! [`Executor`] backed by a thread pool; results are always returned in index
//! order so parallel and serial runs produce identical output.

use alloc::vec::Vec;

pub trait Executor {
    /// Evaluates `f(0..n)` and returns the results in index order.
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs everything on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

use beamnet_core::exec::Executor;
use rayon::prelude::*;

/// Thread-pool executor; results come back in index order.
pub struct Pool {
    pool: rayon::ThreadPool,
}

impl Pool {
    pub fn new(threads: usize) -> Self {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .start_handler(|_| flush_subnormals())
            .build()
            .expect("thread pool");
        Pool { pool }
    }

    /// Sized by `BEAMNET_THREADS`, else the available parallelism.
    pub fn from_env() -> Self {
        Self::new(threads_from_env())
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

/// Sets flush-to-zero and denormals-are-zero on the calling thread.
///
/// Late in training, dead units and saturated attention leave values that
/// underflow into subnormals, and arithmetic on those is slow enough to
/// stretch an epoch fivefold. Every compute thread runs with these flags set,
/// so results are still identical across thread counts.
pub fn flush_subnormals() {
    #[cfg(target_arch = "x86_64")]
    #[allow(deprecated)]
    // SAFETY: only the FTZ (bit 15) and DAZ (bit 6) control bits change.
    unsafe {
        use std::arch::x86_64::{_mm_getcsr, _mm_setcsr};
        _mm_setcsr(_mm_getcsr() | 0x8040);
    }
}

pub fn threads_from_env() -> usize {
    std::env::var("BEAMNET_THREADS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

impl Executor for Pool {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}

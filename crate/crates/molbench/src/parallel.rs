use molbench_core::exec::Executor;
use rayon::prelude::*;

/// Fans pieces out over the current rayon pool; results keep index order.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rayon;

impl Executor for Rayon {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).into_par_iter().map(f).collect()
    }
}

/// Run `f` on a pool of `threads` workers, or the global pool when `None`.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> crate::error::Result<R> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(crate::error::HarnessError::validation("--threads must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| crate::error::HarnessError::Runtime(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

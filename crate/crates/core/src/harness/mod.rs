//! Experiment driver: configuration, learning experiments, curve sweeps,
//! the invariant suite, and file output.

pub mod config;
pub mod experiment;
pub mod output;
pub mod seed;
pub mod sweep;
pub mod validate;

use crate::error::{Error, Result};

/// Runs `f` on a dedicated pool of `workers` threads, or on the global
/// pool when `None`. Results do not depend on the worker count.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::param(format!("worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

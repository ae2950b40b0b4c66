//! Execution strategy for data-parallel loops.
//!
//! With the `parallel` feature (default) loops run on the rayon pool;
//! without it, or with [`Exec::Sequential`], they run on the calling thread.
//! Results are always returned in input order so that floating point sums
//! downstream do not depend on the thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{AqcError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
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
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => items.par_iter().map(f).collect(),
            _ => items.iter().map(f).collect(),
        }
    }

    pub fn try_map<T, R, F>(self, items: &[T], f: F) -> Result<Vec<R>>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> Result<R> + Sync + Send,
    {
        self.map(items, f).into_iter().collect()
    }
}

/// Caps the global worker pool. Has no effect without the `parallel`
/// feature. Fails if the pool was already initialised.
pub fn configure_threads(n: usize) -> Result<()> {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| AqcError::ResourceLimit(e.to_string()))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        Ok(())
    }
}

/// Reads `AQC_THREADS` and caps the pool accordingly.
pub fn configure_from_env() -> Result<()> {
    match std::env::var("AQC_THREADS") {
        Ok(v) => {
            let n = v.trim().parse().map_err(|_| AqcError::Parse(format!("AQC_THREADS={v:?}")))?;
            configure_threads(n)
        }
        Err(_) => Ok(()),
    }
}

//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature, maps over slices run on a dedicated rayon
//! pool sized by [`Workers`]. Results are always returned in input order,
//! so callers see identical output for any worker count.

use std::num::NonZeroUsize;

/// Upper bound on worker threads for one pipeline stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Workers(NonZeroUsize);

impl Workers {
    pub const SINGLE: Workers = Workers(NonZeroUsize::MIN);

    pub fn new(n: usize) -> Self {
        Workers(NonZeroUsize::new(n.max(1)).unwrap())
    }

    /// All available cores.
    pub fn available() -> Self {
        Workers(std::thread::available_parallelism().unwrap_or(NonZeroUsize::MIN))
    }

    pub fn get(self) -> usize {
        self.0.get()
    }
}

impl Default for Workers {
    fn default() -> Self {
        Self::available()
    }
}

#[cfg(feature = "parallel")]
pub fn map<T, R, F>(items: &[T], workers: Workers, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    if workers.get() == 1 || items.len() < 2 {
        return items.iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers.get()).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(e) => {
            log::warn!("falling back to sequential map: {e}");
            items.iter().map(f).collect()
        }
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, R, F>(items: &[T], _workers: Workers, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

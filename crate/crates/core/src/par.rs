//! Data-parallel helpers with a sequential fallback.
//!
//! Every helper preserves input order, so results are identical in both
//! modes. Without the `parallel` feature, [`ExecMode::Parallel`] runs
//! sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this many items the helpers stay on the calling thread.
#[cfg(feature = "parallel")]
const MIN_PARALLEL_ITEMS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    Parallel,
}

impl Default for ExecMode {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            ExecMode::Parallel
        } else {
            ExecMode::Sequential
        }
    }
}

#[cfg(feature = "parallel")]
impl ExecMode {
    fn go_parallel(self, len: usize) -> bool {
        self == ExecMode::Parallel && len >= MIN_PARALLEL_ITEMS
    }
}

pub(crate) fn map<T, U, F>(mode: ExecMode, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.go_parallel(items.len()) {
        return items.par_iter().map(f).collect();
    }
    let _ = mode;
    items.iter().map(f).collect()
}

pub(crate) fn flat_map<T, U, F>(mode: ExecMode, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Vec<U> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.go_parallel(items.len()) {
        return items.par_iter().flat_map_iter(f).collect();
    }
    let _ = mode;
    items.iter().flat_map(f).collect()
}

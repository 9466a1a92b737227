//! Execution mode for the data-parallel loops.
//!
//! With the `parallel` feature (default) the batch helpers dispatch to rayon
//! when asked for [`Exec::Parallel`]. Without the feature every call runs
//! sequentially, so results never depend on the mode: all helpers preserve
//! input order and each work item is computed independently.

use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};

static SEQUENTIAL: AtomicBool = AtomicBool::new(false);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// True when work will actually be spread over the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Process-wide mode used by the inner loops (FFT rows, direct sums) that
/// do not take an explicit [`Exec`].
pub fn global() -> Exec {
    if SEQUENTIAL.load(Ordering::Relaxed) {
        Exec::Sequential
    } else {
        Exec::Parallel
    }
}

pub fn set_global(exec: Exec) {
    SEQUENTIAL.store(exec == Exec::Sequential, Ordering::Relaxed);
}

/// Order-preserving map over a slice.
pub fn map<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Order-preserving map over `0..n`.
pub fn map_range<R, F>(exec: Exec, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Apply `f` to every contiguous chunk of `data` of length `chunk`.
pub fn for_each_chunk_mut<T, F>(exec: Exec, data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(&mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        data.par_chunks_mut(chunk).for_each(f);
        return;
    }
    let _ = exec;
    data.chunks_mut(chunk).for_each(f);
}

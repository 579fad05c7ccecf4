//! Fan-out of independent work items (boundary pairs, scan points).
//!
//! The core crate only ships [`Serial`]; the `qaction` crate provides a
//! thread-pool executor. Results are always returned in index order, so the
//! choice of executor never changes the numbers.

use alloc::vec::Vec;

pub trait Executor: Sync {
    fn map_indexed<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

impl Executor for Serial {
    fn map_indexed<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

use alloc::vec::Vec;

/// Evaluates `f(i)` for every path index `i < n`, returning results in index
/// order. Implementations may run the closures concurrently; callers fold
/// the returned slots sequentially.
pub trait Ensemble: Sync {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Single-threaded ensemble.
#[derive(Debug, Default, Clone, Copy)]
pub struct Sequential;

impl Ensemble for Sequential {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

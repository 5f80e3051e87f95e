//! Data-parallel helpers.
//!
//! With the `parallel` feature these dispatch to rayon; without it, or inside
//! [`sequential`], they run on the calling thread. Every helper returns results
//! in index order, so reductions done by the caller are deterministic.

use std::cell::Cell;

thread_local! {
    static FORCE_SEQUENTIAL: Cell<bool> = const { Cell::new(false) };
}

/// Runs `f` with all helpers in this module forced onto the calling thread.
pub fn sequential<R>(f: impl FnOnce() -> R) -> R {
    let prev = FORCE_SEQUENTIAL.with(|c| c.replace(true));
    let out = f();
    FORCE_SEQUENTIAL.with(|c| c.set(prev));
    out
}

#[cfg(feature = "parallel")]
#[inline]
fn parallel_enabled(work: usize) -> bool {
    work > 1 && !FORCE_SEQUENTIAL.with(|c| c.get())
}

/// Configures the global pool from `MFE_THREADS` when set. Safe to call more than once.
pub fn init_from_env() {
    #[cfg(feature = "parallel")]
    if let Some(n) = std::env::var("MFE_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// `(0..n).map(f).collect()`, possibly in parallel.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel_enabled(n) {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

/// `items.iter().map(f).collect()`, possibly in parallel.
pub fn map_slice<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel_enabled(items.len()) {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    items.iter().map(f).collect()
}

/// Fills `out[i] = f(i)`, possibly in parallel. Used by row-wise kernels.
pub fn fill_indexed<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel_enabled(out.len() / 512) {
        use rayon::prelude::*;
        out.par_iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
        return;
    }
    for (i, o) in out.iter_mut().enumerate() {
        *o = f(i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_range_preserves_order() {
        let v = map_range(1000, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i));
    }

    #[test]
    fn sequential_scope_matches_parallel() {
        let a = map_range(257, |i| (i as f64).sqrt());
        let b = sequential(|| map_range(257, |i| (i as f64).sqrt()));
        assert_eq!(a, b);
    }

    #[test]
    fn fill_indexed_writes_every_slot() {
        let mut out = vec![0usize; 5000];
        fill_indexed(&mut out, |i| i + 1);
        assert!(out.iter().enumerate().all(|(i, &x)| x == i + 1));
    }
}

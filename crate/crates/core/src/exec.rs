//! Order-preserving parallel map helpers.
//!
//! With the `parallel` feature (default) the maps run on the rayon pool;
//! without it they fall back to plain sequential iteration. Every helper
//! returns results in input order, so floating-point reductions performed on
//! the collected output are identical regardless of thread count. Callers
//! must never fold floats inside a parallel reduction directly.

/// Sequential map used as the fallback path and as the benchmark baseline.
pub fn map_collect_seq<T, U>(items: &[T], f: impl Fn(&T) -> U) -> Vec<U> {
    items.iter().map(f).collect()
}

/// Sequential indexed map over `0..n`.
pub fn map_range_seq<U>(n: usize, f: impl Fn(usize) -> U) -> Vec<U> {
    (0..n).map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_collect<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_collect<T, U>(items: &[T], f: impl Fn(&T) -> U) -> Vec<U> {
    map_collect_seq(items, f)
}

#[cfg(feature = "parallel")]
pub fn map_range<U: Send>(n: usize, f: impl Fn(usize) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_range<U>(n: usize, f: impl Fn(usize) -> U) -> Vec<U> {
    map_range_seq(n, f)
}

/// Environment variable that caps the worker thread count.
pub const THREADS_ENV: &str = "SPARSE_STRUCTURE_THREADS";

/// Installs a global thread pool honoring `SPARSE_STRUCTURE_THREADS`.
///
/// Call once at process start. Does nothing if the variable is unset or the
/// pool was already built; without the `parallel` feature this is a no-op.
pub fn configure_threads_from_env() {
    #[cfg(feature = "parallel")]
    {
        if let Ok(raw) = std::env::var(THREADS_ENV) {
            if let Ok(n) = raw.trim().parse::<usize>() {
                if n >= 1 {
                    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
                }
            }
        }
    }
}

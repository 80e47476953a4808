//! Feature-gated data-parallel helpers.
//!
//! With the `parallel` feature the index maps fan out on the global rayon
//! pool; without it they degrade to plain sequential loops. Outputs are
//! ordered by index either way, so callers see identical results.

#[cfg(feature = "parallel")]
pub fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Send + Sync,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Send + Sync,
{
    map_indexed_sequential(n, f)
}

/// Sequential fallback, always available (the benches compare against it).
pub fn map_indexed_sequential<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

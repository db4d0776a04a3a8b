//! Data-parallel helpers with a sequential fallback.
//!
//! Every heavy loop in the crate runs through these functions. With the
//! `parallel` feature (default) they dispatch to rayon; without it they run
//! plain sequential loops. Results are identical either way: each index is
//! computed independently and collected in index order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n` and collects the results in index order.
#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
where
    F: Fn(usize) -> R,
{
    (0..n).map(f).collect()
}

/// Fills `out[i] = f(i)` for every element of `out`.
#[cfg(feature = "parallel")]
pub(crate) fn fill_indexed<F>(out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    out.par_iter_mut().enumerate().for_each(|(i, v)| *v = f(i));
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn fill_indexed<F>(out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64,
{
    for (i, v) in out.iter_mut().enumerate() {
        *v = f(i);
    }
}

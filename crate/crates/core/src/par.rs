//! Node-parallel helpers.
//!
//! With the `parallel` feature these run on the rayon pool, otherwise they are
//! plain loops. Reductions are always split into fixed chunks of
//! [`REDUCTION_CHUNK`] nodes whose partial sums are combined left to right, so
//! the floating-point result never depends on scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use std::sync::Mutex;

/// Number of consecutive nodes summed sequentially before partials are combined.
pub const REDUCTION_CHUNK: usize = 4096;

/// Calls `f(node, slot)` for every node, where `slot` is the node's `width`-sized
/// window of `out`.
pub fn fill_nodes<F>(out: &mut [f64], width: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    assert!(width > 0 && out.len().is_multiple_of(width));
    #[cfg(feature = "parallel")]
    out.par_chunks_mut(width)
        .enumerate()
        .for_each(|(i, c)| f(i, c));
    #[cfg(not(feature = "parallel"))]
    out.chunks_mut(width).enumerate().for_each(|(i, c)| f(i, c));
}

/// Fallible [`fill_nodes`]. On failure the error of the lowest failing node is
/// returned, independent of scheduling.
pub fn try_fill_nodes<E, F>(out: &mut [f64], width: usize, f: F) -> Result<(), E>
where
    E: Send,
    F: Fn(usize, &mut [f64]) -> Result<(), E> + Sync + Send,
{
    let first: Mutex<Option<(usize, E)>> = Mutex::new(None);
    fill_nodes(out, width, |i, slot| {
        if let Err(e) = f(i, slot) {
            let mut guard = first.lock().unwrap();
            match &*guard {
                Some((j, _)) if *j <= i => {}
                _ => *guard = Some((i, e)),
            }
        }
    });
    match first.into_inner().unwrap() {
        Some((_, e)) => Err(e),
        None => Ok(()),
    }
}

/// Maps every index in `0..len` in order.
pub fn map_indices<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Deterministic sum of `f(i)` over `0..len`.
pub fn sum_indices<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = len.div_ceil(REDUCTION_CHUNK);
    let partials = map_indices(chunks, |c| {
        let lo = c * REDUCTION_CHUNK;
        let hi = (lo + REDUCTION_CHUNK).min(len);
        (lo..hi).map(&f).sum::<f64>()
    });
    partials.into_iter().sum()
}

/// Deterministic maximum of `f(i)` over `0..len` (NaN propagates).
pub fn max_indices<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = len.div_ceil(REDUCTION_CHUNK);
    let partials = map_indices(chunks, |c| {
        let lo = c * REDUCTION_CHUNK;
        let hi = (lo + REDUCTION_CHUNK).min(len);
        (lo..hi).map(&f).fold(f64::NEG_INFINITY, nan_max)
    });
    partials.into_iter().fold(f64::NEG_INFINITY, nan_max)
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// Index of the first `i` in `0..len` with `pred(i)`, scanning in order.
pub fn position_first<F>(len: usize, pred: F) -> Option<usize>
where
    F: Fn(usize) -> bool + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().position_first(pred)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).position(pred)
    }
}

//! Data-parallel helpers with a sequential fallback.
//!
//! Every reduction is evaluated as a fixed sequence of chunk partials that
//! are then combined left to right, so the floating-point result does not
//! depend on the thread count or on whether the `parallel` feature is on.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length for reductions. Part of the numerical contract: changing it
/// changes round-off in dot products.
pub const CHUNK: usize = 2048;

/// Whether the crate was built with rayon.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

/// Number of worker threads in use (1 without the `parallel` feature).
pub fn workers() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// `(0..n).map(f).collect()`, in parallel when enabled.
pub fn map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Maps over a slice.
pub fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Overwrites `out[i] = f(i)`.
pub fn fill<F>(out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        out.par_iter_mut().enumerate().for_each(|(i, v)| *v = f(i));
    }
    #[cfg(not(feature = "parallel"))]
    {
        out.iter_mut().enumerate().for_each(|(i, v)| *v = f(i));
    }
}

/// Applies `f(i, &mut out[i])`.
pub fn for_each_mut<F>(out: &mut [f64], f: F)
where
    F: Fn(usize, &mut f64) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        out.par_iter_mut().enumerate().for_each(|(i, v)| f(i, v));
    }
    #[cfg(not(feature = "parallel"))]
    {
        out.iter_mut().enumerate().for_each(|(i, v)| f(i, v));
    }
}

/// Applies `f(r, row)` to consecutive rows of length `width`.
pub fn for_rows_mut<F>(out: &mut [f64], width: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        out.par_chunks_mut(width)
            .enumerate()
            .for_each(|(r, row)| f(r, row));
    }
    #[cfg(not(feature = "parallel"))]
    {
        out.chunks_mut(width)
            .enumerate()
            .for_each(|(r, row)| f(r, row));
    }
}

fn chunk_partials<F>(n: usize, f: F, init: f64, op: fn(f64, f64) -> f64) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    map(chunks, |c| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(n);
        (lo..hi).fold(init, |acc, i| op(acc, f(i)))
    })
}

/// Deterministic sum of `f(i)` over `0..n`.
pub fn sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    chunk_partials(n, f, 0.0, |a, b| a + b).into_iter().sum()
}

/// Maximum of `f(i)`; `-inf` for an empty range. NaN values are skipped.
pub fn max<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    chunk_partials(n, f, f64::NEG_INFINITY, f64::max)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Minimum of `f(i)`; `+inf` for an empty range.
pub fn min<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    chunk_partials(n, f, f64::INFINITY, f64::min)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// Deterministic dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    sum(a.len(), |i| a[i] * b[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_matches_chunked_sequential_order() {
        let n = 3 * CHUNK + 17;
        let f = |i: usize| ((i as f64) * 0.37).sin() * 1e-3 + 1.0 / (1.0 + i as f64);
        let mut expect = 0.0;
        for c in 0..n.div_ceil(CHUNK) {
            let part: f64 = (c * CHUNK..((c + 1) * CHUNK).min(n)).map(f).sum();
            expect += part;
        }
        assert_eq!(sum(n, f).to_bits(), expect.to_bits());
    }

    #[test]
    fn empty_reductions() {
        assert_eq!(sum(0, |_| 1.0), 0.0);
        assert_eq!(max(0, |_| 1.0), f64::NEG_INFINITY);
        assert_eq!(min(0, |_| 1.0), f64::INFINITY);
    }

    #[test]
    fn rows() {
        let mut v = vec![0.0; 12];
        for_rows_mut(&mut v, 4, |r, row| {
            row.iter_mut()
                .enumerate()
                .for_each(|(i, x)| *x = (10 * r + i) as f64)
        });
        assert_eq!(v[9], 21.0);
    }

    #[test]
    fn extremes() {
        assert_eq!(max(5000, |i| i as f64), 4999.0);
        assert_eq!(min(5000, |i| (i as f64) - 3.0), -3.0);
    }
}

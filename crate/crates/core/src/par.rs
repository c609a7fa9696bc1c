//! Data-parallel helpers. With the `parallel` feature the index-parallel map
//! runs on rayon; without it every path is sequential. Reductions are always
//! performed over fixed-size chunks in index order, so results are
//! bit-identical regardless of worker count or feature selection.

/// Samples folded together sequentially before chunk partials are combined.
pub const REDUCE_CHUNK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Falls back to sequential when built without the `parallel` feature.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// `(0..n).map(f).collect()`, possibly across threads. Output order is index order.
pub fn map_indexed<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Sum of `f(i)` vectors (each of length `len`) for `i in 0..n`.
///
/// Chunk partials are formed in index order and then added left to right, so
/// the floating point result does not depend on scheduling.
pub fn sum_vectors<F>(exec: Execution, n: usize, len: usize, f: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    let chunks = n.div_ceil(REDUCE_CHUNK);
    let partials = map_indexed(exec, chunks, |c| {
        let mut acc = vec![0.0; len];
        let end = ((c + 1) * REDUCE_CHUNK).min(n);
        for i in c * REDUCE_CHUNK..end {
            f(i, &mut acc);
        }
        acc
    });
    let mut total = vec![0.0; len];
    for p in partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        let v = map_indexed(Execution::Parallel, 100, |i| i * 2);
        assert_eq!(v, (0..100).map(|i| i * 2).collect::<Vec<_>>());
    }

    #[test]
    fn sum_matches_between_modes() {
        let f = |i: usize, acc: &mut [f64]| {
            for (j, a) in acc.iter_mut().enumerate() {
                *a += ((i * 31 + j) as f64).sin() * 1e-3;
            }
        };
        let a = sum_vectors(Execution::Sequential, 37, 5, f);
        let b = sum_vectors(Execution::Parallel, 37, 5, f);
        assert_eq!(a, b);
    }

    #[test]
    fn empty_sum_is_zero() {
        assert_eq!(sum_vectors(Execution::Parallel, 0, 3, |_, _| {}), vec![0.0; 3]);
    }
}

//! Execution policy for the data-parallel loops.
//!
//! Sums are split into fixed-size chunks whose partials are combined by a
//! fixed-order pairwise tree. The partition does not depend on the number of
//! workers, so parallel and sequential runs produce bit-identical results.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Records per reduction chunk.
pub const CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, otherwise runs
    /// sequentially.
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

fn chunks(n: usize) -> Vec<Range<usize>> {
    (0..n.div_ceil(CHUNK))
        .map(|c| c * CHUNK..((c + 1) * CHUNK).min(n))
        .collect()
}

/// Order-preserving map over `0..n`.
pub fn map<T, F>(exec: Exec, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => (0..n).into_par_iter().map(f).collect(),
        _ => (0..n).map(f).collect(),
    }
}

/// Pairwise reduction in a fixed order.
pub fn tree_sum(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    while v.len() > 1 {
        v = v
            .chunks(2)
            .map(|p| if p.len() == 2 { p[0] + p[1] } else { p[0] })
            .collect();
    }
    v[0]
}

fn tree_sum_vec(mut v: Vec<Vec<f64>>, len: usize) -> Vec<f64> {
    if v.is_empty() {
        return vec![0.0; len];
    }
    while v.len() > 1 {
        let mut next = Vec::with_capacity(v.len().div_ceil(2));
        let mut it = v.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
            }
            next.push(a);
        }
        v = next;
    }
    v.pop().unwrap()
}

/// `Σ f(chunk)` over `0..n`, where `f` sums one chunk sequentially.
pub fn chunked_sum<F>(exec: Exec, n: usize, f: F) -> f64
where
    F: Fn(Range<usize>) -> f64 + Sync + Send,
{
    let ranges = chunks(n);
    tree_sum(map(exec, ranges.len(), |c| f(ranges[c].clone())))
}

/// Vector-valued [`chunked_sum`]: `f` accumulates one chunk into a zeroed
/// buffer of length `len`.
pub fn chunked_sum_vec<F>(exec: Exec, n: usize, len: usize, f: F) -> Vec<f64>
where
    F: Fn(Range<usize>, &mut [f64]) + Sync + Send,
{
    let ranges = chunks(n);
    let partials = map(exec, ranges.len(), |c| {
        let mut buf = vec![0.0; len];
        f(ranges[c].clone(), &mut buf);
        buf
    });
    tree_sum_vec(partials, len)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_bitwise() {
        let n = 10_007;
        let term = |i: usize| ((i as f64) * 0.37).sin() * 1e3 + 1.0 / (i as f64 + 1.0);
        let f = |r: Range<usize>| r.map(term).sum::<f64>();
        let a = chunked_sum(Exec::Sequential, n, f);
        let b = chunked_sum(Exec::Parallel, n, f);
        assert_eq!(a.to_bits(), b.to_bits());

        let g = |r: Range<usize>, buf: &mut [f64]| {
            for i in r {
                buf[i % 3] += term(i);
            }
        };
        assert_eq!(
            chunked_sum_vec(Exec::Sequential, n, 3, g),
            chunked_sum_vec(Exec::Parallel, n, 3, g)
        );
    }

    #[test]
    fn tree_sum_small_cases() {
        assert_eq!(tree_sum(vec![]), 0.0);
        assert_eq!(tree_sum(vec![2.0]), 2.0);
        assert_eq!(tree_sum(vec![1.0, 2.0, 3.0]), 6.0);
        assert_eq!(chunked_sum_vec(Exec::Parallel, 0, 2, |_, _| {}), vec![0.0, 0.0]);
    }
}

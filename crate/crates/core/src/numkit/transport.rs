//! Sorting-based 1D optimal transport.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// 1-Wasserstein distance between two equal-length 1D samples, together with
/// the optimal matching: `matching[i]` is the index in `b` paired with `a[i]`.
///
/// The distance is the mean absolute difference of rank-matched values; ties
/// are broken by original index (stable sort) so the matching is
/// deterministic.
pub fn wasserstein1_1d<T: Real>(a: &[T], b: &[T]) -> Result<(T, Vec<usize>)> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            context: "wasserstein1_1d",
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::contract("wasserstein1_1d requires non-empty inputs"));
    }
    let order = |xs: &[T]| -> Vec<usize> {
        let mut idx: Vec<usize> = (0..xs.len()).collect();
        idx.sort_by(|&i, &j| xs[i].partial_cmp(&xs[j]).expect("finite values"));
        idx
    };
    let ia = order(a);
    let ib = order(b);
    let mut matching = vec![0usize; a.len()];
    let mut total = T::zero();
    for rank in 0..a.len() {
        let i = ia[rank];
        let j = ib[rank];
        matching[i] = j;
        total += (a[i] - b[j]).abs();
    }
    Ok((total / T::of(a.len() as f64), matching))
}

use std::collections::BTreeMap;

use super::{DistanceMatrix, SegmentationError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Silhouette<T> {
    /// Per-item width, in distance-matrix order.
    pub values: Vec<T>,
    pub mean: T,
}

/// Silhouette widths `(b − a) / max(a, b)`; members of singleton clusters score 0.
pub fn silhouette<T: Scalar>(dm: &DistanceMatrix<T>, labels: &[usize]) -> Result<Silhouette<T>, SegmentationError> {
    let n = dm.len();
    if labels.len() != n {
        return Err(SegmentationError::LabelMismatch {
            labels: labels.len(),
            items: n,
        });
    }
    let mut compact: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in labels {
        let next = compact.len();
        compact.entry(l).or_insert(next);
    }
    let k = compact.len();
    if k < 2 {
        return Err(SegmentationError::SingleCluster);
    }
    let cluster: Vec<usize> = labels.iter().map(|l| compact[l]).collect();
    let mut counts = vec![0usize; k];
    for &c in &cluster {
        counts[c] += 1;
    }

    let values: Vec<T> = (0..n)
        .map(|i| {
            let own = cluster[i];
            if counts[own] == 1 {
                return T::zero();
            }
            let mut sums = vec![T::zero(); k];
            for j in 0..n {
                if j != i {
                    sums[cluster[j]] = sums[cluster[j]] + dm.get(i, j);
                }
            }
            let a = sums[own] / T::of_usize(counts[own] - 1);
            let b = (0..k)
                .filter(|&c| c != own)
                .map(|c| sums[c] / T::of_usize(counts[c]))
                .fold(T::infinity(), T::min);
            let m = a.max(b);
            if m > T::zero() {
                (b - a) / m
            } else {
                T::zero()
            }
        })
        .collect();
    let mean = values.iter().copied().sum::<T>() / T::of_usize(n);
    Ok(Silhouette { values, mean })
}

use super::{cut_dendrogram, silhouette, ClusterSolution, Dendrogram, DistanceMatrix, SegmentationError};
use crate::scalar::Scalar;

/// Cut the dendrogram at every `k` in `k_min..=k_max` and keep the cut with the
/// highest mean silhouette width; ties go to the smaller `k`.
pub fn select_k<T: Scalar>(
    dm: &DistanceMatrix<T>,
    dendro: &Dendrogram<T>,
    k_min: usize,
    k_max: usize,
) -> Result<ClusterSolution<T>, SegmentationError> {
    let n = dm.len();
    if k_min < 2 || k_min > k_max {
        return Err(SegmentationError::InvalidK { k: k_min, n });
    }
    if n <= k_max {
        return Err(SegmentationError::TooFewTrips {
            needed: k_max + 1,
            got: n,
        });
    }
    let mut scores = Vec::with_capacity(k_max - k_min + 1);
    let mut best: Option<(usize, Vec<usize>, T)> = None;
    for k in k_min..=k_max {
        let labels = cut_dendrogram(dendro, k)?;
        let s = silhouette(dm, &labels)?;
        scores.push((k, s.mean));
        if best.as_ref().is_none_or(|(_, _, m)| s.mean > *m) {
            best = Some((k, labels, s.mean));
        }
    }
    let (k, labels, mean) = best.expect("non-empty k range");
    Ok(ClusterSolution {
        k,
        assignment: dm.ids().iter().cloned().zip(labels).collect(),
        mean_silhouette: mean,
        silhouette_by_k: scores,
        profiles: Vec::new(),
    })
}

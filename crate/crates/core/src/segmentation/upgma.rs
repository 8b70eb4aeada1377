use serde::Serialize;

use super::{DistanceMatrix, SegmentationError};
use crate::scalar::{cmp, Scalar};

/// One agglomeration step. Node ids `0..n` are leaves (in distance-matrix order);
/// the merge at position `s` creates node `n + s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Merge<T> {
    pub left: usize,
    pub right: usize,
    pub height: T,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dendrogram<T> {
    pub leaves: Vec<String>,
    pub merges: Vec<Merge<T>>,
}

impl<T: Scalar> Dendrogram<T> {
    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }
}

/// Working copy of the strict upper triangle indexed by cluster slot.
struct Triangle<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> Triangle<T> {
    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        a * self.n - a * (a + 1) / 2 + (b - a - 1)
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> T {
        self.data[self.idx(i, j)]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: T) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }
}

/// Average-linkage (UPGMA) agglomeration.
///
/// The closest pair of active clusters is merged at each step; ties are broken by the
/// lexicographically smallest `(left, right)` node-id pair. The distance from a merged
/// cluster to any other is the size-weighted mean of its parts' distances, which equals
/// the mean over all cross pairs of leaves.
pub fn upgma<T: Scalar>(dm: &DistanceMatrix<T>) -> Dendrogram<T> {
    let n = dm.len();
    let mut tri = Triangle {
        n,
        data: dm.upper().to_vec(),
    };
    let mut active = vec![true; n];
    let mut node = (0..n).collect::<Vec<usize>>();
    let mut size = vec![1usize; n];
    let mut nn = vec![usize::MAX; n];
    let mut nn_d = vec![T::infinity(); n];

    // nearest active neighbour of `i`, ties to the smaller node id
    let scan = |i: usize, tri: &Triangle<T>, active: &[bool], node: &[usize]| -> (usize, T) {
        let mut best = (usize::MAX, T::infinity());
        for j in 0..n {
            if j == i || !active[j] {
                continue;
            }
            let d = tri.get(i, j);
            let better = best.0 == usize::MAX || d < best.1 || (d == best.1 && node[j] < node[best.0]);
            if better {
                best = (j, d);
            }
        }
        best
    };

    for i in 0..n {
        let (j, d) = scan(i, &tri, &active, &node);
        nn[i] = j;
        nn_d[i] = d;
    }

    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    let mut last_height = T::zero();
    for step in 0..n.saturating_sub(1) {
        let mut a = usize::MAX;
        let mut key = (T::infinity(), usize::MAX, usize::MAX);
        for i in 0..n {
            if !active[i] || nn[i] == usize::MAX {
                continue;
            }
            let (lo, hi) = {
                let (x, y) = (node[i], node[nn[i]]);
                (x.min(y), x.max(y))
            };
            let cand = (nn_d[i], lo, hi);
            let better = a == usize::MAX
                || cmp(cand.0, key.0)
                    .then(cand.1.cmp(&key.1))
                    .then(cand.2.cmp(&key.2))
                    .is_lt();
            if better {
                a = i;
                key = cand;
            }
        }
        let b = nn[a];
        let (sa, sb) = (size[a], size[b]);
        let height = key.0.max(last_height);
        last_height = height;
        merges.push(Merge {
            left: key.1,
            right: key.2,
            height,
            size: sa + sb,
        });

        // merged cluster lives in slot `a`
        active[b] = false;
        let (wa, wb, wt) = (T::of_usize(sa), T::of_usize(sb), T::of_usize(sa + sb));
        for k in 0..n {
            if active[k] && k != a {
                let d = (wa * tri.get(k, a) + wb * tri.get(k, b)) / wt;
                tri.set(k, a, d);
            }
        }
        size[a] = sa + sb;
        node[a] = n + step;

        let (j, d) = scan(a, &tri, &active, &node);
        nn[a] = j;
        nn_d[a] = d;
        for k in 0..n {
            if !active[k] || k == a {
                continue;
            }
            if nn[k] == a || nn[k] == b {
                let (j, d) = scan(k, &tri, &active, &node);
                nn[k] = j;
                nn_d[k] = d;
            } else if tri.get(k, a) < nn_d[k] {
                nn[k] = a;
                nn_d[k] = tri.get(k, a);
            }
        }
    }

    Dendrogram {
        leaves: dm.ids().to_vec(),
        merges,
    }
}

/// Cluster labels `1..=k` per leaf after undoing the last `k − 1` merges.
/// Labels follow the order of each cluster's smallest leaf (its representative).
pub fn cut_dendrogram<T: Scalar>(dendro: &Dendrogram<T>, k: usize) -> Result<Vec<usize>, SegmentationError> {
    let n = dendro.leaf_count();
    if k < 1 || k > n {
        return Err(SegmentationError::InvalidK { k, n });
    }
    let total = 2 * n - 1;
    let mut parent: Vec<usize> = (0..total).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (s, m) in dendro.merges.iter().take(n - k).enumerate() {
        let id = n + s;
        let (l, r) = (find(&mut parent, m.left), find(&mut parent, m.right));
        parent[l] = id;
        parent[r] = id;
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    let mut label_of_root = std::collections::HashMap::new();
    let mut labels = Vec::with_capacity(n);
    for r in roots {
        // leaves are visited in index order, so first sighting is the representative
        let next = label_of_root.len() + 1;
        labels.push(*label_of_root.entry(r).or_insert(next));
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dm(rows: &[&[f64]]) -> DistanceMatrix<f64> {
        let ids = (0..rows.len()).map(|i| format!("t{i}")).collect();
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        DistanceMatrix::from_square(ids, &rows).unwrap()
    }

    /// d(0,1)=0.1, d(2,3)=0.2, cross distances 0.6..0.9.
    fn four() -> DistanceMatrix<f64> {
        dm(&[
            &[0.0, 0.1, 0.6, 0.8],
            &[0.1, 0.0, 0.7, 0.9],
            &[0.6, 0.7, 0.0, 0.2],
            &[0.8, 0.9, 0.2, 0.0],
        ])
    }

    #[test]
    fn two_leaves() {
        let d = upgma(&dm(&[&[0.0, 0.4], &[0.4, 0.0]]));
        assert_eq!(
            d.merges,
            vec![Merge {
                left: 0,
                right: 1,
                height: 0.4,
                size: 2
            }]
        );
    }

    #[test]
    fn four_leaves_by_hand() {
        // step 1: (0,1) at 0.1 → node 4; step 2: (2,3) at 0.2 → node 5;
        // step 3: mean of {0.6,0.8,0.7,0.9} = 0.75
        let d = upgma(&four());
        assert_eq!(d.merges.len(), 3);
        assert_eq!((d.merges[0].left, d.merges[0].right), (0, 1));
        assert_eq!((d.merges[1].left, d.merges[1].right), (2, 3));
        assert_eq!((d.merges[2].left, d.merges[2].right), (4, 5));
        assert!((d.merges[0].height - 0.1).abs() < 1e-15);
        assert!((d.merges[1].height - 0.2).abs() < 1e-15);
        assert!((d.merges[2].height - 0.75).abs() < 1e-15);
        assert_eq!(d.merges[2].size, 4);
    }

    #[test]
    fn ties_go_to_smallest_pair() {
        let d = upgma(&dm(&[&[0.0, 0.5, 0.5], &[0.5, 0.0, 0.5], &[0.5, 0.5, 0.0]]));
        assert_eq!((d.merges[0].left, d.merges[0].right), (0, 1));
        assert_eq!((d.merges[1].left, d.merges[1].right), (2, 3));
    }

    #[test]
    fn cuts() {
        let d = upgma(&four());
        assert_eq!(cut_dendrogram(&d, 1).unwrap(), vec![1, 1, 1, 1]);
        assert_eq!(cut_dendrogram(&d, 4).unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(cut_dendrogram(&d, 2).unwrap(), vec![1, 1, 2, 2]);
        assert!(cut_dendrogram(&d, 0).is_err());
        assert!(cut_dendrogram(&d, 5).is_err());
    }

    #[test]
    fn single_precision_structure_matches() {
        let d64 = upgma(&four());
        let rows: Vec<Vec<f32>> = four()
            .to_square()
            .iter()
            .map(|r| r.iter().map(|&x| x as f32).collect())
            .collect();
        let dm32 = DistanceMatrix::from_square(four().ids().to_vec(), &rows).unwrap();
        let d32 = upgma(&dm32);
        for (a, b) in d64.merges.iter().zip(&d32.merges) {
            assert_eq!((a.left, a.right, a.size), (b.left, b.right, b.size));
            assert!((a.height - b.height as f64).abs() < 1e-6);
        }
    }
}

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use super::{SegmentationError, VisitVector};
use crate::scalar::Scalar;

/// Jaccard distance `1 − |a∩b| / |a∪b|`. Undefined (an error) when both sets are empty.
pub fn jaccard_distance<T: Scalar, K: Ord>(a: &BTreeSet<K>, b: &BTreeSet<K>) -> Result<T, SegmentationError> {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        return Err(SegmentationError::EmptySets);
    }
    Ok(T::one() - T::of_usize(inter) / T::of_usize(union))
}

fn sorted_jaccard<T: Scalar>(a: &[u32], b: &[u32]) -> T {
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    T::one() - T::of_usize(inter) / T::of_usize(union)
}

/// Symmetric pairwise distance matrix with a zero diagonal, stored as the
/// strict upper triangle in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix<T> {
    ids: Vec<String>,
    upper: Vec<T>,
}

#[inline]
fn tri_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

impl<T: Scalar> DistanceMatrix<T> {
    /// Build from a full square matrix, validating symmetry, zero diagonal and range [0, 1].
    pub fn from_square(ids: Vec<String>, rows: &[Vec<T>]) -> Result<Self, SegmentationError> {
        let n = ids.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(SegmentationError::InvalidMatrix("matrix is not square over ids".into()));
        }
        let mut upper = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            if rows[i][i] != T::zero() {
                return Err(SegmentationError::InvalidMatrix(format!("d({i},{i}) is not zero")));
            }
            for j in i + 1..n {
                let v = rows[i][j];
                if v != rows[j][i] {
                    return Err(SegmentationError::InvalidMatrix(format!("d({i},{j}) != d({j},{i})")));
                }
                if !(v >= T::zero() && v <= T::one()) {
                    return Err(SegmentationError::InvalidMatrix(format!(
                        "d({i},{j}) = {v} outside [0,1]"
                    )));
                }
                upper.push(v);
            }
        }
        Ok(DistanceMatrix { ids, upper })
    }

    pub(crate) fn from_upper(ids: Vec<String>, upper: Vec<T>) -> Self {
        debug_assert_eq!(upper.len(), ids.len() * ids.len().saturating_sub(1) / 2);
        DistanceMatrix { ids, upper }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => T::zero(),
            std::cmp::Ordering::Less => self.upper[tri_index(self.len(), i, j)],
            std::cmp::Ordering::Greater => self.upper[tri_index(self.len(), j, i)],
        }
    }

    pub fn to_square(&self) -> Vec<Vec<T>> {
        let n = self.len();
        (0..n).map(|i| (0..n).map(|j| self.get(i, j)).collect()).collect()
    }

    pub(crate) fn upper(&self) -> &[T] {
        &self.upper
    }
}

/// Pairwise Jaccard distances between trips' visited-object sets, rows ordered by trip id.
pub fn build_distance_matrix<T: Scalar>(vectors: &[VisitVector]) -> Result<DistanceMatrix<T>, SegmentationError> {
    if vectors.len() < 2 {
        return Err(SegmentationError::TooFewTrips {
            needed: 2,
            got: vectors.len(),
        });
    }
    let mut order: Vec<&VisitVector> = vectors.iter().collect();
    order.sort_by(|a, b| a.trip_id.cmp(&b.trip_id));
    for w in order.windows(2) {
        if w[0].trip_id == w[1].trip_id {
            return Err(SegmentationError::DuplicateTrip(w[0].trip_id.clone()));
        }
    }
    if let Some(v) = order.iter().find(|v| v.visited.is_empty()) {
        return Err(SegmentationError::EmptyVisitSet(v.trip_id.clone()));
    }

    let mut intern: HashMap<&str, u32> = HashMap::new();
    let sets: Vec<Vec<u32>> = order
        .iter()
        .map(|v| {
            let mut s: Vec<u32> = v
                .visited
                .iter()
                .map(|o| {
                    let next = intern.len() as u32;
                    *intern.entry(o.as_str()).or_insert(next)
                })
                .collect();
            s.sort_unstable();
            s
        })
        .collect();

    let n = sets.len();
    let rows: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|i| (i + 1..n).map(|j| sorted_jaccard(&sets[i], &sets[j])).collect())
        .collect();
    let upper = rows.into_iter().flatten().collect();
    Ok(DistanceMatrix::from_upper(
        order.iter().map(|v| v.trip_id.clone()).collect(),
        upper,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    fn vv(id: &str, items: &[&str]) -> VisitVector {
        VisitVector {
            trip_id: id.into(),
            visited: set(items),
        }
    }

    #[test]
    fn jaccard_examples() {
        let a = set(&["x", "y"]);
        assert_eq!(jaccard_distance::<f64, _>(&a, &a).unwrap(), 0.0);
        assert_eq!(jaccard_distance::<f64, _>(&a, &set(&["p", "q"])).unwrap(), 1.0);
        let d: f64 = jaccard_distance(&a, &set(&["y", "z"])).unwrap();
        assert!((d - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            jaccard_distance::<f64, String>(&BTreeSet::new(), &BTreeSet::new()),
            Err(SegmentationError::EmptySets)
        );
    }

    #[test]
    fn identical_pair_matrix() {
        let dm: DistanceMatrix<f64> =
            build_distance_matrix(&[vv("a", &["x", "y", "z"]), vv("b", &["x", "y", "z"])]).unwrap();
        assert_eq!(dm.to_square(), vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
    }

    #[test]
    fn three_vectors_hand_matrix() {
        // c = {x,y,z}, a = {x,y}, b = {y,z,w}; ids sorted a, b, c
        let dm: DistanceMatrix<f64> = build_distance_matrix(&[
            vv("c", &["x", "y", "z"]),
            vv("a", &["x", "y"]),
            vv("b", &["y", "z", "w"]),
        ])
        .unwrap();
        assert_eq!(dm.ids(), ["a", "b", "c"]);
        // a-b: ∩{y}=1, ∪=4 → 3/4 ; a-c: 2/3 → 1/3 ; b-c: ∩{y,z}=2, ∪=4 → 1/2
        let expect = [[0.0, 0.75, 1.0 / 3.0], [0.75, 0.0, 0.5], [1.0 / 3.0, 0.5, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((dm.get(i, j) - expect[i][j]).abs() < 1e-15, "({i},{j})");
            }
        }
    }

    #[test]
    fn too_few_and_empty() {
        assert!(matches!(
            build_distance_matrix::<f64>(&[vv("a", &["x"])]),
            Err(SegmentationError::TooFewTrips { .. })
        ));
        assert!(matches!(
            build_distance_matrix::<f64>(&[vv("a", &["x"]), vv("b", &[])]),
            Err(SegmentationError::EmptyVisitSet(_))
        ));
    }

    #[test]
    fn square_validation() {
        let ids = vec!["a".to_string(), "b".to_string()];
        assert!(DistanceMatrix::from_square(ids.clone(), &[vec![0.0, 0.3], vec![0.4, 0.0]]).is_err());
        assert!(DistanceMatrix::from_square(ids.clone(), &[vec![0.0, 1.3], vec![1.3, 0.0]]).is_err());
        assert!(DistanceMatrix::from_square(ids, &[vec![0.1, 0.3], vec![0.3, 0.0]]).is_err());
    }

    fn small_set() -> impl Strategy<Value = BTreeSet<u8>> {
        proptest::collection::btree_set(0u8..12, 1..8)
    }

    proptest! {
        #[test]
        fn jaccard_is_a_metric(a in small_set(), b in small_set(), c in small_set()) {
            let ab: f64 = jaccard_distance(&a, &b).unwrap();
            let ba: f64 = jaccard_distance(&b, &a).unwrap();
            let ac: f64 = jaccard_distance(&a, &c).unwrap();
            let bc: f64 = jaccard_distance(&b, &c).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(ab == 0.0, a == b);
            prop_assert!(ac <= ab + bc + 1e-12);
        }

        #[test]
        fn matrix_satisfies_invariants(sets in proptest::collection::vec(small_set(), 2..10)) {
            let vs: Vec<VisitVector> = sets.iter().enumerate().map(|(i, s)| VisitVector {
                trip_id: format!("t{i:02}"),
                visited: s.iter().map(|x| x.to_string()).collect(),
            }).collect();
            let dm: DistanceMatrix<f64> = build_distance_matrix(&vs).unwrap();
            let sq = dm.to_square();
            prop_assert!(DistanceMatrix::from_square(dm.ids().to_vec(), &sq).is_ok());
            for i in 0..vs.len() {
                for j in 0..vs.len() {
                    let direct: f64 = jaccard_distance(&vs[i].visited, &vs[j].visited).unwrap();
                    prop_assert!((sq[i][j] - direct).abs() < 1e-15);
                }
            }
        }
    }
}

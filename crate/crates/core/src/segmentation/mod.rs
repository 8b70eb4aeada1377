//! Jaccard distances over visited-object sets, UPGMA clustering, silhouette-based
//! cut selection and archetype profiling.

mod distance;
mod profile;
mod select;
mod silhouette;
mod upgma;

use std::collections::{BTreeMap, BTreeSet};

use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::ingest::CleanTrip;
use crate::scalar::Scalar;

pub use distance::{build_distance_matrix, jaccard_distance, DistanceMatrix};
pub use profile::{profile_clusters, Archetype, ArchetypeRules, ClusterProfile};
pub use select::select_k;
pub use silhouette::{silhouette, Silhouette};
pub use upgma::{cut_dendrogram, upgma, Dendrogram, Merge};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SegmentationError {
    #[error("jaccard distance is undefined for two empty sets")]
    EmptySets,
    #[error("need at least {needed} trips, got {got}")]
    TooFewTrips { needed: usize, got: usize },
    #[error("duplicate trip id `{0}`")]
    DuplicateTrip(String),
    #[error("trip `{0}` has no visited objects")]
    EmptyVisitSet(String),
    #[error("invalid distance matrix: {0}")]
    InvalidMatrix(String),
    #[error("k = {k} is out of range for {n} trips")]
    InvalidK { k: usize, n: usize },
    #[error("{labels} labels for {items} items")]
    LabelMismatch { labels: usize, items: usize },
    #[error("silhouette needs at least two clusters")]
    SingleCluster,
    #[error("assigned trip `{0}` is missing from the trip list")]
    MissingTrip(String),
}

/// Binary object-visitation vector of one trip, held as the set of visited objects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisitVector {
    pub trip_id: String,
    pub visited: BTreeSet<String>,
}

impl VisitVector {
    pub fn from_trip(trip: &CleanTrip) -> Self {
        VisitVector {
            trip_id: trip.trip_id.clone(),
            visited: trip.visited_objects().into_iter().map(str::to_owned).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterSolution<T> {
    pub k: usize,
    pub mean_silhouette: T,
    /// `(trip_id, label)` in distance-matrix order; labels are `1..=k`.
    #[serde(rename = "assignments", serialize_with = "serialize_assignment")]
    pub assignment: Vec<(String, usize)>,
    pub silhouette_by_k: Vec<(usize, T)>,
    pub profiles: Vec<ClusterProfile>,
}

impl<T: Scalar> ClusterSolution<T> {
    pub fn label_of(&self, trip_id: &str) -> Option<usize> {
        self.assignment.iter().find(|(id, _)| id == trip_id).map(|(_, l)| *l)
    }

    pub fn sizes(&self) -> BTreeMap<usize, usize> {
        let mut out = BTreeMap::new();
        for (_, l) in &self.assignment {
            *out.entry(*l).or_insert(0) += 1;
        }
        out
    }
}

fn serialize_assignment<S: Serializer>(items: &[(String, usize)], s: S) -> Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct Row<'a> {
        trip_id: &'a str,
        label: usize,
    }
    let mut seq = s.serialize_seq(Some(items.len()))?;
    for (trip_id, label) in items {
        seq.serialize_element(&Row { trip_id, label: *label })?;
    }
    seq.end()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationConfig {
    pub k_min: usize,
    pub k_max: usize,
    /// Trips above this count are subsampled, stratified by language.
    pub max_trips: usize,
    pub rules: ArchetypeRules,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        SegmentationConfig {
            k_min: 2,
            k_max: 10,
            max_trips: 20_000,
            rules: ArchetypeRules::default(),
        }
    }
}

/// Deterministic language-stratified subsample of at most `cap` trips.
///
/// Each language keeps a share proportional to its size (largest remainders get the
/// leftover slots); within a language, trips are taken at evenly spaced positions in
/// trip-id order.
pub fn stratified_subsample(trips: &[CleanTrip], cap: usize) -> Vec<&CleanTrip> {
    if trips.len() <= cap {
        return trips.iter().collect();
    }
    let mut strata: BTreeMap<&str, Vec<&CleanTrip>> = BTreeMap::new();
    for t in trips {
        strata.entry(t.language.as_str()).or_default().push(t);
    }
    for v in strata.values_mut() {
        v.sort_by(|a, b| a.trip_id.cmp(&b.trip_id));
    }
    let n = trips.len();
    let mut quota: Vec<(usize, f64, &str)> = strata
        .iter()
        .map(|(lang, v)| {
            let exact = v.len() as f64 * cap as f64 / n as f64;
            (exact.floor() as usize, exact - exact.floor(), *lang)
        })
        .collect();
    let mut left = cap - quota.iter().map(|q| q.0).sum::<usize>();
    let mut by_rem: Vec<usize> = (0..quota.len()).collect();
    by_rem.sort_by(|&a, &b| quota[b].1.total_cmp(&quota[a].1).then(quota[a].2.cmp(quota[b].2)));
    for i in by_rem {
        if left == 0 {
            break;
        }
        quota[i].0 += 1;
        left -= 1;
    }
    let mut out = Vec::with_capacity(cap);
    for (q, _, lang) in quota {
        let v = &strata[lang];
        out.extend((0..q).map(|i| v[i * v.len() / q]));
    }
    out.sort_by(|a, b| a.trip_id.cmp(&b.trip_id));
    out
}

/// Full pipeline: vectors, distances, UPGMA, silhouette-selected cut and profiles.
/// Trips dropped by subsampling stay unassigned.
pub fn segment_trips<T: Scalar>(
    trips: &[CleanTrip],
    tour_stops: &BTreeSet<String>,
    config: &SegmentationConfig,
) -> Result<(ClusterSolution<T>, Dendrogram<T>), SegmentationError> {
    let sample = stratified_subsample(trips, config.max_trips);
    let vectors: Vec<VisitVector> = sample.iter().map(|t| VisitVector::from_trip(t)).collect();
    let dm = build_distance_matrix::<T>(&vectors)?;
    let dendro = upgma(&dm);
    let solution = select_k(&dm, &dendro, config.k_min, config.k_max)?;
    let solution = profile_clusters(solution, trips, tour_stops, &config.rules)?;
    Ok((solution, dendro))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::TripEvent;

    fn trip(id: &str, lang: &str) -> CleanTrip {
        CleanTrip {
            trip_id: id.into(),
            events: vec![TripEvent {
                timestamp: 0,
                object_id: "O1".into(),
                room_id: "R1".into(),
            }],
            start_time: 0,
            duration: 600,
            language: lang.into(),
            group_size: 1,
            flagged_fraction: 0.0,
        }
    }

    #[test]
    fn subsample_keeps_language_proportions() {
        let mut trips = Vec::new();
        for i in 0..600 {
            trips.push(trip(&format!("en{i:04}"), "en"));
        }
        for i in 0..300 {
            trips.push(trip(&format!("fr{i:04}"), "fr"));
        }
        for i in 0..100 {
            trips.push(trip(&format!("ja{i:04}"), "ja"));
        }
        let s = stratified_subsample(&trips, 100);
        assert_eq!(s.len(), 100);
        let count = |l: &str| s.iter().filter(|t| t.language == l).count();
        assert_eq!((count("en"), count("fr"), count("ja")), (60, 30, 10));
        let again = stratified_subsample(&trips, 100);
        assert_eq!(s, again);
        let unique: BTreeSet<&str> = s.iter().map(|t| t.trip_id.as_str()).collect();
        assert_eq!(unique.len(), 100);
    }

    #[test]
    fn small_inputs_are_not_subsampled() {
        let trips = vec![trip("a", "en"), trip("b", "fr")];
        assert_eq!(stratified_subsample(&trips, 5).len(), 2);
    }

    #[test]
    fn json_shape() {
        let sol = ClusterSolution::<f64> {
            k: 2,
            mean_silhouette: 0.5,
            assignment: vec![("a".into(), 1), ("b".into(), 2)],
            silhouette_by_k: vec![(2, 0.5)],
            profiles: vec![],
        };
        let v = serde_json::to_value(&sol).unwrap();
        assert_eq!(v["assignments"][1]["trip_id"], "b");
        assert_eq!(v["assignments"][1]["label"], 2);
        assert_eq!(v["k"], 2);
    }
}

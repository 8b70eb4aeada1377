use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{ClusterSolution, SegmentationError};
use crate::ingest::CleanTrip;
use crate::scalar::Scalar;
use crate::stats::median;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Archetype {
    #[serde(rename = "Committed Trekker")]
    CommittedTrekker,
    #[serde(rename = "Leisurely Explorer")]
    LeisurelyExplorer,
    #[serde(rename = "Targeted Visitor")]
    TargetedVisitor,
    #[serde(rename = "Speedy Sampler")]
    SpeedySampler,
}

impl Archetype {
    pub const ALL: [Archetype; 4] = [
        Archetype::CommittedTrekker,
        Archetype::LeisurelyExplorer,
        Archetype::TargetedVisitor,
        Archetype::SpeedySampler,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Archetype::CommittedTrekker => "Committed Trekker",
            Archetype::LeisurelyExplorer => "Leisurely Explorer",
            Archetype::TargetedVisitor => "Targeted Visitor",
            Archetype::SpeedySampler => "Speedy Sampler",
        }
    }
}

impl std::fmt::Display for Archetype {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Archetype {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Archetype::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown archetype `{s}`"))
    }
}

/// Decision table mapping cluster medians to archetype names.
///
/// Tercile membership uses the mid-rank percentile of the cluster median among all
/// assigned trips. Rules are tried in order: Committed Trekker (top tercile on both duration and
/// objects), Targeted Visitor (bottom tercile objects and mostly tour-stop plays),
/// Speedy Sampler (short median duration), otherwise Leisurely Explorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchetypeRules {
    pub speedy_max_secs: f64,
    pub targeted_min_tour_share: f64,
    pub lower_tercile: f64,
    pub upper_tercile: f64,
}

impl Default for ArchetypeRules {
    fn default() -> Self {
        ArchetypeRules {
            speedy_max_secs: 900.0,
            targeted_min_tour_share: 0.5,
            lower_tercile: 1.0 / 3.0,
            upper_tercile: 2.0 / 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterProfile {
    pub label: usize,
    pub archetype: Archetype,
    pub size: usize,
    pub share: f64,
    pub median_duration: f64,
    pub median_objects: f64,
    pub median_time_per_object: f64,
    /// Fraction of the cluster's plays that land on tour-stop objects.
    pub tour_stop_share: f64,
    pub language_mix: BTreeMap<String, usize>,
}

/// Mid-rank percentile of `v` within `all`: (below + equal / 2) / n.
fn percentile_rank(all: &[f64], v: f64) -> f64 {
    let below = all.iter().filter(|&&x| x < v).count() as f64;
    let equal = all.iter().filter(|&&x| x == v).count() as f64;
    (below + equal / 2.0) / all.len().max(1) as f64
}

/// Per-cluster behavioural summary plus archetype naming.
pub fn profile_clusters<T: Scalar>(
    mut solution: ClusterSolution<T>,
    trips: &[CleanTrip],
    tour_stops: &BTreeSet<String>,
    rules: &ArchetypeRules,
) -> Result<ClusterSolution<T>, SegmentationError> {
    let by_id: HashMap<&str, &CleanTrip> = trips.iter().map(|t| (t.trip_id.as_str(), t)).collect();
    let mut members: BTreeMap<usize, Vec<&CleanTrip>> = BTreeMap::new();
    for (id, label) in &solution.assignment {
        let trip = by_id
            .get(id.as_str())
            .ok_or_else(|| SegmentationError::MissingTrip(id.clone()))?;
        members.entry(*label).or_default().push(trip);
    }
    let total = solution.assignment.len();
    let all: Vec<&CleanTrip> = members.values().flatten().copied().collect();
    let durations: Vec<f64> = all.iter().map(|t| t.duration as f64).collect();
    let objects: Vec<f64> = all.iter().map(|t| t.visited_objects().len() as f64).collect();

    solution.profiles = members
        .into_iter()
        .map(|(label, ts)| {
            let durs: Vec<f64> = ts.iter().map(|t| t.duration as f64).collect();
            let objs: Vec<f64> = ts.iter().map(|t| t.visited_objects().len() as f64).collect();
            let per: Vec<f64> = durs.iter().zip(&objs).map(|(d, o)| d / o.max(1.0)).collect();
            let plays: usize = ts.iter().map(|t| t.events.len()).sum();
            let on_tour: usize = ts
                .iter()
                .flat_map(|t| &t.events)
                .filter(|e| tour_stops.contains(&e.object_id))
                .count();
            let mut language_mix = BTreeMap::new();
            for t in &ts {
                *language_mix.entry(t.language.clone()).or_insert(0) += 1;
            }
            let median_duration = median(&durs).unwrap_or(0.0);
            let median_objects = median(&objs).unwrap_or(0.0);
            let tour_stop_share = if plays == 0 { 0.0 } else { on_tour as f64 / plays as f64 };
            let dur_rank = percentile_rank(&durations, median_duration);
            let obj_rank = percentile_rank(&objects, median_objects);
            let archetype = if dur_rank >= rules.upper_tercile && obj_rank >= rules.upper_tercile {
                Archetype::CommittedTrekker
            } else if obj_rank <= rules.lower_tercile && tour_stop_share >= rules.targeted_min_tour_share {
                Archetype::TargetedVisitor
            } else if median_duration < rules.speedy_max_secs {
                Archetype::SpeedySampler
            } else {
                Archetype::LeisurelyExplorer
            };
            ClusterProfile {
                label,
                archetype,
                size: ts.len(),
                share: ts.len() as f64 / total as f64,
                median_duration,
                median_objects,
                median_time_per_object: median(&per).unwrap_or(0.0),
                tour_stop_share,
                language_mix,
            }
        })
        .collect();
    Ok(solution)
}

//! Room-to-room movement: transition model, stair-penalized distances, penalty
//! fitting, entrance-restart PageRank, drop-off rates and popularity drivers.

mod dropoff;
mod fit;
mod pagerank;
mod paths;
mod popularity;
#[cfg(test)]
pub(crate) mod testutil;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::CleanTrip;
use crate::museum::MuseumGraph;
use crate::scalar::Scalar;

pub use dropoff::{dropoff_rates, Dropoff};
pub use fit::{fit_stair_penalty, PenaltyFit, PenaltyGrid};
pub use pagerank::{flow_pagerank, pagerank_with_teleport, PageRank};
pub use paths::{penalized_shortest_paths, PenalizedDistanceField, PenaltyParams};
pub use popularity::{popularity_distance_fit, PopularityReport, RoomPopularity};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("unknown room `{0}`")]
    UnknownRoom(String),
    #[error("transition model has no rooms")]
    EmptyModel,
    #[error("pagerank did not converge after {iterations} iterations (last delta {delta:e})")]
    NoConvergence { iterations: usize, delta: f64 },
    #[error("need at least {needed} rooms, got {got}")]
    TooFewRooms { needed: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Observed room-to-room movement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionModel<T> {
    /// Room ids in graph order; all matrices are indexed by position here.
    pub rooms: Vec<String>,
    pub counts: Vec<Vec<u64>>,
    /// Row-normalized counts; rows without outgoing transitions are all zero.
    pub probs: Vec<Vec<T>>,
    /// Number of distinct trips entering each room.
    pub room_visits: Vec<u64>,
    #[serde(skip)]
    pub(crate) trip_paths: Vec<Vec<usize>>,
}

impl<T: Scalar> TransitionModel<T> {
    pub fn room_index(&self, id: &str) -> Option<usize> {
        self.rooms.iter().position(|r| r == id)
    }

    pub fn visits(&self, id: &str) -> Option<u64> {
        self.room_index(id).map(|i| self.room_visits[i])
    }

    /// Room sequence of each trip with consecutive repeats collapsed.
    pub fn trip_paths(&self) -> &[Vec<usize>] {
        &self.trip_paths
    }

    /// `(from, to, count)` for every observed transition.
    pub fn edge_list(&self) -> Vec<(&str, &str, u64)> {
        let mut out = Vec::new();
        for (i, row) in self.counts.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if c > 0 {
                    out.push((self.rooms[i].as_str(), self.rooms[j].as_str(), c));
                }
            }
        }
        out
    }
}

fn room_path(trip: &CleanTrip, graph: &MuseumGraph) -> Vec<usize> {
    let mut path: Vec<usize> = Vec::new();
    for e in &trip.events {
        if let Some(r) = graph.room_index(&e.room_id) {
            if path.last() != Some(&r) {
                path.push(r);
            }
        }
    }
    path
}

/// Counts consecutive distinct-room pairs across trips and row-normalizes them.
pub fn build_transition_model<T: Scalar>(trips: &[CleanTrip], graph: &MuseumGraph) -> TransitionModel<T> {
    let n = graph.room_count();
    let trip_paths: Vec<Vec<usize>> = trips.par_iter().map(|t| room_path(t, graph)).collect();
    let (counts, room_visits) = trip_paths
        .par_iter()
        .fold(
            || (vec![0u64; n * n], vec![0u64; n]),
            |(mut c, mut v), path| {
                for w in path.windows(2) {
                    c[w[0] * n + w[1]] += 1;
                }
                let mut seen = vec![false; n];
                for &r in path {
                    if !seen[r] {
                        seen[r] = true;
                        v[r] += 1;
                    }
                }
                (c, v)
            },
        )
        .reduce(
            || (vec![0u64; n * n], vec![0u64; n]),
            |(mut c1, mut v1), (c2, v2)| {
                c1.iter_mut().zip(c2).for_each(|(a, b)| *a += b);
                v1.iter_mut().zip(v2).for_each(|(a, b)| *a += b);
                (c1, v1)
            },
        );
    let counts: Vec<Vec<u64>> = counts.chunks(n.max(1)).take(n).map(|r| r.to_vec()).collect();
    let probs = counts
        .iter()
        .map(|row| {
            let total: u64 = row.iter().sum();
            row.iter()
                .map(|&c| {
                    if total == 0 {
                        T::zero()
                    } else {
                        T::of(c as f64 / total as f64)
                    }
                })
                .collect()
        })
        .collect();
    TransitionModel {
        rooms: graph.rooms().iter().map(|r| r.id.clone()).collect(),
        counts,
        probs,
        room_visits,
        trip_paths,
    }
}

/// Flow-stage settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub damping: f64,
    /// Restart room for PageRank; the museum entrance when absent.
    pub restart: Option<String>,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub grid: PenaltyGrid,
    /// Boundary pairs `(a, b)` for drop-off rates; stair-up edges when absent.
    pub boundaries: Option<Vec<(String, String)>>,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            damping: 0.85,
            restart: None,
            max_iterations: 1000,
            tolerance: 1e-10,
            grid: PenaltyGrid::default(),
            boundaries: None,
        }
    }
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::FlowError;
use crate::museum::{EdgeKind, MuseumGraph};
use crate::scalar::Scalar;

/// Stair cost multipliers; a flat transition costs 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyParams<T> {
    pub lambda_up: T,
    pub lambda_down: T,
}

impl<T: Scalar> PenaltyParams<T> {
    pub fn new(lambda_up: T, lambda_down: T) -> Result<Self, FlowError> {
        if !(lambda_up >= T::one()) || !(lambda_down > T::zero()) {
            return Err(FlowError::InvalidParameter(format!(
                "need lambda_up >= 1 and lambda_down > 0, got ({lambda_up}, {lambda_down})"
            )));
        }
        Ok(PenaltyParams { lambda_up, lambda_down })
    }

    pub fn unit() -> Self {
        PenaltyParams {
            lambda_up: T::one(),
            lambda_down: T::one(),
        }
    }

    pub fn cost(&self, kind: EdgeKind) -> T {
        match kind {
            EdgeKind::Flat => T::one(),
            EdgeKind::StairUp => self.lambda_up,
            EdgeKind::StairDown => self.lambda_down,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PenalizedDistanceField<T> {
    pub origin: String,
    pub dist: BTreeMap<String, T>,
}

/// Dense Dijkstra from `origin`, indexed like `graph.rooms()`. Unreachable rooms are infinite.
pub(crate) fn distances_by_index<T: Scalar>(graph: &MuseumGraph, params: &PenaltyParams<T>, origin: usize) -> Vec<T> {
    let n = graph.room_count();
    let mut dist = vec![T::infinity(); n];
    let mut done = vec![false; n];
    dist[origin] = T::zero();
    for _ in 0..n {
        let mut u = usize::MAX;
        for i in 0..n {
            if !done[i] && dist[i].is_finite() && (u == usize::MAX || dist[i] < dist[u]) {
                u = i;
            }
        }
        if u == usize::MAX {
            break;
        }
        done[u] = true;
        for &(v, kind) in graph.neighbors(u) {
            let d = dist[u] + params.cost(kind);
            if d < dist[v] {
                dist[v] = d;
            }
        }
    }
    dist
}

/// Single-source stair-penalized shortest path distances.
pub fn penalized_shortest_paths<T: Scalar>(
    graph: &MuseumGraph,
    params: &PenaltyParams<T>,
    origin: &str,
) -> Result<PenalizedDistanceField<T>, FlowError> {
    let o = graph
        .room_index(origin)
        .ok_or_else(|| FlowError::UnknownRoom(origin.to_string()))?;
    let d = distances_by_index(graph, params, o);
    Ok(PenalizedDistanceField {
        origin: origin.to_string(),
        dist: graph.rooms().iter().map(|r| r.id.clone()).zip(d).collect(),
    })
}

use super::{CleanTrip, IngestConfig};
use crate::museum::MuseumGraph;

/// Result of screening a trip for implausible room jumps.
#[derive(Debug, Clone, PartialEq)]
pub enum Screened {
    Kept(CleanTrip),
    Rejected(CleanTrip),
}

impl Screened {
    pub fn trip(&self) -> &CleanTrip {
        match self {
            Screened::Kept(t) | Screened::Rejected(t) => t,
        }
    }
}

/// Flag consecutive plays that cover at least `anomaly_min_hops` rooms in under
/// `anomaly_max_secs`; reject trips whose flagged share exceeds `anomaly_max_fraction`.
/// Rooms missing from the graph or mutually unreachable count as infinitely far apart.
pub fn flag_anomalies(mut trip: CleanTrip, graph: &MuseumGraph, config: &IngestConfig) -> Screened {
    let transitions = trip.events.len().saturating_sub(1);
    let flagged = trip
        .events
        .windows(2)
        .filter(|w| {
            let far = match (graph.room_index(&w[0].room_id), graph.room_index(&w[1].room_id)) {
                (Some(a), Some(b)) => graph.hops_by_index(a, b).is_none_or(|h| h >= config.anomaly_min_hops),
                _ => true,
            };
            far && w[1].timestamp - w[0].timestamp < config.anomaly_max_secs
        })
        .count();
    trip.flagged_fraction = if transitions == 0 {
        0.0
    } else {
        flagged as f64 / transitions as f64
    };
    if trip.flagged_fraction > config.anomaly_max_fraction {
        Screened::Rejected(trip)
    } else {
        Screened::Kept(trip)
    }
}

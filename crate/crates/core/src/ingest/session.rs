use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{Action, CleanTrip, IngestConfig, RawEvent, TripEvent};
use crate::museum::ObjectCatalog;

/// A run of one device's events with no inactivity gap above the threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSession {
    pub device_id: String,
    /// 1-based position of the session within its device's stream.
    pub index: usize,
    pub events: Vec<RawEvent>,
}

impl RawSession {
    pub fn trip_id(&self) -> String {
        format!("{}:{}", self.device_id, self.index)
    }
}

/// Group events per device, order them by time and split at gaps strictly above `gap_secs`.
pub fn sessionize(events: &[RawEvent], gap_secs: i64) -> Vec<RawSession> {
    let mut by_device: BTreeMap<&str, Vec<&RawEvent>> = BTreeMap::new();
    for e in events {
        by_device.entry(e.device_id.as_str()).or_default().push(e);
    }
    let mut sessions = Vec::new();
    for (device, mut evs) in by_device {
        // stable: equal timestamps keep input order
        evs.sort_by_key(|e| e.timestamp);
        let mut current: Vec<RawEvent> = Vec::new();
        let mut index = 1;
        for e in evs {
            if let Some(last) = current.last() {
                if e.timestamp - last.timestamp > gap_secs {
                    sessions.push(RawSession {
                        device_id: device.to_string(),
                        index,
                        events: std::mem::take(&mut current),
                    });
                    index += 1;
                }
            }
            current.push(e.clone());
        }
        if !current.is_empty() {
            sessions.push(RawSession {
                device_id: device.to_string(),
                index,
                events: current,
            });
        }
    }
    sessions
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FilterOutcome {
    pub trips: Vec<CleanTrip>,
    pub removed_few: usize,
    pub removed_short: usize,
    pub unknown_objects: usize,
}

enum Verdict {
    Kept(CleanTrip, usize),
    Few(usize),
    Short(usize),
}

fn dominant_language(events: &[RawEvent]) -> String {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for e in events {
        *counts.entry(e.language.as_str()).or_default() += 1;
    }
    // max count, ties to the lexicographically smallest code
    counts
        .into_iter()
        .fold(
            ("", 0usize),
            |best, (lang, n)| if n > best.1 { (lang, n) } else { best },
        )
        .0
        .to_string()
}

fn judge(session: &RawSession, catalog: &ObjectCatalog, config: &IngestConfig) -> Verdict {
    let mut unknown = 0;
    let mut events = Vec::new();
    for e in session.events.iter().filter(|e| e.action == Action::Play) {
        match catalog.object_to_room(&e.object_id) {
            Some(room) => events.push(TripEvent {
                timestamp: e.timestamp,
                object_id: e.object_id.clone(),
                room_id: room.to_string(),
            }),
            None => unknown += 1,
        }
    }
    if events.len() < config.min_interactions {
        return Verdict::Few(unknown);
    }
    let start = session.events.first().map_or(0, |e| e.timestamp);
    let end = session.events.last().map_or(0, |e| e.timestamp);
    let duration = end - start;
    if duration < config.min_duration_secs {
        return Verdict::Short(unknown);
    }
    Verdict::Kept(
        CleanTrip {
            trip_id: session.trip_id(),
            events,
            start_time: start,
            duration,
            language: dominant_language(&session.events),
            group_size: 1,
            flagged_fraction: 0.0,
        },
        unknown,
    )
}

/// Drop sessions with too few catalogued plays or too short a duration (both bounds inclusive)
/// and map the survivors onto rooms.
pub fn filter_sessions(sessions: &[RawSession], catalog: &ObjectCatalog, config: &IngestConfig) -> FilterOutcome {
    let verdicts: Vec<Verdict> = sessions.par_iter().map(|s| judge(s, catalog, config)).collect();
    let mut out = FilterOutcome::default();
    for v in verdicts {
        match v {
            Verdict::Kept(trip, unknown) => {
                out.unknown_objects += unknown;
                out.trips.push(trip);
            }
            Verdict::Few(unknown) => {
                out.unknown_objects += unknown;
                out.removed_few += 1;
            }
            Verdict::Short(unknown) => {
                out.unknown_objects += unknown;
                out.removed_short += 1;
            }
        }
    }
    out.trips.sort_by(|a, b| a.trip_id.cmp(&b.trip_id));
    out
}

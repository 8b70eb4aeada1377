//! Audio-guide event log cleaning: parsing, sessionization, validity filtering,
//! anomaly screening and group-size inference.

mod anomaly;
mod group;
mod parse;
mod session;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::museum::Museum;

pub use anomaly::{flag_anomalies, Screened};
pub use group::infer_group_size;
pub use parse::{parse_event_log, parse_event_log_with, write_events_jsonl, LogFormat, ParsedLog};
pub use session::{filter_sessions, sessionize, FilterOutcome, RawSession};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("failed to read event log: {0}")]
    Io(#[from] std::io::Error),
    #[error("event log rejected: {malformed} of {records} records are malformed")]
    CorpusRejected { malformed: usize, records: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Play,
    Stop,
    Menu,
}

/// One raw audio-guide log record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawEvent {
    pub device_id: String,
    #[serde(rename = "ts")]
    pub timestamp: i64,
    #[serde(default)]
    pub object_id: String,
    #[serde(rename = "lang")]
    pub language: String,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripEvent {
    pub timestamp: i64,
    pub object_id: String,
    pub room_id: String,
}

/// One cleaned visitor journey.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanTrip {
    pub trip_id: String,
    pub events: Vec<TripEvent>,
    pub start_time: i64,
    pub duration: i64,
    pub language: String,
    pub group_size: u32,
    pub flagged_fraction: f64,
}

impl CleanTrip {
    /// Distinct objects played during the trip.
    pub fn visited_objects(&self) -> std::collections::BTreeSet<&str> {
        self.events.iter().map(|e| e.object_id.as_str()).collect()
    }
}

/// Cleaning thresholds. Defaults follow the declared operationalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub session_gap_secs: i64,
    pub min_interactions: usize,
    pub min_duration_secs: i64,
    pub anomaly_min_hops: u32,
    pub anomaly_max_secs: i64,
    pub anomaly_max_fraction: f64,
    pub group_window_secs: i64,
    pub group_min_jaccard: f64,
    pub max_malformed_fraction: f64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            session_gap_secs: 1800,
            min_interactions: 3,
            min_duration_secs: 300,
            anomaly_min_hops: 3,
            anomaly_max_secs: 30,
            anomaly_max_fraction: 0.10,
            group_window_secs: 300,
            group_min_jaccard: 0.8,
            max_malformed_fraction: 0.5,
        }
    }
}

/// Counts emitted alongside the cleaned trips.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub input_events: usize,
    pub malformed: usize,
    pub sessions: usize,
    pub removed_short: usize,
    pub removed_few: usize,
    pub removed_anomalous: usize,
    pub unknown_objects: usize,
    pub trips: usize,
}

/// Runs sessionize → filter → anomaly screening → group inference over parsed events.
pub fn clean_events(parsed: &ParsedLog, museum: &Museum, config: &IngestConfig) -> (Vec<CleanTrip>, CleaningReport) {
    let sessions = sessionize(&parsed.events, config.session_gap_secs);
    let n_sessions = sessions.len();
    let filtered = filter_sessions(&sessions, &museum.catalog, config);

    let screened: Vec<Screened> = filtered
        .trips
        .into_par_iter()
        .map(|t| flag_anomalies(t, &museum.graph, config))
        .collect();
    let mut removed_anomalous = 0;
    let mut kept = Vec::with_capacity(screened.len());
    for s in screened {
        match s {
            Screened::Kept(t) => kept.push(t),
            Screened::Rejected(_) => removed_anomalous += 1,
        }
    }
    let trips = infer_group_size(kept, config);

    let report = CleaningReport {
        input_events: parsed.events.len() + parsed.malformed,
        malformed: parsed.malformed,
        sessions: n_sessions,
        removed_short: filtered.removed_short,
        removed_few: filtered.removed_few,
        removed_anomalous,
        unknown_objects: filtered.unknown_objects,
        trips: trips.len(),
    };
    (trips, report)
}

pub fn write_trips_jsonl<W: std::io::Write>(trips: &[CleanTrip], mut out: W) -> std::io::Result<()> {
    for t in trips {
        serde_json::to_writer(&mut out, t)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_trips_jsonl<R: std::io::BufRead>(input: R) -> std::io::Result<Vec<CleanTrip>> {
    let mut trips = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let trip = serde_json::from_str(&line).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        trips.push(trip);
    }
    Ok(trips)
}

//! Tour matching, completion curves, stop-progression chains and completion entropy.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::CleanTrip;
use crate::museum::TourDef;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TourError {
    #[error("unknown tour `{0}`")]
    UnknownTour(String),
    #[error("tour `{0}` has no starters")]
    NoStarters(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TourStatus {
    Completed,
    Partial,
    None,
}

/// One trip's engagement with the tour it matched best.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TourSession {
    pub trip_id: String,
    /// Absent when the trip never played any tour's first stop.
    pub tour_id: Option<String>,
    pub language: String,
    /// 1-based stop positions reached in prescribed order, strictly increasing.
    pub matched_stops: Vec<usize>,
    pub status: TourStatus,
    /// Timestamp of the first play of stop 1.
    pub started_at: Option<i64>,
}

impl TourSession {
    pub fn is_starter(&self) -> bool {
        matches!(self.status, TourStatus::Completed | TourStatus::Partial)
    }

    /// Last matched stop position, 0 when nothing matched.
    pub fn exit_position(&self) -> usize {
        self.matched_stops.last().copied().unwrap_or(0)
    }
}

/// Longest in-order run of stops beginning at the first play of stop 1.
/// Among equally long runs, the one ending at the furthest stop wins.
fn match_one(trip: &CleanTrip, tour: &TourDef) -> (Vec<usize>, Option<i64>) {
    let position: HashMap<&str, usize> = tour
        .stops
        .iter()
        .enumerate()
        .rev()
        .map(|(i, s)| (s.as_str(), i + 1))
        .collect();
    let seq: Vec<(usize, i64)> = trip
        .events
        .iter()
        .filter_map(|e| position.get(e.object_id.as_str()).map(|&p| (p, e.timestamp)))
        .collect();
    let Some(first) = seq.iter().position(|&(p, _)| p == 1) else {
        return (Vec::new(), None);
    };
    let rest: Vec<usize> = seq[first + 1..].iter().map(|&(p, _)| p).filter(|&p| p > 1).collect();
    // best[i]: longest chain 1 → … → rest[i]; prev[i] links back
    let mut best = vec![1usize; rest.len()];
    let mut prev = vec![usize::MAX; rest.len()];
    for i in 0..rest.len() {
        for j in 0..i {
            if rest[j] < rest[i] && best[j] + 1 > best[i] {
                best[i] = best[j] + 1;
                prev[i] = j;
            }
        }
    }
    let mut end = usize::MAX;
    for i in 0..rest.len() {
        if end == usize::MAX || (best[i], rest[i]) > (best[end], rest[end]) {
            end = i;
        }
    }
    let mut chain = Vec::new();
    while end != usize::MAX {
        chain.push(rest[end]);
        end = prev[end];
    }
    chain.push(1);
    chain.reverse();
    (chain, Some(seq[first].1))
}

fn status_of(matched: &[usize], n: usize) -> TourStatus {
    if matched.last() == Some(&n) && !matched.is_empty() && matched[0] == 1 {
        TourStatus::Completed
    } else if matched.len() >= 2 {
        TourStatus::Partial
    } else {
        TourStatus::None
    }
}

/// One session per trip, assigned to the tour with the most matched stops
/// (ties: earliest stop-1 play, then tour order).
pub fn match_tour_sessions(trips: &[CleanTrip], tours: &[TourDef]) -> Vec<TourSession> {
    trips
        .par_iter()
        .map(|trip| {
            let mut best: Option<(usize, Vec<usize>, i64)> = None;
            for (ti, tour) in tours.iter().enumerate() {
                let (matched, start) = match_one(trip, tour);
                let Some(start) = start else { continue };
                let better = match &best {
                    None => true,
                    Some((_, m, s)) => matched.len() > m.len() || (matched.len() == m.len() && start < *s),
                };
                if better {
                    best = Some((ti, matched, start));
                }
            }
            match best {
                Some((ti, matched, start)) => TourSession {
                    trip_id: trip.trip_id.clone(),
                    tour_id: Some(tours[ti].tour_id.clone()),
                    language: trip.language.clone(),
                    status: status_of(&matched, tours[ti].stops.len()),
                    matched_stops: matched,
                    started_at: Some(start),
                },
                None => TourSession {
                    trip_id: trip.trip_id.clone(),
                    tour_id: None,
                    language: trip.language.clone(),
                    matched_stops: Vec::new(),
                    status: TourStatus::None,
                    started_at: None,
                },
            }
        })
        .collect()
}

fn of_tour<'a>(sessions: &'a [TourSession], tour_id: &'a str) -> impl Iterator<Item = &'a TourSession> + 'a {
    sessions.iter().filter(move |s| s.tour_id.as_deref() == Some(tour_id))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompletionCurve {
    pub tour_id: String,
    /// `None` pools all languages.
    pub language: Option<String>,
    pub starters: usize,
    /// `survival[k-1]`: fraction of starters reaching stop `k`; absent without starters.
    pub survival: Option<Vec<f64>>,
}

/// Survival of starters across stop positions for one tour and language (or all).
pub fn completion_curve(sessions: &[TourSession], tour: &TourDef, language: Option<&str>) -> CompletionCurve {
    let n = tour.stops.len();
    let starters: Vec<usize> = of_tour(sessions, &tour.tour_id)
        .filter(|s| s.is_starter() && language.is_none_or(|l| s.language == l))
        .map(TourSession::exit_position)
        .collect();
    let survival = (!starters.is_empty()).then(|| {
        (1..=n)
            .map(|k| starters.iter().filter(|&&e| e >= k).count() as f64 / starters.len() as f64)
            .collect()
    });
    CompletionCurve {
        tour_id: tour.tour_id.clone(),
        language: language.map(str::to_owned),
        starters: starters.len(),
        survival,
    }
}

/// Stop-progression chain. States `0..n` are stops `1..=n`; state `n` is the absorbing exit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TourChain {
    pub tour_id: String,
    pub sessions: usize,
    /// Sessions whose furthest matched stop is at least `k`, for `k = 1..=n`.
    pub reached: Vec<usize>,
    pub transition: Vec<Vec<f64>>,
    pub completion_probability: f64,
}

/// Maximum-likelihood chain over sessions that played stop 1, optionally restricted to one language.
pub fn tour_markov_chain(
    sessions: &[TourSession],
    tour: &TourDef,
    language: Option<&str>,
) -> Result<TourChain, TourError> {
    let n = tour.stops.len();
    let exits: Vec<usize> = of_tour(sessions, &tour.tour_id)
        .filter(|s| !s.matched_stops.is_empty() && language.is_none_or(|l| s.language == l))
        .map(TourSession::exit_position)
        .collect();
    if exits.is_empty() {
        return Err(TourError::NoStarters(tour.tour_id.clone()));
    }
    let reached: Vec<usize> = (1..=n).map(|k| exits.iter().filter(|&&e| e >= k).count()).collect();
    let mut transition = vec![vec![0.0; n + 1]; n + 1];
    let mut completion = 1.0;
    for k in 0..n {
        let p = if k + 1 < n && reached[k] > 0 {
            reached[k + 1] as f64 / reached[k] as f64
        } else {
            0.0
        };
        if k + 1 < n {
            transition[k][k + 1] = p;
            completion *= p;
        }
        transition[k][n] = 1.0 - p;
    }
    transition[n][n] = 1.0;
    Ok(TourChain {
        tour_id: tour.tour_id.clone(),
        sessions: exits.len(),
        reached,
        transition,
        completion_probability: completion,
    })
}

/// Shannon entropy of exit positions `0..=n`, normalized by `ln(n + 1)`.
pub fn completion_entropy(sessions: &[TourSession], tour: &TourDef, language: Option<&str>) -> Result<f64, TourError> {
    let n = tour.stops.len();
    let mut hist = vec![0usize; n + 1];
    for s in of_tour(sessions, &tour.tour_id).filter(|s| language.is_none_or(|l| s.language == l)) {
        hist[s.exit_position().min(n)] += 1;
    }
    let total: usize = hist.iter().sum();
    if total == 0 {
        return Err(TourError::NoStarters(tour.tour_id.clone()));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let h: f64 = hist
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total as f64;
            p * (1.0 / p).ln()
        })
        .sum();
    Ok((h / ((n + 1) as f64).ln()).clamp(0.0, 1.0))
}

/// Per-(tour, language) summary. Rates are over every trip in the language slice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TourSliceReport {
    pub tour_id: String,
    pub language: Option<String>,
    pub trips: usize,
    pub starters: usize,
    pub completed: usize,
    pub partial: usize,
    pub none: usize,
    pub completed_rate: f64,
    pub partial_rate: f64,
    pub survival: Option<Vec<f64>>,
    pub entropy: Option<f64>,
    pub chain_rows: Option<Vec<Vec<f64>>>,
    pub chain_completion: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TourReport {
    pub sessions: usize,
    /// Pooled over all tours: trips completing or partially following any tour.
    pub pooled_completed_rate: f64,
    pub pooled_partial_rate: f64,
    pub slices: Vec<TourSliceReport>,
}

pub fn tour_report(sessions: &[TourSession], tours: &[TourDef]) -> TourReport {
    let languages: BTreeSet<&str> = sessions.iter().map(|s| s.language.as_str()).collect();
    let mut trips_by_lang: BTreeMap<&str, usize> = BTreeMap::new();
    for s in sessions {
        *trips_by_lang.entry(s.language.as_str()).or_insert(0) += 1;
    }
    let rate = |c: usize, n: usize| if n == 0 { 0.0 } else { c as f64 / n as f64 };
    let mut slices = Vec::new();
    for tour in tours {
        let mut langs: Vec<Option<&str>> = vec![None];
        langs.extend(
            languages
                .iter()
                .filter(|l| of_tour(sessions, &tour.tour_id).any(|s| s.language == **l))
                .map(|l| Some(*l)),
        );
        for lang in langs {
            let trips = lang.map_or(sessions.len(), |l| trips_by_lang[l]);
            let in_slice = || of_tour(sessions, &tour.tour_id).filter(|s| lang.is_none_or(|l| s.language == l));
            let completed = in_slice().filter(|s| s.status == TourStatus::Completed).count();
            let partial = in_slice().filter(|s| s.status == TourStatus::Partial).count();
            let curve = completion_curve(sessions, tour, lang);
            let chain = tour_markov_chain(sessions, tour, lang).ok();
            slices.push(TourSliceReport {
                tour_id: tour.tour_id.clone(),
                language: lang.map(str::to_owned),
                trips,
                starters: curve.starters,
                completed,
                partial,
                none: trips - completed - partial,
                completed_rate: rate(completed, trips),
                partial_rate: rate(partial, trips),
                survival: curve.survival,
                entropy: completion_entropy(sessions, tour, lang).ok(),
                chain_completion: chain.as_ref().map(|c| c.completion_probability),
                chain_rows: chain.map(|c| c.transition),
            });
        }
    }
    let completed = sessions.iter().filter(|s| s.status == TourStatus::Completed).count();
    let partial = sessions.iter().filter(|s| s.status == TourStatus::Partial).count();
    TourReport {
        sessions: sessions.len(),
        pooled_completed_rate: rate(completed, sessions.len()),
        pooled_partial_rate: rate(partial, sessions.len()),
        slices,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::TripEvent;

    fn tour(id: &str, n: usize) -> TourDef {
        TourDef {
            tour_id: id.into(),
            name: id.into(),
            stops: (1..=n).map(|i| format!("{id}s{i}")).collect(),
            languages: vec!["en".into()],
        }
    }

    fn trip(id: &str, lang: &str, objects: &[String]) -> CleanTrip {
        CleanTrip {
            trip_id: id.into(),
            events: objects
                .iter()
                .enumerate()
                .map(|(i, o)| TripEvent {
                    timestamp: 100 + i as i64 * 60,
                    object_id: o.clone(),
                    room_id: "R".into(),
                })
                .collect(),
            start_time: 100,
            duration: 60 * objects.len() as i64,
            language: lang.into(),
            group_size: 1,
            flagged_fraction: 0.0,
        }
    }

    fn stops(t: &str, idx: &[usize]) -> Vec<String> {
        idx.iter().map(|i| format!("{t}s{i}")).collect()
    }

    fn session(tour: &str, exit: usize, n: usize) -> TourSession {
        let matched: Vec<usize> = (1..=exit).collect();
        TourSession {
            trip_id: format!("x{exit}"),
            tour_id: Some(tour.into()),
            language: "en".into(),
            status: status_of(&matched, n),
            matched_stops: matched,
            started_at: Some(0),
        }
    }

    #[test]
    fn full_partial_none() {
        let t5 = tour("A", 5);
        let t10 = tour("B", 10);
        let s = match_tour_sessions(
            &[trip("full", "en", &stops("A", &[1, 2, 3, 4, 5]))],
            std::slice::from_ref(&t5),
        );
        assert_eq!(s[0].status, TourStatus::Completed);
        assert_eq!(s[0].matched_stops, vec![1, 2, 3, 4, 5]);
        let s = match_tour_sessions(&[trip("p", "en", &stops("B", &[1, 2, 3]))], std::slice::from_ref(&t10));
        assert_eq!(s[0].status, TourStatus::Partial);
        assert_eq!(s[0].matched_stops.len(), 3);
        let s = match_tour_sessions(&[trip("n", "en", &stops("B", &[3]))], &[t10]);
        assert_eq!(s[0].status, TourStatus::None);
        assert_eq!(s[0].tour_id, None);
    }

    #[test]
    fn in_order_subsequence() {
        // 1, 3, 2, 4 → longest increasing run has length 3, ending at 4
        let t = tour("A", 5);
        let s = match_tour_sessions(&[trip("t", "en", &stops("A", &[2, 1, 3, 2, 4]))], &[t]);
        assert_eq!(s[0].matched_stops, vec![1, 3, 4]);
        assert_eq!(s[0].status, TourStatus::Partial);
    }

    #[test]
    fn picks_tour_with_most_stops() {
        let (a, b) = (tour("A", 4), tour("B", 4));
        let mut objs = stops("A", &[1, 2]);
        objs.extend(stops("B", &[1, 2, 3]));
        let s = match_tour_sessions(&[trip("t", "en", &objs)], &[a.clone(), b.clone()]);
        assert_eq!(s[0].tour_id.as_deref(), Some("B"));
        // equal lengths: earlier stop-1 play wins
        let mut objs = stops("B", &[1, 2]);
        objs.extend(stops("A", &[1, 2]));
        let s = match_tour_sessions(&[trip("t", "en", &objs)], &[a, b]);
        assert_eq!(s[0].tour_id.as_deref(), Some("B"));
    }

    #[test]
    fn chain_hand_counts() {
        let t = tour("A", 4);
        let sessions: Vec<TourSession> = [1, 2, 2, 4].iter().map(|&e| session("A", e, 4)).collect();
        let c = tour_markov_chain(&sessions, &t, None).unwrap();
        // reached ≥1: 4, ≥2: 3, ≥3: 1, ≥4: 1
        assert_eq!(c.reached, vec![4, 3, 1, 1]);
        assert!((c.transition[0][1] - 0.75).abs() < 1e-15);
        assert!((c.transition[0][4] - 0.25).abs() < 1e-15);
        assert!((c.transition[1][2] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.transition[2][3], 1.0);
        assert_eq!(c.transition[3][4], 1.0);
        assert_eq!(c.transition[4][4], 1.0);
        for row in &c.transition {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert!((c.completion_probability - 0.25).abs() < 1e-15);
    }

    #[test]
    fn all_complete() {
        let t = tour("A", 4);
        let sessions: Vec<TourSession> = (0..5).map(|_| session("A", 4, 4)).collect();
        let c = tour_markov_chain(&sessions, &t, None).unwrap();
        assert_eq!(c.completion_probability, 1.0);
        assert_eq!(completion_entropy(&sessions, &t, None).unwrap(), 0.0);
        assert_eq!(completion_curve(&sessions, &t, None).survival.unwrap(), vec![1.0; 4]);
    }

    #[test]
    fn entropy_fixtures() {
        let t = tour("A", 4);
        let sessions: Vec<TourSession> = [2, 2, 4, 4].iter().map(|&e| session("A", e, 4)).collect();
        let h = completion_entropy(&sessions, &t, None).unwrap();
        assert!((h - 1.0 / 5f64.log2()).abs() < 1e-12);
        assert!((h - 0.431).abs() < 1e-3);
        let uniform: Vec<TourSession> = (0..=4).map(|e| session("A", e, 4)).collect();
        assert!((completion_entropy(&uniform, &t, None).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn curve_is_non_increasing_and_starts_at_one() {
        let t = tour("A", 6);
        let sessions: Vec<TourSession> = [2, 3, 3, 4, 6, 1].iter().map(|&e| session("A", e, 6)).collect();
        let c = completion_curve(&sessions, &t, None);
        assert_eq!(c.starters, 5);
        let s = c.survival.unwrap();
        assert_eq!(s[0], 1.0);
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
        assert!((s[5] - 0.2).abs() < 1e-15);
        assert!(completion_curve(&sessions, &t, Some("fr")).survival.is_none());
    }

    #[test]
    fn slices_partition_trips() {
        let t = tour("A", 3);
        let trips = vec![
            trip("1", "en", &stops("A", &[1, 2, 3])),
            trip("2", "en", &stops("A", &[1, 2])),
            trip("3", "en", &stops("A", &[1])),
            trip("4", "fr", &stops("A", &[2, 3])),
            trip("5", "fr", &stops("A", &[1, 3])),
        ];
        let sessions = match_tour_sessions(&trips, std::slice::from_ref(&t));
        let rep = tour_report(&sessions, &[t]);
        for s in &rep.slices {
            assert_eq!(s.completed + s.partial + s.none, s.trips);
        }
        let en = rep.slices.iter().find(|s| s.language.as_deref() == Some("en")).unwrap();
        assert_eq!((en.completed, en.partial, en.none), (1, 1, 1));
        assert!((rep.pooled_completed_rate - 0.4).abs() < 1e-15);
    }
}

use std::collections::{BTreeSet, VecDeque};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{pick_weighted, ArchetypeSpec, GenConfig, SynthError};
use crate::ingest::{Action, RawEvent};
use crate::museum::{EdgeKind, Museum, TourDef};

/// Ground truth for one generated trip.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripLabel {
    pub trip_id: String,
    pub archetype: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tour_id: Option<String>,
    /// Number of tour stops played before leaving the tour.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exit_stop: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthTrips {
    /// Raw log ordered by timestamp, then device.
    pub events: Vec<RawEvent>,
    pub labels: Vec<TripLabel>,
}

pub fn write_labels_jsonl<W: Write>(mut w: W, labels: &[TripLabel]) -> std::io::Result<()> {
    for l in labels {
        serde_json::to_writer(&mut w, l)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Device slots are this far apart, so consecutive trips on one device never share a session.
const SLOT_SECS: i64 = 6 * 3600;

/// Generate `config.n_trips` visitor trips on `museum`. Each trip draws from its own
/// RNG stream, so output is identical for any thread count.
pub fn generate_trips(museum: &Museum, config: &GenConfig) -> Result<SynthTrips, SynthError> {
    config.validate(museum.catalog.len())?;
    let walker = Walker::new(museum, config);
    let per_trip: Vec<(Vec<RawEvent>, TripLabel)> =
        (0..config.n_trips).into_par_iter().map(|i| walker.trip(i)).collect();
    let mut events = Vec::new();
    let mut labels = Vec::with_capacity(per_trip.len());
    for (evs, label) in per_trip {
        events.extend(evs);
        labels.push(label);
    }
    events.sort_by(|a, b| {
        a.timestamp
            .cmp(&b.timestamp)
            .then_with(|| a.device_id.cmp(&b.device_id))
    });
    Ok(SynthTrips { events, labels })
}

struct Walker<'a> {
    museum: &'a Museum,
    config: &'a GenConfig,
    /// Objects per room index, in id order.
    objects: Vec<Vec<String>>,
}

struct TripState<'a> {
    device: String,
    language: String,
    start: i64,
    t: f64,
    plays: usize,
    events: Vec<RawEvent>,
    spec: &'a ArchetypeSpec,
}

impl<'a> Walker<'a> {
    fn new(museum: &'a Museum, config: &'a GenConfig) -> Self {
        let g = &museum.graph;
        let objects = (0..g.room_count())
            .map(|r| {
                museum
                    .catalog
                    .objects_in_room(&g.room(r).id)
                    .map(str::to_owned)
                    .collect()
            })
            .collect();
        Walker {
            museum,
            config,
            objects,
        }
    }

    fn trip(&self, i: usize) -> (Vec<RawEvent>, TripLabel) {
        let c = self.config;
        let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
        rng.set_stream(i as u64 + 1);
        let shares: Vec<f64> = c.archetypes.iter().map(|a| a.share).collect();
        let spec = &c.archetypes[pick_weighted(&mut rng, &shares).expect("shares validated")];
        let langs: Vec<(&String, &f64)> = spec.language_mix.iter().collect();
        let weights: Vec<f64> = langs.iter().map(|(_, w)| **w).collect();
        let language = langs[pick_weighted(&mut rng, &weights).expect("language mix validated")]
            .0
            .clone();

        let device_no = i / c.trips_per_device;
        let slot = (i % c.trips_per_device) as i64;
        let start = c.start_epoch + slot * SLOT_SECS + rng.random_range(0..3600);
        let mut st = TripState {
            device: format!("D{device_no:05}"),
            language,
            start,
            t: start as f64,
            plays: 0,
            events: Vec::new(),
            spec,
        };
        let trip_id = format!("{}:{}", st.device, slot + 1);
        let budget_secs = rng.random_range(spec.duration_range.0..=spec.duration_range.1);

        let tour = (rng.random::<f64>() < spec.tour_affinity)
            .then(|| self.pick_tour(&mut rng, &st.language))
            .flatten();
        let (tour_id, exit_stop) = match tour {
            Some(tour) => {
                let played = self.walk_tour(&mut rng, &mut st, tour, budget_secs);
                (Some(tour.tour_id.clone()), Some(played))
            }
            None => {
                let budget_objects = rng.random_range(spec.objects_range.0..=spec.objects_range.1);
                self.walk_free(&mut rng, &mut st, budget_secs, budget_objects);
                (None, None)
            }
        };
        let label = TripLabel {
            trip_id,
            archetype: spec.name.clone(),
            tour_id,
            exit_stop,
        };
        (st.events, label)
    }

    fn pick_tour<R: Rng>(&self, rng: &mut R, language: &str) -> Option<&'a TourDef> {
        let offered: Vec<&TourDef> = self
            .museum
            .tours
            .iter()
            .filter(|t| t.languages.iter().any(|l| l == language) && !t.stops.is_empty())
            .collect();
        let weights: Vec<f64> = offered
            .iter()
            .map(|t| {
                if self.config.tour_weights.is_empty() {
                    1.0
                } else {
                    self.config.tour_weights.get(&t.tour_id).copied().unwrap_or(0.0)
                }
            })
            .collect();
        pick_weighted(rng, &weights).map(|k| offered[k])
    }

    fn emit(&self, st: &mut TripState, ts: f64, object_id: &str, action: Action) {
        st.events.push(RawEvent {
            device_id: st.device.clone(),
            timestamp: ts as i64,
            object_id: object_id.to_owned(),
            language: st.language.clone(),
            action,
        });
    }

    /// One recording: play, optional menu presses, stop; advances the clock by `dwell`.
    fn play<R: Rng>(&self, rng: &mut R, st: &mut TripState, object_id: &str, dwell: f64) {
        let t0 = st.t;
        self.emit(st, t0, object_id, Action::Play);
        let w = &self.config.walker;
        let mut menus = w.menu_rate.floor() as usize;
        if rng.random::<f64>() < w.menu_rate.fract() {
            menus += 1;
        }
        for m in 0..menus {
            let at = t0 + dwell * (m + 1) as f64 / (menus + 2) as f64;
            self.emit(st, at, "", Action::Menu);
        }
        if w.stop_events {
            self.emit(st, t0 + dwell, object_id, Action::Stop);
        }
        st.t = t0 + dwell + 1.0;
        st.plays += 1;
    }

    fn dwell<R: Rng>(&self, rng: &mut R, spec: &ArchetypeSpec) -> f64 {
        rng.random_range(spec.dwell_range.0..=spec.dwell_range.1)
    }

    fn edge_cost(&self, kind: EdgeKind) -> f64 {
        match kind {
            EdgeKind::Flat => 1.0,
            EdgeKind::StairUp => self.config.lambda_up_true,
            EdgeKind::StairDown => self.config.lambda_down_true,
        }
    }

    /// Soft-min random walk over rooms, playing every object of each newly entered room
    /// until the time or object budget is spent or nothing new is reachable.
    fn walk_free<R: Rng>(&self, rng: &mut R, st: &mut TripState, budget_secs: f64, budget_objects: usize) {
        let g = &self.museum.graph;
        let w = &self.config.walker;
        let spec = st.spec;
        let n = g.room_count();
        let mut visited = vec![false; n];
        // stairways keyed by unordered room pair
        let mut decided: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut blocked: BTreeSet<(usize, usize)> = BTreeSet::new();
        let key = |a: usize, b: usize| (a.min(b), a.max(b));
        let out_of_budget = |st: &TripState| st.plays >= budget_objects || st.t - st.start as f64 >= budget_secs;

        let mut cur = g.entrance_index();
        visited[cur] = true;
        self.play_room(rng, st, cur, budget_secs, budget_objects);
        let mut moves = 0;
        while moves < w.max_moves && !out_of_budget(st) {
            let Some(toward) = self.step_toward_unvisited(cur, &visited, &blocked) else {
                break;
            };
            let mut options: Vec<(usize, EdgeKind)> = g
                .neighbors(cur)
                .iter()
                .copied()
                .filter(|&(j, _)| !blocked.contains(&key(cur, j)))
                .collect();
            if w.seek_unvisited {
                if options.iter().any(|&(j, _)| !visited[j]) {
                    options.retain(|&(j, _)| !visited[j]);
                } else {
                    options.retain(|&(j, _)| j == toward);
                }
            }
            let weights: Vec<f64> = options
                .iter()
                .map(|&(j, kind)| {
                    let base = (-w.beta * self.edge_cost(kind)).exp();
                    if visited[j] {
                        base * w.revisit_weight
                    } else {
                        base
                    }
                })
                .collect();
            let Some(k) = pick_weighted(rng, &weights) else { break };
            let (next, kind) = options[k];
            if kind == EdgeKind::StairUp && decided.insert(key(cur, next)) && rng.random::<f64>() < spec.stair_refusal {
                blocked.insert(key(cur, next));
                continue;
            }
            moves += 1;
            st.t += w.walk_secs;
            cur = next;
            if !visited[cur] {
                visited[cur] = true;
                self.play_room(rng, st, cur, budget_secs, budget_objects);
            }
        }
    }

    fn play_room<R: Rng>(&self, rng: &mut R, st: &mut TripState, room: usize, budget_secs: f64, budget_objects: usize) {
        let mut objs: Vec<&String> = self.objects[room].iter().collect();
        objs.shuffle(rng);
        for o in objs {
            if st.plays >= budget_objects || st.t - st.start as f64 >= budget_secs {
                return;
            }
            let d = self.dwell(rng, st.spec);
            self.play(rng, st, o, d);
        }
    }

    /// First step of a shortest hop path to the nearest unvisited room still reachable
    /// without blocked stairways.
    fn step_toward_unvisited(
        &self,
        from: usize,
        visited: &[bool],
        blocked: &BTreeSet<(usize, usize)>,
    ) -> Option<usize> {
        let g = &self.museum.graph;
        let mut first: Vec<Option<usize>> = vec![None; g.room_count()];
        let mut seen = vec![false; g.room_count()];
        let mut queue = VecDeque::from([from]);
        seen[from] = true;
        while let Some(r) = queue.pop_front() {
            if !visited[r] {
                return first[r];
            }
            for &(j, _) in g.neighbors(r) {
                if !seen[j] && !blocked.contains(&(r.min(j), r.max(j))) {
                    seen[j] = true;
                    first[j] = first[r].or(Some(j));
                    queue.push_back(j);
                }
            }
        }
        None
    }

    /// Follow a tour along shortest paths. The first three stops are always played, then
    /// each further stop with a constant probability chosen so that the share reaching the
    /// last stop equals the completion target. Narrations spread the duration budget
    /// over the tour's stops. Returns the number of stops played.
    fn walk_tour<R: Rng>(&self, rng: &mut R, st: &mut TripState, tour: &TourDef, budget_secs: f64) -> usize {
        let g = &self.museum.graph;
        let n = tour.stops.len();
        let sure = n.min(3);
        let p = if n > sure {
            self.config.completion_target.powf(1.0 / (n - sure) as f64)
        } else {
            1.0
        };
        let per_stop = budget_secs / n as f64;
        let mut cur = g.entrance_index();
        let mut played = 0;
        for (k, stop) in tour.stops.iter().enumerate() {
            if k >= sure && rng.random::<f64>() >= p {
                break;
            }
            let room = self
                .museum
                .catalog
                .object_to_room(stop)
                .and_then(|r| g.room_index(r))
                .expect("tour stops are catalogued");
            let hops = g.hops_by_index(cur, room).unwrap_or(0);
            st.t += hops as f64 * self.config.walker.walk_secs;
            cur = room;
            let d = per_stop * rng.random_range(0.8..=1.2);
            self.play(rng, st, stop, d);
            played += 1;
        }
        played
    }
}

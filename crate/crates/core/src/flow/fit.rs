use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::paths::distances_by_index;
use super::{FlowError, PenaltyParams, TransitionModel};
use crate::museum::MuseumGraph;
use crate::scalar::Scalar;
use crate::stats::spearman;

/// Grid `start + i·step` for `i = 0..` while the value stays `<= end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenaltyGrid {
    pub up: [f64; 3],
    pub down: [f64; 3],
}

impl Default for PenaltyGrid {
    fn default() -> Self {
        PenaltyGrid {
            up: [1.0, 6.0, 0.25],
            down: [0.5, 2.0, 0.25],
        }
    }
}

fn axis([start, end, step]: [f64; 3]) -> Vec<f64> {
    if !(step > 0.0) || end < start {
        return vec![start];
    }
    let n = ((end - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

impl PenaltyGrid {
    pub fn points(&self) -> Vec<(f64, f64)> {
        let down = axis(self.down);
        axis(self.up)
            .into_iter()
            .flat_map(|u| down.iter().map(move |&d| (u, d)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PenaltyFit<T> {
    pub params: PenaltyParams<T>,
    /// Spearman correlation of room visits against negated penalized distance.
    pub spearman: Option<T>,
    /// The same correlation with unit penalties.
    pub baseline_spearman: Option<T>,
    /// All rooms share a floor, so no stair penalty can be fitted.
    pub degenerate: bool,
    /// Fitted `lambda_up < lambda_down`.
    pub order_violated: bool,
}

fn objective<T: Scalar>(
    model: &TransitionModel<T>,
    graph: &MuseumGraph,
    entrance: usize,
    p: &PenaltyParams<T>,
) -> Option<T> {
    let dist = distances_by_index(graph, p, entrance);
    let neg: Vec<T> = dist.iter().map(|&d| -d).collect();
    let visits: Vec<T> = model.room_visits.iter().map(|&v| T::of(v as f64)).collect();
    spearman(&visits, &neg)
}

/// Grid search for the stair multipliers maximizing rank agreement between room
/// visits and closeness to the entrance. Ties go to the smallest `(lambda_up, lambda_down)`.
pub fn fit_stair_penalty<T: Scalar>(
    model: &TransitionModel<T>,
    graph: &MuseumGraph,
    entrance: &str,
    grid: &PenaltyGrid,
) -> Result<PenaltyFit<T>, FlowError> {
    let e = graph
        .room_index(entrance)
        .ok_or_else(|| FlowError::UnknownRoom(entrance.to_string()))?;
    if model.rooms.len() != graph.room_count() {
        return Err(FlowError::InvalidParameter("model and graph disagree on rooms".into()));
    }
    let baseline = objective(model, graph, e, &PenaltyParams::unit());
    let entrance_floor = graph.room(e).floor;
    if graph.rooms().iter().all(|r| r.floor == entrance_floor) {
        return Ok(PenaltyFit {
            params: PenaltyParams::unit(),
            spearman: baseline,
            baseline_spearman: baseline,
            degenerate: true,
            order_violated: false,
        });
    }
    let points = grid.points();
    let scored: Vec<(PenaltyParams<T>, Option<T>)> = points
        .par_iter()
        .map(|&(u, d)| {
            let p = PenaltyParams::new(T::of(u), T::of(d))?;
            Ok((p, objective(model, graph, e, &p)))
        })
        .collect::<Result<_, FlowError>>()?;
    // grid points are generated in ascending (up, down) order
    let mut best: Option<(PenaltyParams<T>, T)> = None;
    for (p, s) in scored {
        if let Some(s) = s {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((p, s));
            }
        }
    }
    let (params, spearman) = match best {
        Some((p, s)) => (p, Some(s)),
        None => (PenaltyParams::unit(), None),
    };
    Ok(PenaltyFit {
        order_violated: params.lambda_up < params.lambda_down,
        params,
        spearman,
        baseline_spearman: baseline,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::build_transition_model;
    use crate::flow::testutil::{graph, trip};
    use crate::museum::EdgeKind;

    #[test]
    fn grid_axes() {
        let g = PenaltyGrid::default();
        let up = axis(g.up);
        assert_eq!(up.len(), 21);
        assert_eq!(up[0], 1.0);
        assert_eq!(up[20], 6.0);
        assert_eq!(axis(g.down), vec![0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0]);
        assert_eq!(g.points().len(), 21 * 7);
    }

    #[test]
    fn single_floor_is_degenerate() {
        let g = graph(
            &[("A", 0), ("B", 0), ("C", 0)],
            &[("A", "B", EdgeKind::Flat), ("B", "C", EdgeKind::Flat)],
        );
        let model = build_transition_model::<f64>(&[trip("t", &["A", "B", "C"])], &g);
        let fit = fit_stair_penalty(&model, &g, "A", &PenaltyGrid::default()).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.params, PenaltyParams::unit());
    }

    /// A hub with a flat chain A-B-C-D-E and an upstairs room U off the hub.
    /// Visits rank U between C and D, which needs 2 < lambda_up < 3.
    #[test]
    fn recovers_the_rank_crossing() {
        let g = graph(
            &[("A", 0), ("B", 0), ("C", 0), ("D", 0), ("E", 0), ("U", 1)],
            &[
                ("A", "B", EdgeKind::Flat),
                ("B", "C", EdgeKind::Flat),
                ("C", "D", EdgeKind::Flat),
                ("D", "E", EdgeKind::Flat),
                ("A", "U", EdgeKind::StairUp),
            ],
        );
        let mut trips = Vec::new();
        let mut push = |n: usize, rooms: &[&str]| {
            for _ in 0..n {
                trips.push(trip(&format!("t{}", trips.len()), rooms));
            }
        };
        push(10, &["A", "B", "C", "D", "E"]);
        push(10, &["A", "B", "C", "D"]);
        push(10, &["A", "B", "C"]);
        push(10, &["A", "B"]);
        push(25, &["A", "U"]);
        // visits A 65, B 40, C 30, U 25, D 20, E 10
        let model = build_transition_model::<f64>(&trips, &g);
        let fit = fit_stair_penalty(&model, &g, "A", &PenaltyGrid::default()).unwrap();
        assert!(!fit.degenerate);
        assert!(
            fit.params.lambda_up > 2.0 && fit.params.lambda_up < 3.0,
            "{:?}",
            fit.params
        );
        assert_eq!(fit.params.lambda_up, 2.25);
        assert_eq!(fit.params.lambda_down, 0.5);
        assert!(fit.spearman.unwrap() >= fit.baseline_spearman.unwrap());
    }
}

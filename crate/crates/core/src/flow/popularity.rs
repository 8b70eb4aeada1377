use serde::Serialize;

use super::paths::distances_by_index;
use super::{FlowError, PenaltyParams, TransitionModel};
use crate::museum::MuseumGraph;
use crate::scalar::Scalar;
use crate::stats::{eta_squared, linear_fit, pearson, spearman};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoomPopularity {
    pub room_id: String,
    pub theme: String,
    pub distance: f64,
    pub visits: u64,
    /// Standardized residual of `ln(visits + 1)` against the distance fit.
    pub residual: f64,
    pub outlier: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopularityReport {
    pub rooms: Vec<RoomPopularity>,
    pub spearman: Option<f64>,
    pub pearson: Option<f64>,
    pub intercept: f64,
    pub slope: f64,
    /// Variance share of log-visits explained by distance.
    pub distance_r_squared: f64,
    /// Variance share of log-visits explained by room theme.
    pub theme_eta_squared: Option<f64>,
    pub outliers: Vec<String>,
}

/// Relates room visits to penalized distance from the entrance.
pub fn popularity_distance_fit<T: Scalar>(
    model: &TransitionModel<T>,
    graph: &MuseumGraph,
    params: &PenaltyParams<T>,
    entrance: &str,
) -> Result<PopularityReport, FlowError> {
    let n = graph.room_count();
    if n < 3 {
        return Err(FlowError::TooFewRooms { needed: 3, got: n });
    }
    let e = graph
        .room_index(entrance)
        .ok_or_else(|| FlowError::UnknownRoom(entrance.to_string()))?;
    let dist: Vec<f64> = distances_by_index(graph, params, e)
        .into_iter()
        .map(Scalar::as_f64)
        .collect();
    let visits: Vec<f64> = model.room_visits.iter().map(|&v| v as f64).collect();
    let log_visits: Vec<f64> = visits.iter().map(|v| (v + 1.0).ln()).collect();
    let themes: Vec<&str> = graph.rooms().iter().map(|r| r.theme.as_str()).collect();

    let fit = linear_fit(&dist, &log_visits);
    let (intercept, slope, r2) = fit.map_or((0.0, 0.0, 0.0), |f| (f.intercept, f.slope, f.r_squared));
    let residuals: Vec<f64> = dist
        .iter()
        .zip(&log_visits)
        .map(|(x, y)| y - (intercept + slope * x))
        .collect();
    let sse: f64 = residuals.iter().map(|r| r * r).sum();
    let scale = (sse / (n as f64 - 2.0).max(1.0)).sqrt();

    let rooms: Vec<RoomPopularity> = graph
        .rooms()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let z = if scale > 0.0 { residuals[i] / scale } else { 0.0 };
            RoomPopularity {
                room_id: r.id.clone(),
                theme: r.theme.clone(),
                distance: dist[i],
                visits: model.room_visits[i],
                residual: z,
                outlier: z.abs() > 2.0,
            }
        })
        .collect();
    Ok(PopularityReport {
        outliers: rooms.iter().filter(|r| r.outlier).map(|r| r.room_id.clone()).collect(),
        rooms,
        spearman: spearman(&visits, &dist),
        pearson: pearson(&visits, &dist),
        intercept,
        slope,
        distance_r_squared: r2,
        theme_eta_squared: eta_squared(&themes, &log_visits),
    })
}

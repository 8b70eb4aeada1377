use serde::Serialize;

use super::{FlowError, TransitionModel};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dropoff {
    pub from: String,
    pub to: String,
    /// Trips that entered `from`.
    pub reached: u64,
    /// Of those, trips that entered `to` after first entering `from`.
    pub continued: u64,
    /// `1 − continued / reached`; absent when no trip entered `from`.
    pub rate: Option<f64>,
}

/// Fraction of trips reaching `a` that never enter `b` afterwards, per pair.
pub fn dropoff_rates<T: Scalar>(
    model: &TransitionModel<T>,
    pairs: &[(String, String)],
) -> Result<Vec<Dropoff>, FlowError> {
    pairs
        .iter()
        .map(|(a, b)| {
            let ia = model.room_index(a).ok_or_else(|| FlowError::UnknownRoom(a.clone()))?;
            let ib = model.room_index(b).ok_or_else(|| FlowError::UnknownRoom(b.clone()))?;
            let mut reached = 0u64;
            let mut continued = 0u64;
            for path in model.trip_paths() {
                if let Some(first) = path.iter().position(|&r| r == ia) {
                    reached += 1;
                    if path[first + 1..].contains(&ib) {
                        continued += 1;
                    }
                }
            }
            Ok(Dropoff {
                from: a.clone(),
                to: b.clone(),
                reached,
                continued,
                rate: (reached > 0).then(|| 1.0 - continued as f64 / reached as f64),
            })
        })
        .collect()
}

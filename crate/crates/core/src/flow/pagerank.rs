use std::collections::BTreeMap;

use serde::Serialize;

use super::{FlowError, TransitionModel};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PageRank<T> {
    pub scores: BTreeMap<String, T>,
    pub iterations: usize,
    pub delta: T,
}

/// PageRank over the transition probabilities with all teleport mass on `restart`.
/// Mass leaving rooms without observed transitions also returns to `restart`.
pub fn flow_pagerank<T: Scalar>(
    model: &TransitionModel<T>,
    damping: T,
    restart: &str,
    max_iterations: usize,
    tolerance: T,
) -> Result<PageRank<T>, FlowError> {
    let r = model
        .room_index(restart)
        .ok_or_else(|| FlowError::UnknownRoom(restart.to_string()))?;
    let mut teleport = vec![T::zero(); model.rooms.len()];
    teleport[r] = T::one();
    pagerank_with_teleport(model, damping, &teleport, max_iterations, tolerance)
}

/// Power iteration `x ← d·(xP + dangling·v) + (1−d)·v` for an arbitrary teleport
/// distribution `v`; dangling rows redistribute along `v`.
pub fn pagerank_with_teleport<T: Scalar>(
    model: &TransitionModel<T>,
    damping: T,
    teleport: &[T],
    max_iterations: usize,
    tolerance: T,
) -> Result<PageRank<T>, FlowError> {
    let n = model.rooms.len();
    if n == 0 {
        return Err(FlowError::EmptyModel);
    }
    if teleport.len() != n {
        return Err(FlowError::InvalidParameter(
            "teleport length differs from room count".into(),
        ));
    }
    if !(damping >= T::zero() && damping < T::one()) {
        return Err(FlowError::InvalidParameter(format!("damping {damping} outside [0, 1)")));
    }
    let total: T = teleport.iter().copied().sum();
    if !(total > T::zero()) || teleport.iter().any(|&v| v < T::zero()) {
        return Err(FlowError::InvalidParameter(
            "teleport must be a non-negative, non-zero vector".into(),
        ));
    }
    let v: Vec<T> = teleport.iter().map(|&x| x / total).collect();
    let dangling: Vec<bool> = model
        .probs
        .iter()
        .map(|row| row.iter().all(|&p| p == T::zero()))
        .collect();

    let mut x = v.clone();
    let mut delta = T::infinity();
    for it in 1..=max_iterations {
        let mut next = vec![T::zero(); n];
        let mut lost = T::zero();
        for i in 0..n {
            if dangling[i] {
                lost = lost + x[i];
                continue;
            }
            for (j, &p) in model.probs[i].iter().enumerate() {
                if p > T::zero() {
                    next[j] = next[j] + x[i] * p;
                }
            }
        }
        for j in 0..n {
            next[j] = damping * (next[j] + lost * v[j]) + (T::one() - damping) * v[j];
        }
        // keep the iterate on the simplex despite rounding in the row sums
        let s: T = next.iter().copied().sum();
        next.iter_mut().for_each(|q| *q = *q / s);
        delta = x.iter().zip(&next).map(|(a, b)| (*a - *b).abs()).sum();
        x = next;
        if delta < tolerance {
            return Ok(PageRank {
                scores: model.rooms.iter().cloned().zip(x).collect(),
                iterations: it,
                delta,
            });
        }
    }
    Err(FlowError::NoConvergence {
        iterations: max_iterations,
        delta: delta.as_f64(),
    })
}

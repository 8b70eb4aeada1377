//! Seeded generators for visitor trips and review corpora with planted structure.

mod reviews;
mod trips;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use reviews::{generate_reviews, rating_distribution, ReviewGenConfig};
pub use trips::{generate_trips, write_labels_jsonl, SynthTrips, TripLabel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("no archetypes configured")]
    NoArchetypes,
    #[error("archetype shares sum to {0}, expected 1")]
    InvalidShares(f64),
    #[error("archetype `{name}`: {field} = {value} is not a probability")]
    InvalidProbability {
        name: String,
        field: &'static str,
        value: f64,
    },
    #[error("archetype `{name}`: invalid {field} range")]
    InvalidRange { name: String, field: &'static str },
    #[error("archetype `{name}`: needs up to {max} objects but the catalog has {catalog}")]
    ObjectsExceedCatalog { name: String, max: usize, catalog: usize },
    #[error("archetype `{name}`: empty or invalid language mix")]
    InvalidLanguageMix { name: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Planted behaviour of one visitor archetype.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchetypeSpec {
    pub name: String,
    pub share: f64,
    /// Time budget in seconds, drawn uniformly.
    pub duration_range: (f64, f64),
    /// Object budget, drawn uniformly.
    pub objects_range: (usize, usize),
    /// Listening time per object in seconds.
    #[serde(default = "default_dwell")]
    pub dwell_range: (f64, f64),
    /// Probability of following a tour instead of wandering.
    #[serde(default)]
    pub tour_affinity: f64,
    /// Probability of turning back the first time each staircase is approached.
    #[serde(default)]
    pub stair_refusal: f64,
    pub language_mix: BTreeMap<String, f64>,
}

fn default_dwell() -> (f64, f64) {
    (40.0, 80.0)
}

/// Room-choice dynamics of the walker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkerConfig {
    /// Exponent on edge cost: a move is chosen with weight `exp(−beta·cost)`.
    pub beta: f64,
    /// Weight multiplier for moving back into an already visited room.
    pub revisit_weight: f64,
    pub walk_secs: f64,
    pub max_moves: usize,
    /// Prefer unvisited neighbours and otherwise head for the nearest unseen room,
    /// instead of wandering through visited rooms.
    pub seek_unvisited: bool,
    /// Emit a `stop` event when each recording ends.
    pub stop_events: bool,
    /// Expected `menu` events per play.
    pub menu_rate: f64,
}

impl Default for WalkerConfig {
    fn default() -> Self {
        WalkerConfig {
            beta: 0.5,
            revisit_weight: 0.7,
            walk_secs: 30.0,
            max_moves: 400,
            seek_unvisited: true,
            stop_events: true,
            menu_rate: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub seed: u64,
    pub n_trips: usize,
    pub n_reviews: usize,
    pub archetypes: Vec<ArchetypeSpec>,
    pub lambda_up_true: f64,
    pub lambda_down_true: f64,
    pub mean_rating_target: f64,
    /// Share of tour starters who reach the final stop.
    pub completion_target: f64,
    /// Relative weights for choosing a tour; equal when empty.
    pub tour_weights: BTreeMap<String, f64>,
    pub walker: WalkerConfig,
    pub trips_per_device: usize,
    /// Unix time of the first trip.
    pub start_epoch: i64,
    pub reviews: ReviewGenConfig,
}

fn languages(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(l, w)| (l.to_string(), *w)).collect()
}

fn default_languages() -> BTreeMap<String, f64> {
    languages(&[
        ("en", 0.40),
        ("fr", 0.12),
        ("de", 0.10),
        ("es", 0.10),
        ("it", 0.08),
        ("zh", 0.08),
        ("ja", 0.06),
        ("ko", 0.03),
        ("ru", 0.03),
    ])
}

impl ArchetypeSpec {
    /// Long visits covering both floors.
    pub fn committed_trekker(share: f64) -> Self {
        ArchetypeSpec {
            name: "Committed Trekker".into(),
            share,
            duration_range: (4800.0, 7200.0),
            objects_range: (34, 40),
            dwell_range: (60.0, 110.0),
            tour_affinity: 0.0,
            stair_refusal: 0.0,
            language_mix: default_languages(),
        }
    }

    /// Unhurried visits that stay on the entrance floor.
    pub fn leisurely_explorer(share: f64) -> Self {
        ArchetypeSpec {
            name: "Leisurely Explorer".into(),
            share,
            duration_range: (3000.0, 4800.0),
            objects_range: (22, 25),
            dwell_range: (60.0, 110.0),
            tour_affinity: 0.0,
            stair_refusal: 1.0,
            language_mix: default_languages(),
        }
    }

    /// Tour followers who play little beyond the tour stops.
    pub fn targeted_visitor(share: f64) -> Self {
        ArchetypeSpec {
            name: "Targeted Visitor".into(),
            share,
            duration_range: (1200.0, 2400.0),
            objects_range: (3, 8),
            dwell_range: (90.0, 150.0),
            tour_affinity: 1.0,
            stair_refusal: 0.0,
            language_mix: default_languages(),
        }
    }

    /// Short visits sampling a handful of objects near the entrance.
    pub fn speedy_sampler(share: f64) -> Self {
        ArchetypeSpec {
            name: "Speedy Sampler".into(),
            share,
            duration_range: (420.0, 840.0),
            objects_range: (4, 4),
            dwell_range: (90.0, 150.0),
            tour_affinity: 0.0,
            stair_refusal: 1.0,
            language_mix: default_languages(),
        }
    }

    /// Time-limited wanderer with no stair refusal, used to study stair aversion.
    pub fn wanderer(share: f64) -> Self {
        ArchetypeSpec {
            name: "Wanderer".into(),
            share,
            duration_range: (1200.0, 3600.0),
            objects_range: (40, 40),
            dwell_range: (40.0, 80.0),
            tour_affinity: 0.0,
            stair_refusal: 0.0,
            language_mix: default_languages(),
        }
    }
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 42,
            n_trips: 2000,
            n_reviews: 10_000,
            archetypes: vec![
                ArchetypeSpec::committed_trekker(0.22),
                ArchetypeSpec::leisurely_explorer(0.30),
                ArchetypeSpec::targeted_visitor(0.33),
                ArchetypeSpec::speedy_sampler(0.15),
            ],
            lambda_up_true: 3.0,
            lambda_down_true: 1.0,
            mean_rating_target: 4.6,
            completion_target: 0.18,
            tour_weights: BTreeMap::new(),
            walker: WalkerConfig::default(),
            trips_per_device: 4,
            start_epoch: 1_546_300_800,
            reviews: ReviewGenConfig::default(),
        }
    }
}

impl GenConfig {
    /// The four default archetypes with every targeted visitor completing `tour_id`,
    /// so each archetype has one characteristic visit pattern.
    pub fn archetype_scenario(seed: u64, n_trips: usize, tour_id: &str) -> Self {
        GenConfig {
            seed,
            n_trips,
            completion_target: 1.0,
            tour_weights: BTreeMap::from([(tour_id.to_string(), 1.0)]),
            ..GenConfig::default()
        }
    }

    /// Soft-min wanderers only: visitation is shaped by stair costs alone.
    pub fn stair_scenario(seed: u64, n_trips: usize) -> Self {
        GenConfig {
            seed,
            n_trips,
            archetypes: vec![ArchetypeSpec::wanderer(1.0)],
            walker: WalkerConfig {
                seek_unvisited: false,
                ..WalkerConfig::default()
            },
            ..GenConfig::default()
        }
    }

    /// Room-seeking wanderers without a practical budget that refuse each staircase
    /// with probability `refusal`.
    pub fn dropoff_scenario(seed: u64, n_trips: usize, refusal: f64) -> Self {
        let mut spec = ArchetypeSpec::wanderer(1.0);
        spec.duration_range = (14_000.0, 14_400.0);
        spec.stair_refusal = refusal;
        GenConfig {
            seed,
            n_trips,
            archetypes: vec![spec],
            ..GenConfig::default()
        }
    }

    /// Every trip follows a tour, continuing past stop 3 at the rate that yields `completion`.
    pub fn tour_scenario(seed: u64, n_trips: usize, completion: f64) -> Self {
        GenConfig {
            seed,
            n_trips,
            completion_target: completion,
            archetypes: vec![ArchetypeSpec::targeted_visitor(1.0)],
            ..GenConfig::default()
        }
    }

    pub fn validate(&self, catalog_size: usize) -> Result<(), SynthError> {
        if self.archetypes.is_empty() {
            return Err(SynthError::NoArchetypes);
        }
        let total: f64 = self.archetypes.iter().map(|a| a.share).sum();
        if (total - 1.0).abs() > 1e-6 || self.archetypes.iter().any(|a| !(a.share >= 0.0)) {
            return Err(SynthError::InvalidShares(total));
        }
        for a in &self.archetypes {
            for (field, value) in [("tour_affinity", a.tour_affinity), ("stair_refusal", a.stair_refusal)] {
                if !(0.0..=1.0).contains(&value) {
                    return Err(SynthError::InvalidProbability {
                        name: a.name.clone(),
                        field,
                        value,
                    });
                }
            }
            let bad = |field| SynthError::InvalidRange {
                name: a.name.clone(),
                field,
            };
            let (d0, d1) = a.duration_range;
            if !(d0 > 0.0 && d0 <= d1 && d1 <= 4.0 * 3600.0) {
                return Err(bad("duration"));
            }
            let (w0, w1) = a.dwell_range;
            if !(w0 > 0.0 && w0 <= w1) {
                return Err(bad("dwell"));
            }
            let (o0, o1) = a.objects_range;
            if o0 == 0 || o0 > o1 {
                return Err(bad("objects"));
            }
            if o1 > catalog_size {
                return Err(SynthError::ObjectsExceedCatalog {
                    name: a.name.clone(),
                    max: o1,
                    catalog: catalog_size,
                });
            }
            let weights: f64 = a.language_mix.values().sum();
            if a.language_mix.is_empty() || !(weights > 0.0) || a.language_mix.values().any(|w| !(*w >= 0.0)) {
                return Err(SynthError::InvalidLanguageMix { name: a.name.clone() });
            }
        }
        if !(0.0..=1.0).contains(&self.completion_target) {
            return Err(SynthError::InvalidParameter(
                "completion_target must be in [0, 1]".into(),
            ));
        }
        if !(self.lambda_up_true > 0.0 && self.lambda_down_true > 0.0) {
            return Err(SynthError::InvalidParameter("stair costs must be positive".into()));
        }
        let w = &self.walker;
        if !(w.beta >= 0.0 && w.revisit_weight > 0.0 && w.walk_secs >= 0.0 && w.menu_rate >= 0.0) {
            return Err(SynthError::InvalidParameter("walker parameters out of range".into()));
        }
        if self.trips_per_device == 0 {
            return Err(SynthError::InvalidParameter("trips_per_device must be positive".into()));
        }
        if !(self.mean_rating_target > 1.0 && self.mean_rating_target < 5.0) {
            return Err(SynthError::InvalidParameter(
                "mean_rating_target must be in (1, 5)".into(),
            ));
        }
        Ok(())
    }
}

/// Weighted pick; `weights` need not be normalized.
pub(crate) fn pick_weighted<R: rand::Rng>(rng: &mut R, weights: &[f64]) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let mut u = rng.random::<f64>() * total;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last = Some(i);
            if u < w {
                return Some(i);
            }
            u -= w;
        }
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        GenConfig::default().validate(40).unwrap();
        let s: f64 = GenConfig::default().archetypes.iter().map(|a| a.share).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_configs() {
        let mut c = GenConfig::default();
        c.archetypes[0].objects_range = (10, 99);
        assert!(matches!(c.validate(40), Err(SynthError::ObjectsExceedCatalog { .. })));
        let mut c = GenConfig::default();
        c.archetypes[1].share = 0.5;
        assert!(matches!(c.validate(40), Err(SynthError::InvalidShares(_))));
        let mut c = GenConfig::default();
        c.archetypes[2].stair_refusal = 1.5;
        assert!(matches!(c.validate(40), Err(SynthError::InvalidProbability { .. })));
        let mut c = GenConfig::default();
        c.archetypes[3].language_mix.clear();
        assert!(matches!(c.validate(40), Err(SynthError::InvalidLanguageMix { .. })));
    }
}

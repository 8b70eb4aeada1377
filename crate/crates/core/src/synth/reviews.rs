use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{pick_weighted, GenConfig, SynthError};
use crate::text::{Review, TripType};

/// Planted structure of the review corpus. The overall mean rating comes from
/// [`GenConfig::mean_rating_target`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReviewGenConfig {
    pub trip_type_shares: BTreeMap<TripType, f64>,
    /// Mean-rating offsets relative to the overall mean. Types without an entry share
    /// the compensation that keeps the overall mean on target.
    pub trip_type_offsets: BTreeMap<TripType, f64>,
    /// Extra mean rating for reviews written more than `drift_after_days` after the visit.
    pub lag_drift: f64,
    pub drift_after_days: i64,
    /// `(min_days, max_days, weight)` bins for the visit-to-review lag.
    pub lag_mix: Vec<(i64, i64, f64)>,
    pub missing_visit_date: f64,
    pub language_mix: BTreeMap<String, f64>,
    pub first_review_date: NaiveDate,
    pub span_days: i64,
    /// Body length is `base_length + length_per_star·(rating − 1)` tokens, ± `length_jitter`.
    pub base_length: f64,
    pub length_per_star: f64,
    pub length_jitter: f64,
}

impl Default for ReviewGenConfig {
    fn default() -> Self {
        let types = |pairs: &[(TripType, f64)]| pairs.iter().copied().collect::<BTreeMap<_, _>>();
        ReviewGenConfig {
            trip_type_shares: types(&[
                (TripType::Solo, 0.15),
                (TripType::Couple, 0.30),
                (TripType::Family, 0.20),
                (TripType::Friends, 0.15),
                (TripType::Business, 0.20),
            ]),
            trip_type_offsets: types(&[(TripType::Couple, -0.2), (TripType::Business, 0.2)]),
            lag_drift: 0.2,
            drift_after_days: 30,
            lag_mix: vec![(0, 7, 0.40), (8, 30, 0.25), (31, 90, 0.20), (91, 365, 0.15)],
            missing_visit_date: 0.05,
            language_mix: super::default_languages(),
            first_review_date: NaiveDate::from_ymd_opt(2018, 1, 1).expect("valid date"),
            span_days: 730,
            base_length: 12.0,
            length_per_star: 6.0,
            length_jitter: 6.0,
        }
    }
}

const POSITIVE: &[&str] = &[
    "amazing",
    "awesome",
    "beautiful",
    "best",
    "enjoyed",
    "excellent",
    "fantastic",
    "free",
    "friendly",
    "great",
    "helpful",
    "informative",
    "interesting",
    "loved",
    "lovely",
    "stunning",
    "wonderful",
];
const NEGATIVE: &[&str] = &[
    "boring",
    "confusing",
    "disappointing",
    "dirty",
    "expensive",
    "noisy",
    "poor",
    "tired",
    "unhelpful",
    "waste",
];
const NEUTRAL: &[&str] = &[
    "museum",
    "gallery",
    "rosetta",
    "stone",
    "egyptian",
    "mummies",
    "collection",
    "visit",
    "guide",
    "audio",
    "room",
    "exhibits",
    "history",
    "ancient",
    "london",
    "floor",
    "staff",
    "cafe",
    "hours",
    "tickets",
    "children",
    "parthenon",
    "sculptures",
    "world",
    "time",
    "afternoon",
    "morning",
    "tour",
    "objects",
    "display",
];
/// Complaints planted in every low-rated review and nowhere else.
const LOW_RATING_TERMS: &[&str] = &["crowded", "rude", "queue"];

/// Distribution over ratings 1..=5 proportional to `exp(θ·r)` with mean `target`.
pub fn rating_distribution(target: f64) -> [f64; 5] {
    let dist = |theta: f64| {
        let w: Vec<f64> = (1..=5).map(|r| (theta * r as f64).exp()).collect();
        let z: f64 = w.iter().sum();
        let mut p = [0.0; 5];
        for (pi, wi) in p.iter_mut().zip(&w) {
            *pi = wi / z;
        }
        p
    };
    let mean = |p: &[f64; 5]| p.iter().enumerate().map(|(i, pi)| (i + 1) as f64 * pi).sum::<f64>();
    let target = target.clamp(1.0 + 1e-9, 5.0 - 1e-9);
    let (mut lo, mut hi) = (-60.0f64, 60.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean(&dist(mid)) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    dist(0.5 * (lo + hi))
}

fn validate(c: &ReviewGenConfig, overall: f64) -> Result<(), SynthError> {
    let bad = |m: &str| Err(SynthError::InvalidParameter(format!("reviews: {m}")));
    let total: f64 = c.trip_type_shares.values().sum();
    if c.trip_type_shares.is_empty() || (total - 1.0).abs() > 1e-6 || c.trip_type_shares.values().any(|s| !(*s >= 0.0))
    {
        return bad("trip type shares must sum to 1");
    }
    if c.trip_type_offsets.keys().any(|t| !c.trip_type_shares.contains_key(t)) {
        return bad("offset given for a trip type without a share");
    }
    if c.lag_mix.is_empty() || c.lag_mix.iter().any(|&(lo, hi, w)| lo < 0 || lo > hi || !(w >= 0.0)) {
        return bad("invalid lag mix");
    }
    if !(0.0..=1.0).contains(&c.missing_visit_date) {
        return bad("missing_visit_date must be a probability");
    }
    if c.language_mix.is_empty() || !(c.language_mix.values().sum::<f64>() > 0.0) {
        return bad("empty language mix");
    }
    if c.span_days < 1 || c.base_length < 1.0 || c.length_jitter < 0.0 {
        return bad("invalid date span or length parameters");
    }
    let cells = cell_means(c, overall);
    if cells.values().any(|m| !(*m > 1.0 && *m < 5.0)) {
        return bad("planted offsets push a mean rating outside (1, 5)");
    }
    Ok(())
}

/// Target mean for each (trip type, late) cell, balanced so the corpus mean equals `overall`.
fn cell_means(c: &ReviewGenConfig, overall: f64) -> BTreeMap<(TripType, bool), f64> {
    let fixed: f64 = c
        .trip_type_offsets
        .iter()
        .map(|(t, o)| c.trip_type_shares.get(t).copied().unwrap_or(0.0) * o)
        .sum();
    let free_share: f64 = c
        .trip_type_shares
        .iter()
        .filter(|(t, _)| !c.trip_type_offsets.contains_key(t))
        .map(|(_, s)| s)
        .sum();
    let compensation = if free_share > 0.0 { -fixed / free_share } else { 0.0 };
    let total_w: f64 = c.lag_mix.iter().map(|b| b.2).sum();
    // bins straddling the threshold contribute their late fraction
    let late_share: f64 = c
        .lag_mix
        .iter()
        .map(|&(lo, hi, w)| {
            let late_days = (hi - lo.max(c.drift_after_days + 1) + 1).max(0) as f64;
            w * late_days / (hi - lo + 1) as f64
        })
        .sum::<f64>()
        / total_w;
    let mut out = BTreeMap::new();
    for &t in c.trip_type_shares.keys() {
        let o = c.trip_type_offsets.get(&t).copied().unwrap_or(compensation);
        out.insert((t, false), overall + o - c.lag_drift * late_share);
        out.insert((t, true), overall + o + c.lag_drift * (1.0 - late_share));
    }
    out
}

fn pick<'a, R: Rng>(rng: &mut R, pool: &[&'a str]) -> &'a str {
    pool[rng.random_range(0..pool.len())]
}

fn words<R: Rng>(rng: &mut R, rating: u8, len: usize) -> Vec<&'static str> {
    let p_pos = 0.04 + 0.06 * (rating - 1) as f64;
    let p_neg = 0.04 + 0.06 * (5 - rating) as f64;
    (0..len)
        .map(|_| {
            let u = rng.random::<f64>();
            if u < p_pos {
                pick(rng, POSITIVE)
            } else if u < p_pos + p_neg {
                pick(rng, NEGATIVE)
            } else {
                pick(rng, NEUTRAL)
            }
        })
        .collect()
}

/// Generate `config.n_reviews` reviews. Ratings follow a maximum-entropy distribution whose
/// mean is set per trip type and lag; longer texts and positive terms go with higher ratings.
pub fn generate_reviews(config: &GenConfig) -> Result<Vec<Review>, SynthError> {
    let c = &config.reviews;
    validate(c, config.mean_rating_target)?;
    let dists: BTreeMap<(TripType, bool), [f64; 5]> = cell_means(c, config.mean_rating_target)
        .into_iter()
        .map(|(k, m)| (k, rating_distribution(m)))
        .collect();
    let types: Vec<(TripType, f64)> = c.trip_type_shares.iter().map(|(t, s)| (*t, *s)).collect();
    let type_w: Vec<f64> = types.iter().map(|t| t.1).collect();
    let langs: Vec<(&String, f64)> = c.language_mix.iter().map(|(l, w)| (l, *w)).collect();
    let lang_w: Vec<f64> = langs.iter().map(|l| l.1).collect();
    let lag_w: Vec<f64> = c.lag_mix.iter().map(|b| b.2).collect();

    Ok((0..config.n_reviews)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x0005_eed0_f4e7_1e35);
            rng.set_stream(i as u64 + 1);
            let trip_type = types[pick_weighted(&mut rng, &type_w).expect("shares validated")].0;
            let language = langs[pick_weighted(&mut rng, &lang_w).expect("languages validated")]
                .0
                .clone();
            let (lo, hi, _) = c.lag_mix[pick_weighted(&mut rng, &lag_w).expect("lag mix validated")];
            let lag = rng.random_range(lo..=hi);
            let rating = pick_weighted(&mut rng, &dists[&(trip_type, lag > c.drift_after_days)])
                .expect("non-degenerate distribution") as u8
                + 1;
            let review_date = c.first_review_date + Duration::days(rng.random_range(0..c.span_days));
            let visit_date = (rng.random::<f64>() >= c.missing_visit_date).then(|| review_date - Duration::days(lag));

            let title_len = rng.random_range(2..=4);
            let title = words(&mut rng, rating, title_len).join(" ");
            let expected = c.base_length + c.length_per_star * (rating - 1) as f64;
            let len = (expected + rng.random_range(-c.length_jitter..=c.length_jitter))
                .round()
                .max(3.0) as usize;
            let mut body = words(&mut rng, rating, len);
            if rating <= 2 {
                for &t in LOW_RATING_TERMS {
                    let at = rng.random_range(0..=body.len());
                    body.insert(at, t);
                }
            }
            Review {
                review_id: format!("R{i:06}"),
                rating,
                title,
                body: body.join(" "),
                language,
                trip_type,
                visit_date,
                review_date,
            }
        })
        .collect())
}

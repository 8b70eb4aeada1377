use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Review, SentimentScore, TextError};
use crate::stats::{mean, pearson, sample_sd};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKey {
    TripType,
    Month,
    Language,
    Rating,
}

impl GroupKey {
    pub fn of(self, r: &Review) -> String {
        match self {
            GroupKey::TripType => r.trip_type.as_str().to_string(),
            GroupKey::Month => r.month(),
            GroupKey::Language => r.language.clone(),
            GroupKey::Rating => r.rating.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupStats {
    pub group: String,
    pub n: usize,
    pub mean_rating: f64,
    pub sd_rating: Option<f64>,
    /// Normal-approximation 95% half-width, `1.96·sd/√n`; absent when `n < 2`.
    pub ci_half_width: Option<f64>,
    pub mean_polarity: f64,
    pub category_means: Vec<f64>,
    pub low_confidence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateTable {
    pub key: GroupKey,
    pub groups: Vec<GroupStats>,
    /// Reviews without a sentiment score (no tokens).
    pub excluded: usize,
}

/// Rating and polarity summary per group over the scored reviews.
pub fn aggregate_by_group(reviews: &[Review], scores: &[Option<SentimentScore>], key: GroupKey) -> AggregateTable {
    assert_eq!(reviews.len(), scores.len(), "one score slot per review");
    let mut groups: BTreeMap<String, Vec<(&Review, &SentimentScore)>> = BTreeMap::new();
    let mut excluded = 0;
    for (r, s) in reviews.iter().zip(scores) {
        match s {
            Some(s) => groups.entry(key.of(r)).or_default().push((r, s)),
            None => excluded += 1,
        }
    }
    let groups = groups
        .into_iter()
        .map(|(group, items)| {
            let ratings: Vec<f64> = items.iter().map(|(r, _)| r.rating as f64).collect();
            let pol: Vec<f64> = items.iter().map(|(_, s)| s.polarity).collect();
            let n = items.len();
            let width = items.iter().map(|(_, s)| s.categories.len()).max().unwrap_or(0);
            let category_means = (0..width)
                .map(|c| {
                    items
                        .iter()
                        .map(|(_, s)| s.categories.get(c).copied().unwrap_or(0.0))
                        .sum::<f64>()
                        / n as f64
                })
                .collect();
            let sd = sample_sd(&ratings);
            GroupStats {
                group,
                n,
                mean_rating: mean(&ratings).unwrap_or(f64::NAN),
                sd_rating: sd,
                ci_half_width: sd.map(|sd| 1.96 * sd / (n as f64).sqrt()),
                mean_polarity: mean(&pol).unwrap_or(f64::NAN),
                category_means,
                low_confidence: n < 5,
            }
        })
        .collect();
    AggregateTable { key, groups, excluded }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagBin {
    pub label: String,
    pub min_days: i64,
    pub max_days: Option<i64>,
    pub n: usize,
    pub mean_rating: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagTable {
    /// Non-empty bins in ascending lag order.
    pub bins: Vec<LagBin>,
    /// Reviews without a visit date.
    pub missing: usize,
    /// Reviews dated before the visit.
    pub negative: usize,
    /// Mean rating for lags of at most 30 days and above 30 days.
    pub early_mean: Option<f64>,
    pub late_mean: Option<f64>,
}

impl LagTable {
    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Late minus early mean rating.
    pub fn drift(&self) -> Option<f64> {
        Some(self.late_mean? - self.early_mean?)
    }
}

const LAG_BINS: [(&str, i64, Option<i64>); 4] = [
    ("0-7", 0, Some(7)),
    ("8-30", 8, Some(30)),
    ("31-90", 31, Some(90)),
    (">90", 91, None),
];

/// Mean rating by days between visit and review.
pub fn rating_lag_analysis(reviews: &[Review]) -> LagTable {
    let mut sums = [(0usize, 0.0f64); 4];
    let (mut missing, mut negative) = (0, 0);
    let (mut early, mut late) = (Vec::new(), Vec::new());
    for r in reviews {
        let Some(lag) = r.lag_days() else {
            missing += 1;
            continue;
        };
        if lag < 0 {
            negative += 1;
            continue;
        }
        let b = LAG_BINS
            .iter()
            .position(|&(_, lo, hi)| lag >= lo && hi.is_none_or(|h| lag <= h))
            .expect("bins cover all non-negative lags");
        sums[b].0 += 1;
        sums[b].1 += r.rating as f64;
        if lag <= 30 {
            early.push(r.rating as f64);
        } else {
            late.push(r.rating as f64);
        }
    }
    LagTable {
        bins: LAG_BINS
            .iter()
            .zip(sums)
            .filter(|(_, (n, _))| *n > 0)
            .map(|(&(label, lo, hi), (n, s))| LagBin {
                label: label.to_string(),
                min_days: lo,
                max_days: hi,
                n,
                mean_rating: s / n as f64,
            })
            .collect(),
        missing,
        negative,
        early_mean: mean(&early),
        late_mean: mean(&late),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthPositivity {
    pub n: usize,
    pub length_vs_rating: f64,
    /// Absent when every polarity is identical.
    pub length_vs_polarity: Option<f64>,
}

/// Pearson correlation of review token count against rating and against polarity.
pub fn length_positivity(reviews: &[Review], scores: &[Option<SentimentScore>]) -> Result<LengthPositivity, TextError> {
    let pairs: Vec<(&Review, &SentimentScore)> = reviews
        .iter()
        .zip(scores)
        .filter_map(|(r, s)| s.as_ref().map(|s| (r, s)))
        .collect();
    if pairs.len() < 3 {
        return Err(TextError::TooFew {
            what: "scored reviews",
            needed: 3,
            got: pairs.len(),
        });
    }
    let len: Vec<f64> = pairs.iter().map(|(_, s)| s.token_count as f64).collect();
    let rating: Vec<f64> = pairs.iter().map(|(r, _)| r.rating as f64).collect();
    let pol: Vec<f64> = pairs.iter().map(|(_, s)| s.polarity).collect();
    let length_vs_rating = pearson(&len, &rating).ok_or(TextError::ZeroVariance("length or rating"))?;
    Ok(LengthPositivity {
        n: pairs.len(),
        length_vs_rating,
        length_vs_polarity: pearson(&len, &pol),
    })
}

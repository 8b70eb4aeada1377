//! Review sentiment scoring, grouped rating aggregates, review-lag analysis,
//! length/positivity correlation and TF-IDF term extraction.

mod aggregate;
mod lexicon;
mod sentiment;
mod tfidf;

use std::io::{BufRead, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use aggregate::{
    aggregate_by_group, length_positivity, rating_lag_analysis, AggregateTable, GroupKey, GroupStats, LagBin, LagTable,
    LengthPositivity,
};
pub use lexicon::{Lexicon, LexiconEntry, DEMO_LEXICON_TSV};
pub use sentiment::{score_all, score_sentiment, tokenize, SentimentScore};
pub use tfidf::{tfidf_terms, GroupTerms};

#[derive(Debug, Error)]
pub enum TextError {
    #[error("failed to read reviews: {0}")]
    Io(#[from] std::io::Error),
    #[error("need at least {needed} {what}, got {got}")]
    TooFew {
        what: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TripType {
    Solo,
    Couple,
    Family,
    Friends,
    Business,
    #[serde(other)]
    Unknown,
}

impl TripType {
    pub const ALL: [TripType; 6] = [
        TripType::Solo,
        TripType::Couple,
        TripType::Family,
        TripType::Friends,
        TripType::Business,
        TripType::Unknown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TripType::Solo => "solo",
            TripType::Couple => "couple",
            TripType::Family => "family",
            TripType::Friends => "friends",
            TripType::Business => "business",
            TripType::Unknown => "unknown",
        }
    }
}

fn unknown_trip_type() -> TripType {
    TripType::Unknown
}

/// One review, pre-translated to English and tagged with its original language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Review {
    pub review_id: String,
    pub rating: u8,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub body: String,
    #[serde(rename = "lang")]
    pub language: String,
    #[serde(default = "unknown_trip_type")]
    pub trip_type: TripType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visit_date: Option<NaiveDate>,
    pub review_date: NaiveDate,
}

impl Review {
    /// Whole days from visit to review, when the visit date is known.
    pub fn lag_days(&self) -> Option<i64> {
        self.visit_date.map(|v| (self.review_date - v).num_days())
    }

    /// `YYYY-MM` of the visit, falling back to the review date.
    pub fn month(&self) -> String {
        self.visit_date.unwrap_or(self.review_date).format("%Y-%m").to_string()
    }

    pub fn text(&self) -> String {
        format!("{} {}", self.title, self.body)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedReviews {
    pub reviews: Vec<Review>,
    /// Lines that were not valid review records (bad JSON, rating outside 1..=5, …).
    pub malformed: usize,
}

/// Reads reviews JSONL. Invalid lines are skipped and counted; blank lines are ignored.
pub fn parse_reviews<R: BufRead>(reader: R) -> Result<ParsedReviews, TextError> {
    let mut out = ParsedReviews::default();
    for line in reader.split(b'\n') {
        let line = line?;
        let Ok(text) = std::str::from_utf8(&line) else {
            out.malformed += 1;
            continue;
        };
        if text.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Review>(text) {
            Ok(r) if (1..=5).contains(&r.rating) && !r.review_id.is_empty() => out.reviews.push(r),
            _ => out.malformed += 1,
        }
    }
    Ok(out)
}

pub fn write_reviews_jsonl<W: Write>(mut w: W, reviews: &[Review]) -> std::io::Result<()> {
    for r in reviews {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

use rayon::prelude::*;
use serde::Serialize;

use super::{Lexicon, Review};

/// Lowercased alphanumeric runs of at least two characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(str::to_owned)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SentimentScore {
    pub review_id: String,
    pub raw_sum: i64,
    pub token_count: usize,
    pub polarity: f64,
    /// Summed extra lexicon columns, aligned with the lexicon's categories.
    pub categories: Vec<f64>,
}

/// Bag-of-words lexicon score over title and body; `None` when the text has no tokens.
pub fn score_sentiment(review: &Review, lexicon: &Lexicon) -> Option<SentimentScore> {
    let tokens = tokenize(&review.title)
        .into_iter()
        .chain(tokenize(&review.body))
        .collect::<Vec<_>>();
    if tokens.is_empty() {
        return None;
    }
    let mut raw_sum = 0i64;
    let mut categories = vec![0.0; lexicon.categories.len()];
    for t in &tokens {
        if let Some(e) = lexicon.get(t) {
            raw_sum += e.score as i64;
            for (c, v) in categories.iter_mut().zip(&e.extra) {
                *c += v;
            }
        }
    }
    Some(SentimentScore {
        review_id: review.review_id.clone(),
        raw_sum,
        token_count: tokens.len(),
        polarity: raw_sum as f64 / tokens.len() as f64,
        categories,
    })
}

pub fn score_all(reviews: &[Review], lexicon: &Lexicon) -> Vec<Option<SentimentScore>> {
    reviews.par_iter().map(|r| score_sentiment(r, lexicon)).collect()
}

use std::collections::BTreeMap;

use serde::Serialize;

use super::{tokenize, GroupKey, Review, TextError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupTerms {
    pub group: String,
    pub terms: Vec<(String, f64)>,
}

/// Each group's reviews form one document; terms are ranked by `tf · ln(N / df)`,
/// ties alphabetical. Terms present in every group (idf 0) are never ranked.
pub fn tfidf_terms(reviews: &[Review], key: GroupKey, top_k: usize) -> Result<Vec<GroupTerms>, TextError> {
    let mut docs: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for r in reviews {
        let counts = docs.entry(key.of(r)).or_default();
        for t in tokenize(&r.text()) {
            *counts.entry(t).or_insert(0) += 1;
        }
    }
    if docs.len() < 2 {
        return Err(TextError::TooFew {
            what: "groups",
            needed: 2,
            got: docs.len(),
        });
    }
    let n = docs.len() as f64;
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for counts in docs.values() {
        for t in counts.keys() {
            *df.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    Ok(docs
        .iter()
        .map(|(group, counts)| {
            let total: usize = counts.values().sum();
            let mut scored: Vec<(String, f64)> = counts
                .iter()
                .filter(|(t, _)| df[t.as_str()] < docs.len())
                .map(|(t, &c)| (t.clone(), c as f64 / total as f64 * (n / df[t.as_str()] as f64).ln()))
                .collect();
            scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            scored.truncate(top_k);
            GroupTerms {
                group: group.clone(),
                terms: scored,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::TripType;
    use chrono::NaiveDate;

    fn review(id: &str, rating: u8, body: &str) -> Review {
        Review {
            review_id: id.into(),
            rating,
            title: String::new(),
            body: body.into(),
            language: "en".into(),
            trip_type: TripType::Solo,
            visit_date: None,
            review_date: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
        }
    }

    #[test]
    fn two_group_hand_fixture() {
        let rs = vec![
            review("a", 1, "museum crowded crowded queue"),
            review("b", 5, "museum free informative"),
        ];
        let t = tfidf_terms(&rs, GroupKey::Rating, 5).unwrap();
        assert_eq!(t[0].group, "1");
        // crowded: tf 2/4, idf ln 2
        assert_eq!(t[0].terms[0].0, "crowded");
        assert!((t[0].terms[0].1 - 0.5 * 2f64.ln()).abs() < 1e-15);
        assert_eq!(t[0].terms[1].0, "queue");
        assert!(t.iter().all(|g| g.terms.iter().all(|(w, _)| w != "museum")));
        // equal scores fall back to alphabetical order
        assert_eq!(
            t[1].terms.iter().map(|x| x.0.as_str()).collect::<Vec<_>>(),
            ["free", "informative"]
        );
    }

    #[test]
    fn order_free_and_needs_two_groups() {
        let mut rs = vec![
            review("a", 1, "rude guard"),
            review("b", 5, "lovely"),
            review("c", 1, "queue"),
        ];
        let t1 = tfidf_terms(&rs, GroupKey::Rating, 3).unwrap();
        rs.reverse();
        assert_eq!(tfidf_terms(&rs, GroupKey::Rating, 3).unwrap(), t1);
        assert!(tfidf_terms(&rs[..1], GroupKey::Rating, 3).is_err());
    }
}

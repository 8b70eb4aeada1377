use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

/// Demo lexicon bundled with the crate; supply a real AFINN-style file for analysis.
pub const DEMO_LEXICON_TSV: &str = include_str!("../../fixtures/demo_lexicon.tsv");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LexiconEntry {
    pub score: i32,
    /// Extra category weights, aligned with [`Lexicon::categories`].
    pub extra: Vec<f64>,
}

/// Signed word weights with optional named category columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lexicon {
    pub name: String,
    pub categories: Vec<String>,
    pub entries: HashMap<String, LexiconEntry>,
    /// Lines that could not be parsed.
    pub skipped: usize,
}

impl Lexicon {
    /// Parses `token \t score [\t extra…]`. A first line whose score column is not an
    /// integer is a header naming the extra columns. Bad lines are skipped and counted.
    pub fn from_tsv(name: &str, text: &str) -> Lexicon {
        let mut lines = text
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
            .peekable();
        let mut categories = Vec::new();
        if let Some(first) = lines.peek() {
            let cols: Vec<&str> = first.split('\t').collect();
            if cols.len() >= 2 && cols[1].trim().parse::<i32>().is_err() {
                categories = cols[2..].iter().map(|c| c.trim().to_string()).collect();
                lines.next();
            }
        }
        let mut entries = HashMap::new();
        let mut skipped = 0;
        for line in lines {
            match parse_line(line, categories.len()) {
                Some((token, entry)) => {
                    entries.insert(token, entry);
                }
                None => skipped += 1,
            }
        }
        if categories.is_empty() {
            let width = entries.values().map(|e| e.extra.len()).max().unwrap_or(0);
            categories = (1..=width).map(|i| format!("extra{i}")).collect();
            for e in entries.values_mut() {
                e.extra.resize(width, 0.0);
            }
        }
        Lexicon {
            name: name.to_string(),
            categories,
            entries,
            skipped,
        }
    }

    pub fn demo() -> Lexicon {
        Lexicon::from_tsv("demo", DEMO_LEXICON_TSV)
    }

    pub fn from_scores<'a>(name: &str, scores: impl IntoIterator<Item = (&'a str, i32)>) -> Lexicon {
        Lexicon {
            name: name.to_string(),
            categories: Vec::new(),
            entries: scores
                .into_iter()
                .map(|(t, s)| {
                    (
                        t.to_lowercase(),
                        LexiconEntry {
                            score: s,
                            extra: vec![],
                        },
                    )
                })
                .collect(),
            skipped: 0,
        }
    }

    pub fn get(&self, token: &str) -> Option<&LexiconEntry> {
        self.entries.get(token)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sorted view, for stable output.
    pub fn sorted(&self) -> BTreeMap<&str, &LexiconEntry> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v)).collect()
    }
}

fn parse_line(line: &str, n_extra: usize) -> Option<(String, LexiconEntry)> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() < 2 {
        return None;
    }
    let token = cols[0].trim().to_lowercase();
    if token.is_empty() || token.contains(char::is_whitespace) {
        return None;
    }
    let score: i32 = cols[1].trim().parse().ok()?;
    if !(-5..=5).contains(&score) {
        return None;
    }
    let mut extra = Vec::with_capacity(n_extra);
    for c in &cols[2..] {
        let v: f64 = c.trim().parse().ok()?;
        if !v.is_finite() {
            return None;
        }
        extra.push(v);
    }
    if n_extra > 0 {
        extra.resize(n_extra, 0.0);
    }
    Some((token, LexiconEntry { score, extra }))
}

//! Token handling shared by retrieval and argument scoring.

use std::collections::BTreeSet;

/// Lowercased alphanumeric tokens of `text`, in order of appearance.
///
/// Anything that is not a letter or digit separates tokens, so punctuation
/// is stripped and `lives_alone` yields `lives`, `alone`.
pub fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Distinct tokens of `text`.
pub fn token_set(text: &str) -> BTreeSet<String> {
    tokens(text).into_iter().collect()
}

/// `|query ∩ doc| / |query|` over distinct tokens; 0 for an empty query.
pub fn overlap_ratio(query: &BTreeSet<String>, doc: &BTreeSet<String>) -> f64 {
    if query.is_empty() {
        return 0.0;
    }
    let shared = query.intersection(doc).count();
    shared as f64 / query.len() as f64
}

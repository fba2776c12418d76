//! Lexical similarity primitives shared by retrieval and debug memory.
//!
//! The default signal is cosine similarity over term-frequency vectors of
//! lowercased alphanumeric tokens. It is deliberately embedding-free so the
//! whole engine stays deterministic and dependency-light; callers that have a
//! real embedding model plug it in through [`Embedder`].

use std::collections::BTreeMap;

/// Split text into lowercased alphanumeric runs.
///
/// `"NullPointer in pay/refund.x!"` tokenizes to
/// `["nullpointer", "in", "pay", "refund", "x"]`.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            for lower in ch.to_lowercase() {
                current.push(lower);
            }
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Term-frequency map over [`tokenize`] output.
pub fn term_frequencies(text: &str) -> BTreeMap<String, f64> {
    let mut tf = BTreeMap::new();
    for token in tokenize(text) {
        *tf.entry(token).or_insert(0.0) += 1.0;
    }
    tf
}

fn cosine(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let dot: f64 = a
        .iter()
        .filter_map(|(term, &wa)| b.get(term).map(|&wb| wa * wb))
        .sum();
    if dot == 0.0 {
        return 0.0;
    }
    let norm_a: f64 = a.values().map(|w| w * w).sum::<f64>().sqrt();
    let norm_b: f64 = b.values().map(|w| w * w).sum::<f64>().sqrt();
    if norm_a == 0.0 || norm_b == 0.0 {
        return 0.0;
    }
    (dot / (norm_a * norm_b)).clamp(0.0, 1.0)
}

/// Cosine similarity of the term-frequency vectors of two texts.
///
/// Returns a value in `[0, 1]`; either side tokenizing to nothing yields 0.
pub fn tf_cosine(a: &str, b: &str) -> f64 {
    cosine(&term_frequencies(a), &term_frequencies(b))
}

/// Pluggable text embedder: maps text to a fixed-length vector.
///
/// When one is supplied, similarity becomes the cosine of the embedded
/// vectors instead of the term-frequency default.
pub trait Embedder: Send + Sync {
    fn embed(&self, text: &str) -> Vec<f64>;
}

/// Cosine similarity of two dense vectors (0 when lengths differ or a norm
/// vanishes).
pub fn vector_cosine(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() || a.is_empty() {
        return 0.0;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(0.0, 1.0)
}

/// Similarity for two texts under an optional embedder override.
pub fn similarity(a: &str, b: &str, embedder: Option<&dyn Embedder>) -> f64 {
    match embedder {
        Some(model) => vector_cosine(&model.embed(a), &model.embed(b)),
        None => tf_cosine(a, b),
    }
}

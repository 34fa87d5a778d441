//! Dense embeddings and flat top-k ranking shared by tool and knowledge retrieval.

use std::cmp::Ordering;

use crate::llm::tokens::tokenize;

pub trait Embedder: Send + Sync {
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> Vec<f64>;
}

/// Bag-of-words embedder: each token is hashed into one of `dimension`
/// buckets, bucket counts form the vector, and the vector is L2-normalized.
///
/// Tokens are lowercased and stripped of surrounding ASCII punctuation first
/// so that "image." and "Image" land in the same bucket.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dimension: usize,
}

pub const DEFAULT_DIMENSION: usize = 256;

impl HashEmbedder {
    /// # Panics
    /// If `dimension < 8`.
    pub fn new(dimension: usize) -> Self {
        assert!(dimension >= 8, "embedding dimension must be at least 8, got {dimension}");
        Self { dimension }
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self::new(DEFAULT_DIMENSION)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn normalize_token(tok: &str) -> String {
    let trimmed = tok.trim_matches(|c: char| c.is_ascii_punctuation());
    let base = if trimmed.is_empty() { tok } else { trimmed };
    base.to_lowercase()
}

impl Embedder for HashEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Vec<f64> {
        local_embed(text, self.dimension)
    }
}

/// Deterministic hashed token-frequency embedding with unit L2 norm.
/// Text without tokens maps to the zero vector.
pub fn local_embed(text: &str, dimension: usize) -> Vec<f64> {
    let mut v = vec![0.0; dimension];
    for tok in tokenize(text) {
        let bucket = (fnv1a(normalize_token(tok).as_bytes()) % dimension as u64) as usize;
        v[bucket] += 1.0;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sorts `(key, score)` pairs by score descending, ties by key ascending,
/// and keeps the first `k`.
pub fn top_k<K: Ord>(mut scored: Vec<(K, f64)>, k: usize) -> Vec<(K, f64)> {
    scored.sort_by(|(ka, sa), (kb, sb)| match sb.total_cmp(sa) {
        Ordering::Equal => ka.cmp(kb),
        o => o,
    });
    scored.truncate(k);
    scored
}

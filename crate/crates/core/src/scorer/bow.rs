use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{Embedder, ScorerError};
use crate::hash::fnv64;

/// Hashed bag-of-words sentence embedder: lowercase alphanumeric words counted into
/// `dim` buckets and L2-normalized.
#[derive(Debug, Clone, Copy)]
pub struct BagOfWords {
    dim: usize,
}

impl Default for BagOfWords {
    fn default() -> Self {
        BagOfWords { dim: 1024 }
    }
}

impl BagOfWords {
    pub fn new(dim: usize) -> Self {
        BagOfWords { dim: dim.max(1) }
    }

    pub fn words(text: &str) -> impl Iterator<Item = String> + '_ {
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .map(|w| w.chars().flat_map(char::to_lowercase).collect())
    }

    pub fn embed_one(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        let mut any = false;
        for w in Self::words(text) {
            v[(fnv64(w.as_bytes()) % self.dim as u64) as usize] += 1.0;
            any = true;
        }
        if !any {
            v[0] = 1.0;
        }
        let norm = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
        v.iter_mut().for_each(|x| *x /= norm);
        v
    }
}

impl Embedder for BagOfWords {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ScorerError> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = libm::sqrt(a.iter().map(|x| x * x).sum::<f64>());
    let nb = libm::sqrt(b.iter().map(|x| x * x).sum::<f64>());
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

//! Token-level scoring sessions.
//!
//! A [`Scorer`] tokenizes text, returns next-token log-probabilities (optionally
//! restricted to a set of token ids), generates text at temperature 0 and embeds
//! sentences. Restricted log-probabilities are the model's unrestricted values for the
//! requested ids; they are never renormalized over the allowed set.

mod bow;
mod hashed;
mod metered;
mod mock;
mod tokenizer;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use bow::{cosine, BagOfWords};
pub use hashed::HashScorer;
pub use metered::Metered;
pub use mock::{query_instruction, MockScorer, MockScript};
pub use tokenizer::split_pieces;

pub type TokenId = u32;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub ids: Vec<TokenId>,
    pub pieces: Vec<String>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn text(&self) -> String {
        self.pieces.concat()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScorerInfo {
    pub model: String,
    pub vocab_size: usize,
    pub max_context: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScorerError {
    #[error("scorer unavailable (status {status:?}): {detail}")]
    Unavailable { status: Option<u16>, detail: String },
    #[error("scorer protocol error: {0}")]
    Protocol(String),
    #[error("scorer does not support {0}")]
    Unsupported(&'static str),
}

pub type LogProbs = BTreeMap<TokenId, f64>;

pub trait Scorer {
    fn info(&self) -> Result<ScorerInfo, ScorerError>;

    fn tokenize(&self, text: &str) -> Result<TokenSequence, ScorerError>;

    /// Log-probabilities of the next token after `prompt`. With `allowed`, the returned
    /// map has exactly those keys.
    fn next_token_logprobs(
        &self,
        prompt: &[TokenId],
        allowed: Option<&[TokenId]>,
    ) -> Result<LogProbs, ScorerError>;

    /// Greedy (temperature 0) completion.
    fn generate(
        &self,
        prompt: &str,
        stop: &[String],
        max_tokens: usize,
    ) -> Result<String, ScorerError>;

    /// Unit-norm sentence embeddings.
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ScorerError>;

    fn supports_generate(&self) -> bool {
        true
    }
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn info(&self) -> Result<ScorerInfo, ScorerError> {
        (**self).info()
    }
    fn tokenize(&self, text: &str) -> Result<TokenSequence, ScorerError> {
        (**self).tokenize(text)
    }
    fn next_token_logprobs(
        &self,
        prompt: &[TokenId],
        allowed: Option<&[TokenId]>,
    ) -> Result<LogProbs, ScorerError> {
        (**self).next_token_logprobs(prompt, allowed)
    }
    fn generate(
        &self,
        prompt: &str,
        stop: &[String],
        max_tokens: usize,
    ) -> Result<String, ScorerError> {
        (**self).generate(prompt, stop, max_tokens)
    }
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ScorerError> {
        (**self).embed(texts)
    }
    fn supports_generate(&self) -> bool {
        (**self).supports_generate()
    }
}

/// Sentence embedding provider used by semantic example selection.
pub trait Embedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ScorerError>;
}

/// Uses a scorer's `embed` endpoint as an [`Embedder`].
pub struct ScorerEmbedder<'a, S: ?Sized>(pub &'a S);

impl<S: Scorer + ?Sized> Embedder for ScorerEmbedder<'_, S> {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ScorerError> {
        self.0.embed(texts)
    }
}

/// Per-episode call accounting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallStats {
    pub n_logprob_calls: u64,
    /// Number of (position, token) log-probabilities returned.
    pub n_tokens_scored: u64,
    /// Whole-skill scorings (full mode).
    pub n_skill_scorings: u64,
    pub n_generate_calls: u64,
}

impl CallStats {
    pub fn add(&mut self, other: &CallStats) {
        self.n_logprob_calls += other.n_logprob_calls;
        self.n_tokens_scored += other.n_tokens_scored;
        self.n_skill_scorings += other.n_skill_scorings;
        self.n_generate_calls += other.n_generate_calls;
    }
}

/// log(sum(exp(x))) computed stably.
pub fn log_sum_exp<I: IntoIterator<Item = f64> + Clone>(values: I) -> f64 {
    let max = values.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let sum: f64 = values.into_iter().map(|v| libm::exp(v - max)).sum();
    max + libm::log(sum)
}

use alloc::string::String;
use alloc::vec::Vec;
use core::cell::Cell;

use super::{CallStats, LogProbs, Scorer, ScorerError, ScorerInfo, TokenId, TokenSequence};

/// Wraps a session and counts the calls made through it. Single-episode use only.
pub struct Metered<'a, S: ?Sized> {
    inner: &'a S,
    stats: Cell<CallStats>,
}

impl<'a, S: Scorer + ?Sized> Metered<'a, S> {
    pub fn new(inner: &'a S) -> Self {
        Metered {
            inner,
            stats: Cell::new(CallStats::default()),
        }
    }

    pub fn stats(&self) -> CallStats {
        self.stats.get()
    }

    pub fn record_skill_scoring(&self) {
        let mut s = self.stats.get();
        s.n_skill_scorings += 1;
        self.stats.set(s);
    }

    pub fn inner(&self) -> &'a S {
        self.inner
    }
}

impl<S: Scorer + ?Sized> Scorer for Metered<'_, S> {
    fn info(&self) -> Result<ScorerInfo, ScorerError> {
        self.inner.info()
    }

    fn tokenize(&self, text: &str) -> Result<TokenSequence, ScorerError> {
        self.inner.tokenize(text)
    }

    fn next_token_logprobs(
        &self,
        prompt: &[TokenId],
        allowed: Option<&[TokenId]>,
    ) -> Result<LogProbs, ScorerError> {
        let out = self.inner.next_token_logprobs(prompt, allowed)?;
        let mut s = self.stats.get();
        s.n_logprob_calls += 1;
        s.n_tokens_scored += out.len() as u64;
        self.stats.set(s);
        Ok(out)
    }

    fn generate(
        &self,
        prompt: &str,
        stop: &[String],
        max_tokens: usize,
    ) -> Result<String, ScorerError> {
        let mut s = self.stats.get();
        s.n_generate_calls += 1;
        self.stats.set(s);
        self.inner.generate(prompt, stop, max_tokens)
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ScorerError> {
        self.inner.embed(texts)
    }

    fn supports_generate(&self) -> bool {
        self.inner.supports_generate()
    }
}

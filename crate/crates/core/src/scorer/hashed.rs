use alloc::string::String;
use alloc::vec::Vec;

use super::{
    log_sum_exp, LogProbs, MockScorer, Scorer, ScorerError, ScorerInfo, TokenId, TokenSequence,
};
use crate::hash::Fnv64;
use core::hash::Hasher;

/// A pseudo-random language model: next-token logits are a hash of (seed, prompt, token)
/// scaled to `[0, spread)`, normalized over the mock vocabulary. Deterministic and
/// context-sensitive, with no relation to the text.
#[derive(Debug, Clone)]
pub struct HashScorer {
    vocab: MockScorer,
    seed: u64,
    spread: f64,
}

fn mix(mut x: u64) -> u64 {
    x ^= x >> 33;
    x = x.wrapping_mul(0xff51_afd7_ed55_8ccd);
    x ^= x >> 33;
    x = x.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    x ^ (x >> 33)
}

impl HashScorer {
    pub fn new(vocab: MockScorer, seed: u64, spread: f64) -> Self {
        HashScorer {
            vocab,
            seed,
            spread,
        }
    }

    fn logits(&self, prompt: &[TokenId]) -> Vec<f64> {
        let mut h = Fnv64::default();
        h.write_u64(self.seed);
        for id in prompt {
            h.write_u32(*id);
        }
        let base = h.finish();
        (0..self.vocab.vocab_size() as u64)
            .map(|i| (mix(base ^ mix(i)) >> 11) as f64 / (1u64 << 53) as f64 * self.spread)
            .collect()
    }
}

impl Scorer for HashScorer {
    fn info(&self) -> Result<ScorerInfo, ScorerError> {
        let mut info = self.vocab.info()?;
        info.model = "hash".into();
        Ok(info)
    }

    fn tokenize(&self, text: &str) -> Result<TokenSequence, ScorerError> {
        self.vocab.tokenize(text)
    }

    fn next_token_logprobs(
        &self,
        prompt: &[TokenId],
        allowed: Option<&[TokenId]>,
    ) -> Result<LogProbs, ScorerError> {
        let v = self.vocab.vocab_size();
        if let Some(bad) = prompt
            .iter()
            .chain(allowed.unwrap_or(&[]))
            .find(|&&id| id as usize >= v)
        {
            return Err(ScorerError::Protocol(alloc::format!(
                "token id {bad} out of range"
            )));
        }
        let logits = self.logits(prompt);
        let z = log_sum_exp(logits.iter().copied());
        Ok(match allowed {
            Some(ids) => ids
                .iter()
                .map(|&id| (id, logits[id as usize] - z))
                .collect(),
            None => logits
                .iter()
                .enumerate()
                .map(|(i, l)| (i as TokenId, l - z))
                .collect(),
        })
    }

    fn generate(
        &self,
        _prompt: &str,
        _stop: &[String],
        _max_tokens: usize,
    ) -> Result<String, ScorerError> {
        Err(ScorerError::Unsupported("generate"))
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ScorerError> {
        self.vocab.embed(texts)
    }

    fn supports_generate(&self) -> bool {
        false
    }
}

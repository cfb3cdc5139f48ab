use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{
    split_pieces, BagOfWords, LogProbs, Scorer, ScorerError, ScorerInfo, TokenId, TokenSequence,
};
use crate::skills::{normalize_step, Profile, TERMINAL_SURFACE};
use crate::worldsim::FEEDBACK_MARKER;

const UNK: &str = "<unk>";
const QUERY_MARKER: &str = "Human: ";

fn default_peak() -> f64 {
    0.9
}

fn default_max_context() -> usize {
    4096
}

/// Scripted plans for the mock scorer, keyed by instruction text.
///
/// Steps are skill surfaces and may carry a literal feedback suffix
/// (`"pick up the apple (this action failed: ...)"`), in which case the script only
/// continues past that step when the prompt history shows the same failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockScript {
    #[serde(default)]
    pub plans: BTreeMap<String, Vec<String>>,
    /// Raw generative replies; override `plans` for `generate`.
    #[serde(default)]
    pub replies: BTreeMap<String, String>,
    #[serde(default = "default_peak")]
    pub peak_prob: f64,
    #[serde(default)]
    pub generate: bool,
    #[serde(default = "default_max_context")]
    pub max_context: usize,
}

impl Default for MockScript {
    fn default() -> Self {
        MockScript {
            plans: BTreeMap::new(),
            replies: BTreeMap::new(),
            peak_prob: default_peak(),
            generate: false,
            max_context: default_max_context(),
        }
    }
}

fn strip_feedback(step: &str) -> &str {
    match step.find(FEEDBACK_MARKER) {
        Some(i) => &step[..i],
        None => step,
    }
}

impl MockScript {
    pub fn with_plan<S: AsRef<str>>(mut self, instruction: &str, steps: &[S]) -> Self {
        self.plans.insert(
            instruction.into(),
            steps.iter().map(|s| s.as_ref().to_string()).collect(),
        );
        self
    }

    /// Checks the peak probability and that every scripted step parses under at least
    /// one of `profiles`.
    pub fn validate(&self, profiles: &[Profile]) -> Result<(), String> {
        if !(self.peak_prob > 0.0 && self.peak_prob < 1.0) {
            return Err(format!(
                "peak_prob must lie in (0, 1), got {}",
                self.peak_prob
            ));
        }
        for (instr, steps) in &self.plans {
            for (i, step) in steps.iter().enumerate() {
                let bare = strip_feedback(step);
                if !profiles.iter().any(|p| p.parse(bare).is_ok()) {
                    return Err(format!(
                        "plan for {instr:?}: step {} {bare:?} is not a valid skill",
                        i + 1
                    ));
                }
                if bare == TERMINAL_SURFACE && i + 1 != steps.len() {
                    return Err(format!("plan for {instr:?}: steps after done"));
                }
            }
        }
        Ok(())
    }

    /// The text a perfect planner would append after `"Robot:"`.
    pub fn continuation(steps: &[String]) -> String {
        let mut out = String::new();
        for (i, step) in steps.iter().enumerate() {
            let term = if normalize_step(step) == TERMINAL_SURFACE {
                '.'
            } else {
                ','
            };
            out.push_str(&format!(" {}. {}{}", i + 1, step, term));
        }
        out
    }
}

/// Splits off the query instruction (the text after the last `"Human: "` up to the end
/// of that line) and the rest of the prompt.
pub fn query_instruction(text: &str) -> Option<(&str, &str)> {
    let start = text.rfind(QUERY_MARKER)?;
    let line = &text[start + QUERY_MARKER.len()..];
    let end = line.find('\n').unwrap_or(line.len());
    Some((line[..end].trim(), &line[end..]))
}

/// Deterministic scripted scorer. On-script prompts put `peak_prob` on the next scripted
/// token and spread the remainder uniformly; anything else is uniform over the vocabulary.
#[derive(Debug, Clone)]
pub struct MockScorer {
    script: MockScript,
    pieces: Vec<String>,
    index: BTreeMap<String, TokenId>,
    unk: TokenId,
    continuations: BTreeMap<String, Vec<TokenId>>,
    embedder: BagOfWords,
}

impl MockScorer {
    /// Builds the vocabulary from printable ASCII, the script and `corpus`.
    pub fn new<S: AsRef<str>>(script: MockScript, corpus: &[S]) -> Result<Self, ScorerError> {
        if !(script.peak_prob > 0.0 && script.peak_prob < 1.0) {
            return Err(ScorerError::Protocol(format!(
                "peak_prob must lie in (0, 1), got {}",
                script.peak_prob
            )));
        }
        let mut vocab: BTreeSet<String> = BTreeSet::new();
        vocab.insert(UNK.into());
        for c in (0x20u8..0x7f).map(char::from).chain(['\n', '\t']) {
            vocab.insert(c.to_string());
            if !c.is_whitespace() {
                vocab.insert(format!(" {c}"));
            }
        }
        let conts: Vec<(String, String)> = script
            .plans
            .iter()
            .map(|(k, v)| (k.clone(), MockScript::continuation(v)))
            .collect();
        let texts = corpus
            .iter()
            .map(AsRef::as_ref)
            .chain(conts.iter().flat_map(|(k, c)| [k.as_str(), c.as_str()]))
            .chain(
                script
                    .replies
                    .iter()
                    .flat_map(|(k, r)| [k.as_str(), r.as_str()]),
            );
        for t in texts {
            vocab.extend(split_pieces(t).into_iter().map(String::from));
        }
        let pieces: Vec<String> = vocab.into_iter().collect();
        let index: BTreeMap<String, TokenId> = pieces
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i as TokenId))
            .collect();
        let unk = index[UNK];
        let mut scorer = MockScorer {
            script,
            pieces,
            index,
            unk,
            continuations: BTreeMap::new(),
            embedder: BagOfWords::default(),
        };
        scorer.continuations = conts
            .iter()
            .map(|(k, c)| (k.clone(), scorer.encode(c).ids))
            .collect();
        Ok(scorer)
    }

    /// A mock without plans: every call returns the uniform distribution.
    pub fn uniform<S: AsRef<str>>(corpus: &[S]) -> Self {
        Self::new(MockScript::default(), corpus).expect("default script is valid")
    }

    pub fn script(&self) -> &MockScript {
        &self.script
    }

    pub fn vocab_size(&self) -> usize {
        self.pieces.len()
    }

    pub fn piece(&self, id: TokenId) -> Option<&str> {
        self.pieces.get(id as usize).map(String::as_str)
    }

    fn encode(&self, text: &str) -> TokenSequence {
        let mut seq = TokenSequence::default();
        for piece in split_pieces(text) {
            if let Some(&id) = self.index.get(piece) {
                seq.ids.push(id);
                seq.pieces.push(piece.into());
                continue;
            }
            for c in piece.chars() {
                let mut buf = [0u8; 4];
                let s = c.encode_utf8(&mut buf);
                seq.ids
                    .push(self.index.get(&*s).copied().unwrap_or(self.unk));
                seq.pieces.push(s.to_string());
            }
        }
        seq
    }

    fn decode(&self, ids: &[TokenId]) -> Result<String, ScorerError> {
        let mut out = String::new();
        for &id in ids {
            match self.pieces.get(id as usize) {
                Some(_) if id == self.unk => out.push('\u{fffd}'),
                Some(p) => out.push_str(p),
                None => return Err(ScorerError::Protocol(format!("token id {id} out of range"))),
            }
        }
        Ok(out)
    }

    fn scripted_next(&self, text: &str) -> Option<TokenId> {
        let (instr, rest) = query_instruction(text)?;
        let tail = rest.strip_prefix("\nRobot:")?;
        let cont = self.continuations.get(instr)?;
        let seen = self.encode(tail).ids;
        (seen.len() < cont.len() && cont.starts_with(&seen)).then(|| cont[seen.len()])
    }
}

impl Scorer for MockScorer {
    fn info(&self) -> Result<ScorerInfo, ScorerError> {
        Ok(ScorerInfo {
            model: "mock".into(),
            vocab_size: self.pieces.len(),
            max_context: self.script.max_context,
        })
    }

    fn tokenize(&self, text: &str) -> Result<TokenSequence, ScorerError> {
        Ok(self.encode(text))
    }

    fn next_token_logprobs(
        &self,
        prompt: &[TokenId],
        allowed: Option<&[TokenId]>,
    ) -> Result<LogProbs, ScorerError> {
        let v = self.pieces.len();
        if let Some(bad) = allowed.and_then(|a| a.iter().find(|&&id| id as usize >= v)) {
            return Err(ScorerError::Protocol(format!(
                "token id {bad} out of range"
            )));
        }
        let text = self.decode(prompt)?;
        let target = self.scripted_next(&text);
        let peak = libm::log(self.script.peak_prob);
        let rest = libm::log((1.0 - self.script.peak_prob) / (v as f64 - 1.0));
        let flat = -libm::log(v as f64);
        let lp = |id: TokenId| match target {
            Some(t) if t == id => peak,
            Some(_) => rest,
            None => flat,
        };
        Ok(match allowed {
            Some(ids) => ids.iter().map(|&id| (id, lp(id))).collect(),
            None => (0..v as TokenId).map(|id| (id, lp(id))).collect(),
        })
    }

    fn generate(
        &self,
        prompt: &str,
        stop: &[String],
        max_tokens: usize,
    ) -> Result<String, ScorerError> {
        if !self.script.generate {
            return Err(ScorerError::Unsupported("generate"));
        }
        let Some((instr, _)) = query_instruction(prompt) else {
            return Ok(String::new());
        };
        let mut reply = match (self.script.replies.get(instr), self.script.plans.get(instr)) {
            (Some(r), _) => r.clone(),
            (None, Some(steps)) => MockScript::continuation(steps).trim_start().to_string(),
            (None, None) => String::new(),
        };
        if let Some(cut) = stop
            .iter()
            .filter(|s| !s.is_empty())
            .filter_map(|s| reply.find(s.as_str()))
            .min()
        {
            reply.truncate(cut);
        }
        let toks = self.encode(&reply);
        if toks.len() > max_tokens {
            reply = toks.pieces[..max_tokens].concat();
        }
        Ok(reply)
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ScorerError> {
        Ok(texts.iter().map(|t| self.embedder.embed_one(t)).collect())
    }

    fn supports_generate(&self) -> bool {
        self.script.generate
    }
}

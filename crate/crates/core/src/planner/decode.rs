use alloc::collections::BTreeMap;
use alloc::format;
use alloc::rc::Rc;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::trie::SkillTrie;
use super::PlanError;
use crate::scorer::{Scorer, ScorerError, TokenId};
use crate::skills::{SkillSet, TERMINAL_SURFACE};

/// Text appended after a skill surface when it is decoded inside a plan line.
pub fn terminator(surface: &str) -> &'static str {
    if surface == TERMINAL_SURFACE {
        "."
    } else {
        ","
    }
}

fn common_prefix(a: &[TokenId], b: &[TokenId]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

/// Candidate token paths for one prompt-tail class.
///
/// The tail is the prompt text from its last whitespace on (`" 3."`). Each skill is
/// tokenized as `tail + " " + surface + terminator`; the shared leading tokens that
/// agree with the tokenized tail for every skill stay in the context and the rest form
/// the skill's path. When the tokenizer merges across the boundary the tail tokens that
/// differ are re-decoded as part of every path.
#[derive(Debug, Clone)]
pub struct TailClass {
    pub tail_ids: Vec<TokenId>,
    /// Prompt tokens removed from the end of the prompt before decoding.
    pub drop: usize,
    pub paths: Vec<Vec<TokenId>>,
    pub trie: SkillTrie,
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub context: Vec<TokenId>,
    pub class: Rc<TailClass>,
}

fn build_class(
    skills: &SkillSet,
    tail_ids: Vec<TokenId>,
    drop: usize,
    paths: Vec<Vec<TokenId>>,
) -> Result<TailClass, PlanError> {
    let trie = SkillTrie::build(&paths).map_err(|c| PlanError::NotPrefixFree {
        first: skills.surface(c.first).to_string(),
        second: skills.surface(c.second).to_string(),
    })?;
    Ok(TailClass {
        tail_ids,
        drop,
        paths,
        trie,
    })
}

/// Builds and caches decoding candidates per prompt tail for one skill set.
#[derive(Debug)]
pub struct Decoder<'a> {
    skills: &'a SkillSet,
    classes: BTreeMap<String, Rc<TailClass>>,
}

impl<'a> Decoder<'a> {
    pub fn new(skills: &'a SkillSet) -> Result<Self, PlanError> {
        if skills.is_empty() {
            return Err(PlanError::EmptySkillSet);
        }
        Ok(Decoder {
            skills,
            classes: BTreeMap::new(),
        })
    }

    pub fn skills(&self) -> &'a SkillSet {
        self.skills
    }

    pub fn prepare<S: Scorer + ?Sized>(
        &mut self,
        session: &S,
        prompt: &str,
        prompt_ids: &[TokenId],
    ) -> Result<Prepared, PlanError> {
        let tail_start = prompt.rfind(char::is_whitespace).unwrap_or(0);
        let tail = &prompt[tail_start..];
        if let Some(class) = self.classes.get(tail) {
            if prompt_ids.ends_with(&class.tail_ids) {
                let context = prompt_ids[..prompt_ids.len() - class.drop].to_vec();
                return Ok(Prepared {
                    context,
                    class: class.clone(),
                });
            }
        }
        let tail_ids = session.tokenize(tail)?.ids;
        if !tail_ids.is_empty() && prompt_ids.ends_with(&tail_ids) {
            let mut conts = Vec::with_capacity(self.skills.len());
            for surface in self.skills.surfaces() {
                conts.push(
                    session
                        .tokenize(&format!("{tail} {surface}{}", terminator(surface)))?
                        .ids,
                );
            }
            let keep = conts
                .iter()
                .map(|c| common_prefix(&tail_ids, c))
                .min()
                .unwrap_or(0);
            let paths = conts.into_iter().map(|c| c[keep..].to_vec()).collect();
            let class = Rc::new(build_class(
                self.skills,
                tail_ids.clone(),
                tail_ids.len() - keep,
                paths,
            )?);
            self.classes.insert(tail.to_string(), class.clone());
            let context = prompt_ids[..prompt_ids.len() - class.drop].to_vec();
            return Ok(Prepared { context, class });
        }
        // The tail does not tokenize the same on its own: fall back to whole-prompt
        // tokenization, uncached.
        let mut fulls = Vec::with_capacity(self.skills.len());
        for surface in self.skills.surfaces() {
            fulls.push(
                session
                    .tokenize(&format!("{prompt} {surface}{}", terminator(surface)))?
                    .ids,
            );
        }
        let keep = fulls
            .iter()
            .map(|f| common_prefix(prompt_ids, f))
            .min()
            .unwrap_or(0);
        let paths = fulls.into_iter().map(|f| f[keep..].to_vec()).collect();
        let class = Rc::new(build_class(
            self.skills,
            Vec::new(),
            prompt_ids.len() - keep,
            paths,
        )?);
        Ok(Prepared {
            context: prompt_ids[..keep].to_vec(),
            class,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Choice {
    pub index: usize,
    pub logprob: f64,
    /// Log-probability of each decoded token, in order.
    pub token_logprobs: Vec<f64>,
    /// Whole-skill scorings performed (full mode only).
    pub skill_scorings: usize,
}

fn lookup(map: &BTreeMap<TokenId, f64>, tok: TokenId) -> Result<f64, ScorerError> {
    map.get(&tok)
        .copied()
        .ok_or_else(|| ScorerError::Protocol(format!("missing logprob for token {tok}")))
}

/// Σ log p(path[n] | context, path[..n]), one restricted call per token.
pub fn score_path<S: Scorer + ?Sized>(
    session: &S,
    context: &[TokenId],
    path: &[TokenId],
) -> Result<(f64, Vec<f64>), ScorerError> {
    let mut prefix = context.to_vec();
    let mut lps = Vec::with_capacity(path.len());
    for &tok in path {
        let out = session.next_token_logprobs(&prefix, Some(&[tok]))?;
        lps.push(lookup(&out, tok)?);
        prefix.push(tok);
    }
    Ok((lps.iter().sum(), lps))
}

/// Log-likelihood of `surface` (plus its terminator) as the continuation of `prompt`.
pub fn score_skill<S: Scorer + ?Sized>(
    session: &S,
    prompt: &str,
    surface: &str,
) -> Result<f64, PlanError> {
    let prompt_ids = session.tokenize(prompt)?.ids;
    let tail_start = prompt.rfind(char::is_whitespace).unwrap_or(0);
    let tail = &prompt[tail_start..];
    let tail_ids = session.tokenize(tail)?.ids;
    let cont = session
        .tokenize(&format!("{tail} {surface}{}", terminator(surface)))?
        .ids;
    let (context, path) = if !tail_ids.is_empty() && prompt_ids.ends_with(&tail_ids) {
        let keep = common_prefix(&tail_ids, &cont);
        (
            &prompt_ids[..prompt_ids.len() - tail_ids.len() + keep],
            cont[keep..].to_vec(),
        )
    } else {
        let full = session
            .tokenize(&format!("{prompt} {surface}{}", terminator(surface)))?
            .ids;
        let keep = common_prefix(&prompt_ids, &full);
        (&prompt_ids[..keep], full[keep..].to_vec())
    };
    Ok(score_path(session, context, &path)?.0)
}

/// Scores every skill and returns the best; ties go to the earlier skill.
pub fn next_skill_full<S: Scorer + ?Sized>(
    session: &S,
    prepared: &Prepared,
) -> Result<Choice, ScorerError> {
    let mut best: Option<Choice> = None;
    for (index, path) in prepared.class.paths.iter().enumerate() {
        let (logprob, token_logprobs) = score_path(session, &prepared.context, path)?;
        if best.as_ref().is_none_or(|b| logprob > b.logprob) {
            best = Some(Choice {
                index,
                logprob,
                token_logprobs,
                skill_scorings: 0,
            });
        }
    }
    let mut best = best.expect("non-empty skill set");
    best.skill_scorings = prepared.class.paths.len();
    Ok(best)
}

/// Walks the trie taking the most likely child token at each node; ties go to the
/// lowest token id.
pub fn next_skill_greedy<S: Scorer + ?Sized>(
    session: &S,
    prepared: &Prepared,
) -> Result<Choice, ScorerError> {
    let trie = &prepared.class.trie;
    let mut prefix = prepared.context.clone();
    let mut node = SkillTrie::ROOT;
    let mut lps = Vec::new();
    loop {
        if let Some(index) = trie.leaf(node) {
            return Ok(Choice {
                index,
                logprob: lps.iter().sum(),
                token_logprobs: lps,
                skill_scorings: 0,
            });
        }
        let children = trie.child_tokens(node);
        let out = session.next_token_logprobs(&prefix, Some(&children))?;
        let mut pick = (children[0], lookup(&out, children[0])?);
        for &tok in &children[1..] {
            let lp = lookup(&out, tok)?;
            if lp > pick.1 {
                pick = (tok, lp);
            }
        }
        lps.push(pick.1);
        prefix.push(pick.0);
        node = trie.child(node, pick.0).expect("child exists");
    }
}

/// Follows the path of skill `index` through the trie, recording the log-probability
/// of each forced token under a children-restricted call.
pub fn forced_walk<S: Scorer + ?Sized>(
    session: &S,
    prepared: &Prepared,
    index: usize,
) -> Result<Vec<f64>, ScorerError> {
    let trie = &prepared.class.trie;
    let mut prefix = prepared.context.clone();
    let mut node = SkillTrie::ROOT;
    let mut lps = Vec::new();
    for &tok in &prepared.class.paths[index] {
        let out = session.next_token_logprobs(&prefix, Some(&trie.child_tokens(node)))?;
        lps.push(lookup(&out, tok)?);
        prefix.push(tok);
        node = trie.child(node, tok).expect("path is in trie");
    }
    Ok(lps)
}

//! In-context example pools and the three selection strategies.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::planner::PromptExample;
use crate::scorer::{Embedder, ScorerError};
use crate::skills::Profile;
use crate::task::TaskType;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Example {
    pub instruction: String,
    pub plan: Vec<String>,
    pub task_type: String,
}

impl Example {
    pub fn to_prompt(&self) -> PromptExample {
        PromptExample {
            instruction: self.instruction.clone(),
            plan: self.plan.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ExamplePool {
    pub source: String,
    pub entries: Vec<Example>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SelectionError {
    #[error("task type {task_type:?} has {have} examples, {need} requested")]
    Insufficient {
        task_type: String,
        have: usize,
        need: usize,
    },
    #[error("no examples of task type {0:?}")]
    UnknownTaskType(String),
    #[error("pool has {have} examples, {need} requested")]
    PoolTooSmall { have: usize, need: usize },
    #[error("pool entry {index}: {reason}")]
    InvalidEntry { index: usize, reason: String },
    #[error("embedding failed: {0}")]
    Embed(#[from] ScorerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Random,
    TaskSpecific,
    Semantic,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::TaskSpecific => "task_specific",
            Strategy::Semantic => "semantic",
        }
    }
}

impl core::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Strategy::Random),
            "task_specific" | "task-specific" => Ok(Strategy::TaskSpecific),
            "semantic" => Ok(Strategy::Semantic),
            other => Err(format!(
                "unknown strategy {other:?} (expected random, task_specific or semantic)"
            )),
        }
    }
}

/// `n` is per task type for `Random` and in total otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub strategy: Strategy,
    pub n: usize,
    pub seed: u64,
}

impl ExamplePool {
    pub fn new(source: &str, entries: Vec<Example>) -> Self {
        ExamplePool {
            source: source.into(),
            entries,
        }
    }

    /// Checks that every plan parses under `profile` and every task type belongs to it.
    pub fn validate(&self, profile: &Profile) -> Result<(), SelectionError> {
        for (index, e) in self.entries.iter().enumerate() {
            let invalid = |reason: String| SelectionError::InvalidEntry { index, reason };
            let tt: TaskType = e.task_type.parse().map_err(invalid)?;
            if tt.profile() != profile.kind() {
                return Err(invalid(format!(
                    "task type {:?} is not a {} task type",
                    e.task_type,
                    profile.kind()
                )));
            }
            for step in &e.plan {
                profile
                    .parse(step)
                    .map_err(|err| invalid(format!("step {step:?}: {err}")))?;
            }
        }
        Ok(())
    }

    /// Task types in order of first appearance.
    pub fn task_types(&self) -> Vec<&str> {
        let mut seen: Vec<&str> = Vec::new();
        for e in &self.entries {
            if !seen.contains(&e.task_type.as_str()) {
                seen.push(&e.task_type);
            }
        }
        seen
    }

    fn stratum(&self, task_type: &str) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.task_type == task_type)
            .map(|(i, _)| i)
            .collect()
    }
}

fn draw(indices: &mut [usize], n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let (picked, _) = indices.partial_shuffle(rng, n);
    picked.to_vec()
}

/// `n` draws without replacement from each task type; grouped by task type in pool
/// order, draw order within a type.
pub fn select_random(
    pool: &ExamplePool,
    n: usize,
    seed: u64,
) -> Result<Vec<&Example>, SelectionError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for tt in pool.task_types() {
        let mut stratum = pool.stratum(tt);
        if stratum.len() < n {
            return Err(SelectionError::Insufficient {
                task_type: tt.to_string(),
                have: stratum.len(),
                need: n,
            });
        }
        out.extend(
            draw(&mut stratum, n, &mut rng)
                .into_iter()
                .map(|i| &pool.entries[i]),
        );
    }
    Ok(out)
}

/// `n` draws without replacement from the entries of one task type.
pub fn select_task_specific<'p>(
    pool: &'p ExamplePool,
    task_type: &str,
    n: usize,
    seed: u64,
) -> Result<Vec<&'p Example>, SelectionError> {
    let mut stratum = pool.stratum(task_type);
    if stratum.is_empty() {
        return Err(SelectionError::UnknownTaskType(task_type.into()));
    }
    if stratum.len() < n {
        return Err(SelectionError::Insufficient {
            task_type: task_type.into(),
            have: stratum.len(),
            need: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(draw(&mut stratum, n, &mut rng)
        .into_iter()
        .map(|i| &pool.entries[i])
        .collect())
}

/// Similarities within 1e-12 of each other rank as ties.
fn tie_key(sim: f64) -> f64 {
    libm::round(sim * 1e12)
}

/// Pool indices with cosine similarity to `instruction`, most similar first; ties by
/// pool index.
pub fn rank_semantic<E: Embedder + ?Sized>(
    pool: &ExamplePool,
    instruction: &str,
    embedder: &E,
) -> Result<Vec<(usize, f64)>, SelectionError> {
    let mut texts = Vec::with_capacity(pool.entries.len() + 1);
    texts.push(instruction.to_string());
    texts.extend(pool.entries.iter().map(|e| e.instruction.clone()));
    let vecs = embedder.embed(&texts)?;
    if vecs.len() != texts.len() {
        return Err(ScorerError::Protocol(format!(
            "{} embeddings for {} texts",
            vecs.len(),
            texts.len()
        ))
        .into());
    }
    let q = &vecs[0];
    let mut scored: Vec<(usize, f64)> = vecs[1..]
        .iter()
        .enumerate()
        .map(|(i, v)| (i, q.iter().zip(v).map(|(a, b)| a * b).sum()))
        .collect();
    scored.sort_by(|a, b| tie_key(b.1).total_cmp(&tie_key(a.1)).then(a.0.cmp(&b.0)));
    Ok(scored)
}

/// The `n` pool entries most similar to `instruction`, most similar first.
pub fn select_semantic<'p, E: Embedder + ?Sized>(
    pool: &'p ExamplePool,
    instruction: &str,
    n: usize,
    embedder: &E,
) -> Result<Vec<&'p Example>, SelectionError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if pool.entries.len() < n {
        return Err(SelectionError::PoolTooSmall {
            have: pool.entries.len(),
            need: n,
        });
    }
    let ranked = rank_semantic(pool, instruction, embedder)?;
    Ok(ranked
        .into_iter()
        .take(n)
        .map(|(i, _)| &pool.entries[i])
        .collect())
}

/// Selects examples for one query and returns them in prompt order. Semantic picks are
/// placed most-similar-last, next to the query.
pub fn select_for_prompt<E: Embedder + ?Sized>(
    pool: &ExamplePool,
    config: &SelectionConfig,
    instruction: &str,
    task_type: &str,
    embedder: &E,
) -> Result<Vec<PromptExample>, SelectionError> {
    let picked = match config.strategy {
        Strategy::Random => select_random(pool, config.n, config.seed)?,
        Strategy::TaskSpecific => select_task_specific(pool, task_type, config.n, config.seed)?,
        Strategy::Semantic => {
            let mut v = select_semantic(pool, instruction, config.n, embedder)?;
            v.reverse();
            v
        }
    };
    Ok(picked.into_iter().map(Example::to_prompt).collect())
}

/// Per-type entry counts.
pub fn type_counts(pool: &ExamplePool) -> BTreeMap<&str, usize> {
    let mut m = BTreeMap::new();
    for e in &pool.entries {
        *m.entry(e.task_type.as_str()).or_insert(0) += 1;
    }
    m
}

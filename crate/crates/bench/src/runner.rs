//! Batch episode execution.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Mutex;

use lota_core::examples::{
    select_for_prompt, ExamplePool, SelectionConfig, SelectionError, Strategy,
};
use lota_core::hash::{episode_seed, fnv64};
use lota_core::planner::{
    plan_episode, EpisodeConfig, EpisodeInput, EpisodeRecord, Mode, PromptExample, RawExample,
    Termination, DEFAULT_MAX_STEPS, DEFAULT_PREFIX,
};
use lota_core::scorer::{CallStats, Embedder, Scorer, ScorerError};
use lota_core::task::{TaskSpec, TaskType};
use lota_core::ProfileKind;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::DatasetError;
use crate::report::{fingerprint, BenchmarkReport, EpisodeRow};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScorerSpec {
    /// A mock with no plans: uniform everywhere.
    MockUniform,
    Mock(PathBuf),
    Remote(String),
}

impl FromStr for ScorerSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "mock:uniform" {
            Ok(ScorerSpec::MockUniform)
        } else if let Some(p) = s.strip_prefix("mock:") {
            Ok(ScorerSpec::Mock(p.into()))
        } else if let Some(u) = s.strip_prefix("remote:") {
            Ok(ScorerSpec::Remote(u.into()))
        } else {
            Err(format!(
                "scorer must be mock:uniform, mock:<script.json> or remote:<url>, got {s:?}"
            ))
        }
    }
}

impl std::fmt::Display for ScorerSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScorerSpec::MockUniform => f.write_str("mock:uniform"),
            ScorerSpec::Mock(p) => write!(f, "mock:{}", p.display()),
            ScorerSpec::Remote(u) => write!(f, "remote:{u}"),
        }
    }
}

/// Resolved run settings. Fields that cannot change results (`parallelism`, `out`,
/// `trace`) are left out of the serialized form and therefore out of the fingerprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: String,
    pub profile: Option<ProfileKind>,
    pub mode: Mode,
    pub scorer: String,
    pub strategy: Strategy,
    pub n_examples: usize,
    pub seed: u64,
    pub replanning: bool,
    pub max_steps: usize,
    pub sample_fraction: f64,
    pub instruction_index: usize,
    pub alfred_pool: Option<String>,
    pub wah_pool: Option<String>,
    pub replanning_examples: Option<String>,
    pub allow_list: Option<String>,
    #[serde(skip)]
    pub parallelism: usize,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub trace: bool,
}

impl RunConfig {
    pub fn new(dataset: &str, scorer: &str) -> Self {
        RunConfig {
            dataset: dataset.into(),
            profile: None,
            mode: Mode::Greedy,
            scorer: scorer.into(),
            strategy: Strategy::Random,
            n_examples: 1,
            seed: 0,
            replanning: false,
            max_steps: DEFAULT_MAX_STEPS,
            sample_fraction: 1.0,
            instruction_index: 0,
            alfred_pool: None,
            wah_pool: None,
            replanning_examples: None,
            allow_list: None,
            parallelism: 1,
            out: None,
            trace: false,
        }
    }

    pub fn selection(&self) -> SelectionConfig {
        SelectionConfig {
            strategy: self.strategy,
            n: self.n_examples,
            seed: self.seed,
        }
    }

    pub fn episode(&self) -> EpisodeConfig {
        EpisodeConfig {
            mode: self.mode,
            max_steps: self.max_steps,
            replanning: self.replanning,
            ..EpisodeConfig::default()
        }
    }
}

/// Inputs other than the tasks: example pools per profile, replanning examples, the
/// optional allow-list, and the text digests that enter the fingerprint.
#[derive(Debug, Clone, Default)]
pub struct Resources {
    pub pools: BTreeMap<ProfileKind, ExamplePool>,
    pub replanning_examples: Vec<RawExample>,
    pub allow_list: Option<Vec<(usize, String)>>,
    pub digests: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("dataset error: {0}")]
    Dataset(#[from] DatasetError),
    #[error("every episode failed on scorer infrastructure ({0} episodes)")]
    AllInfra(usize),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Dataset(_) => 2,
            RunError::AllInfra(_) => 3,
        }
    }
}

/// Embeddings memoized by text hash.
pub struct CachedEmbedder<'a, S: ?Sized> {
    scorer: &'a S,
    cache: Mutex<HashMap<u64, Vec<f64>>>,
}

impl<'a, S: Scorer + ?Sized> CachedEmbedder<'a, S> {
    pub fn new(scorer: &'a S) -> Self {
        CachedEmbedder {
            scorer,
            cache: Mutex::new(HashMap::new()),
        }
    }
}

impl<S: Scorer + ?Sized> Embedder for CachedEmbedder<'_, S> {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ScorerError> {
        let keys: Vec<u64> = texts.iter().map(|t| fnv64(t.as_bytes())).collect();
        let missing: Vec<String> = {
            let cache = self.cache.lock().expect("embedding cache");
            let mut seen = std::collections::HashSet::new();
            texts
                .iter()
                .zip(&keys)
                .filter(|(_, k)| !cache.contains_key(k) && seen.insert(**k))
                .map(|(t, _)| t.clone())
                .collect()
        };
        if !missing.is_empty() {
            let vecs = self.scorer.embed(&missing)?;
            let mut cache = self.cache.lock().expect("embedding cache");
            for (t, v) in missing.iter().zip(vecs) {
                cache.insert(fnv64(t.as_bytes()), v);
            }
        }
        let cache = self.cache.lock().expect("embedding cache");
        Ok(keys.iter().map(|k| cache[k].clone()).collect())
    }
}

type Prepared<'a> = (&'a TaskSpec, &'a str, Result<Vec<PromptExample>, String>);

/// Seeded subset of task indices in dataset order.
pub fn sample_tasks(n: usize, fraction: f64, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    if fraction >= 1.0 || n == 0 {
        return idx;
    }
    let k = ((fraction * n as f64).ceil() as usize).clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (picked, _) = idx.partial_shuffle(&mut rng, k);
    let mut picked = picked.to_vec();
    picked.sort_unstable();
    picked
}

fn infra_record(
    task: &TaskSpec,
    instruction: &str,
    error: String,
) -> Result<EpisodeRecord, DatasetError> {
    let world = task.world()?;
    Ok(EpisodeRecord {
        task_id: task.task_id.clone(),
        instruction: instruction.into(),
        chosen_skills: Vec::new(),
        step_results: Vec::new(),
        goal_report: lota_core::evaluate_goal(&world, &task.goal),
        call_stats: CallStats::default(),
        termination: Termination::InfraFailure,
        trace: Vec::new(),
        skipped_steps: Vec::new(),
        error: Some(error),
    })
}

/// Runs every (sampled) task once and assembles the report. Results do not depend on
/// `parallelism`: each episode owns its world and derives its seed from the task id.
pub fn run_benchmark<S: Scorer + Sync + ?Sized>(
    tasks: &[TaskSpec],
    resources: &Resources,
    scorer: &S,
    config: &RunConfig,
) -> Result<BenchmarkReport, RunError> {
    if config.mode == Mode::Generative && !scorer.supports_generate() {
        return Err(RunError::Config(
            "generative mode needs a scorer that supports generate".into(),
        ));
    }
    if config.replanning && resources.replanning_examples.is_empty() {
        return Err(RunError::Config(
            "replanning needs replanning examples".into(),
        ));
    }
    if !(config.sample_fraction > 0.0 && config.sample_fraction <= 1.0) {
        return Err(RunError::Config(format!(
            "sample fraction must lie in (0, 1], got {}",
            config.sample_fraction
        )));
    }
    if config.max_steps == 0 {
        return Err(RunError::Config("max steps must be at least 1".into()));
    }
    let selected: Vec<&TaskSpec> = tasks
        .iter()
        .filter(|t| config.profile.is_none_or(|p| t.task_type.profile() == p))
        .collect();
    let chosen: Vec<&TaskSpec> = sample_tasks(selected.len(), config.sample_fraction, config.seed)
        .into_iter()
        .map(|i| selected[i])
        .collect();

    let embedder = CachedEmbedder::new(scorer);
    let mut prepared: Vec<Prepared> = Vec::with_capacity(chosen.len());
    for task in chosen {
        let instruction = task
            .instruction(config.instruction_index.min(task.instructions.len() - 1))
            .expect("lint");
        let profile = task.task_type.profile();
        let pool = resources
            .pools
            .get(&profile)
            .ok_or_else(|| RunError::Config(format!("no example pool for profile {profile}")))?;
        let mut sel = config.selection();
        sel.seed = episode_seed(config.seed, &task.task_id);
        let examples =
            match select_for_prompt(pool, &sel, instruction, task.task_type.name(), &embedder) {
                Ok(ex) => Ok(ex),
                Err(SelectionError::Embed(e)) => Err(e.to_string()),
                Err(e) => return Err(RunError::Config(format!("task {}: {e}", task.task_id))),
            };
        prepared.push((task, instruction, examples));
    }

    let episode_cfg = config.episode();
    let run_one =
        |(task, instruction, examples): &(&TaskSpec, &str, Result<Vec<PromptExample>, String>)| {
            let examples = match examples {
                Ok(e) => e,
                Err(err) => {
                    return infra_record(task, instruction, err.clone())
                        .map(|r| (task.task_type, r))
                }
            };
            let skills = task.skill_set(resources.allow_list.as_deref())?;
            let world = task.world()?;
            let input = EpisodeInput {
                task_id: &task.task_id,
                instruction,
                goal: &task.goal,
                prefix: DEFAULT_PREFIX,
                examples,
                replanning_examples: Some(&resources.replanning_examples),
            };
            Ok::<_, DatasetError>((
                task.task_type,
                plan_episode(&input, world, &skills, scorer, &episode_cfg),
            ))
        };
    let threads = config.parallelism.max(1);
    let results: Vec<Result<(TaskType, EpisodeRecord), DatasetError>> = if threads == 1 {
        prepared.iter().map(run_one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| RunError::Config(e.to_string()))?;
        pool.install(|| prepared.par_iter().map(run_one).collect())
    };
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        let (task_type, record) = r?;
        rows.push(EpisodeRow { task_type, record });
    }
    rows.sort_by(|a, b| a.record.task_id.cmp(&b.record.task_id));
    let fp = fingerprint(config, &resources.digests);
    BenchmarkReport::assemble(config, fp, rows)
}

//! JSON file formats: datasets, example pools, replanning examples, mock scripts and
//! allow-lists.

use std::fs;
use std::path::{Path, PathBuf};

use lota_core::examples::ExamplePool;
use lota_core::planner::RawExample;
use lota_core::scorer::MockScript;
use lota_core::skills::parse_allow_list;
use lota_core::task::{lint_dataset, LintError, TaskSpec};
use lota_core::{Profile, ProfileKind};
use serde::de::DeserializeOwned;

pub const DESK_DATASET: &str = include_str!("../data/desk.json");
pub const ALFRED_POOL: &str = include_str!("../data/pool_alfred.json");
pub const WAH_POOL: &str = include_str!("../data/pool_wah.json");
pub const REPLAN_EXAMPLES: &str = include_str!("../data/replan_examples.json");

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{origin}: at {location}: {message}")]
    Schema {
        origin: String,
        location: String,
        message: String,
    },
    #[error(transparent)]
    Lint(#[from] LintError),
    #[error("{origin}: {message}")]
    Invalid { origin: String, message: String },
}

pub fn read(path: &Path) -> Result<String, DatasetError> {
    fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Deserializes JSON, reporting the path to the offending field on failure.
pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T, DatasetError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| DatasetError::Schema {
        origin: origin.to_string(),
        location: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

/// Parses and lints a dataset, golden plans included.
pub fn parse_dataset(
    text: &str,
    origin: &str,
    allow_list: Option<&[(usize, String)]>,
) -> Result<Vec<TaskSpec>, DatasetError> {
    let tasks: Vec<TaskSpec> = parse_json(text, origin)?;
    lint_dataset(&tasks, allow_list)?;
    Ok(tasks)
}

pub fn load_dataset(
    path: &Path,
    allow_list: Option<&[(usize, String)]>,
) -> Result<Vec<TaskSpec>, DatasetError> {
    parse_dataset(&read(path)?, &path.display().to_string(), allow_list)
}

pub fn desk_dataset() -> Vec<TaskSpec> {
    parse_dataset(DESK_DATASET, "desk.json", None).expect("bundled dataset is valid")
}

pub fn parse_pool(
    text: &str,
    origin: &str,
    profile: ProfileKind,
) -> Result<ExamplePool, DatasetError> {
    let pool = ExamplePool::new(origin, parse_json(text, origin)?);
    pool.validate(&Profile::new(profile))
        .map_err(|e| DatasetError::Invalid {
            origin: origin.into(),
            message: e.to_string(),
        })?;
    Ok(pool)
}

pub fn load_pool(path: &Path, profile: ProfileKind) -> Result<ExamplePool, DatasetError> {
    parse_pool(&read(path)?, &path.display().to_string(), profile)
}

pub fn bundled_pool(profile: ProfileKind) -> ExamplePool {
    let (text, name) = match profile {
        ProfileKind::Alfred => (ALFRED_POOL, "pool_alfred.json"),
        ProfileKind::Wah => (WAH_POOL, "pool_wah.json"),
    };
    parse_pool(text, name, profile).expect("bundled pool is valid")
}

pub fn parse_replan_examples(text: &str, origin: &str) -> Result<Vec<RawExample>, DatasetError> {
    parse_json(text, origin)
}

pub fn bundled_replan_examples() -> Vec<RawExample> {
    parse_replan_examples(REPLAN_EXAMPLES, "replan_examples.json")
        .expect("bundled replanning examples are valid")
}

/// Loads a mock script and checks its steps against both profiles.
pub fn load_script(path: &Path) -> Result<MockScript, DatasetError> {
    let origin = path.display().to_string();
    let script: MockScript = parse_json(&read(path)?, &origin)?;
    script
        .validate(&[Profile::alfred(), Profile::wah()])
        .map_err(|message| DatasetError::Invalid { origin, message })?;
    Ok(script)
}

pub fn load_allow_list(path: &Path) -> Result<Vec<(usize, String)>, DatasetError> {
    Ok(parse_allow_list(&read(path)?))
}

/// A mock script that replays every task's golden plan, keyed by each instruction.
pub fn golden_script(tasks: &[TaskSpec]) -> Result<MockScript, DatasetError> {
    let mut script = MockScript::default();
    for task in tasks {
        let Some(golden) = task.golden_skills()? else {
            continue;
        };
        let profile = task.profile();
        let mut plan: Vec<String> = golden.iter().map(|s| profile.render(s)).collect();
        plan.push("done".into());
        for instr in &task.instructions {
            if let Some(prev) = script.plans.insert(instr.clone(), plan.clone()) {
                if prev != plan {
                    return Err(DatasetError::Invalid {
                        origin: task.task_id.clone(),
                        message: format!(
                            "instruction {instr:?} is shared with a task that has a different plan"
                        ),
                    });
                }
            }
        }
    }
    Ok(script)
}

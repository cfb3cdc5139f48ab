//! Planning core for benchmarking language-model task planners on household tasks.
//!
//! Everything in this crate is deterministic and allocation-only (`no_std` + `alloc`):
//!
//! - [`worldsim`]: a symbolic household simulator that executes one skill at a time.
//! - [`skills`]: environment profiles, the skill grammar, and skill-set enumeration.
//! - [`goals`]: counted goal predicates and their evaluator.
//! - [`scorer`]: the token-scoring abstraction plus a scripted mock and a bag-of-words embedder.
//! - [`planner`]: prompt construction, constrained/full/generative decoding, and the episode loop.
//! - [`examples`]: in-context example pools and selection strategies.
//! - [`task`] and [`metrics`]: task specs, dataset lint, metrics, and fine-tune records.
//!
//! File formats, the HTTP scorer client, parallel execution and the CLI live in the
//! `lota-bench` companion crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod examples;
pub mod goals;
pub mod hash;
pub mod metrics;
pub mod planner;
pub mod scorer;
pub mod skills;
pub mod task;
pub mod worldsim;

pub use goals::{evaluate_goal, GoalReport, PredicateKind, SubgoalPredicate};
pub use planner::{EpisodeConfig, EpisodeRecord, Mode, Termination};
pub use scorer::{CallStats, Scorer, ScorerError, ScorerInfo, TokenId, TokenSequence};
pub use skills::{Action, Profile, ProfileKind, Skill, SkillSet};
pub use task::{TaskSpec, TaskType};
pub use worldsim::{SceneSpec, StepResult, WorldState};

//! Prompt construction, skill decoding and the plan-execute episode loop.
//!
//! Three decoding modes share one prompt format:
//!
//! - [`Mode::Greedy`] walks a token trie of the skill set, taking the most likely
//!   allowed token at every node.
//! - [`Mode::Full`] scores every skill by its summed token log-probability and takes the
//!   argmax.
//! - [`Mode::Generative`] asks for the whole plan at once and parses the numbered reply.

mod decode;
mod episode;
mod prompt;
mod trie;

use alloc::string::String;

pub use decode::{
    forced_walk, next_skill_full, next_skill_greedy, score_path, score_skill, terminator, Choice,
    Decoder, Prepared, TailClass,
};
pub use episode::{
    generative_plan, plan_episode, render_history, EpisodeConfig, EpisodeInput, EpisodeRecord,
    Mode, StepTrace, Termination, DEFAULT_HEADROOM, DEFAULT_MAX_STEPS,
};
pub use prompt::{
    build_generative_prompt, build_prompt, split_numbered, HistoryStep, PromptExample, PromptSpec,
    RawExample, DEFAULT_PREFIX, REPLAN_PREFIX, SKILL_LIST_LEAD,
};
pub use trie::{PrefixClash, SkillTrie};

use crate::scorer::ScorerError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error("prompt is {tokens} tokens, {overflow} over the limit of {limit}")]
    PromptTooLong {
        tokens: usize,
        limit: usize,
        overflow: usize,
    },
    #[error("skill paths are not prefix-free: {first:?} and {second:?}")]
    NotPrefixFree { first: String, second: String },
    #[error("empty skill set")]
    EmptySkillSet,
}

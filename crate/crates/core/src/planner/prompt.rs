use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::skills::{render_plan_line, Profile, Skill, SkillSet, TERMINAL_SURFACE};
use crate::worldsim::FeedbackMessage;

/// Role description placed before the examples.
pub const DEFAULT_PREFIX: &str = "Robot: Hi there, I'm a robot operating in a home.\n\
Robot: You can ask me to do various tasks and I'll tell you the sequence of actions I would do to accomplish your task.\n";

/// Announces the replanning examples.
pub const REPLAN_PREFIX: &str = "Robot: I can replan the action to perform successfully when the action fails with the \
message this action failed. If I generate the wrong plan, I'll make sure the command succeeds by replanning.\n";

/// Generative mode: the admissible skills, listed before the examples.
pub const SKILL_LIST_LEAD: &str = "Robot: Each step of my plan is exactly one of these actions: ";

/// An in-context (instruction, plan) pair. The plan may omit the trailing `done`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptExample {
    pub instruction: String,
    pub plan: Vec<String>,
}

/// A replanning example, kept as a literal Robot line so that feedback annotations
/// appear exactly as written.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawExample {
    pub instruction: String,
    pub robot: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryStep {
    pub skill: Skill,
    /// Present only when the step failed and feedback is shown to the planner.
    pub feedback: Option<FeedbackMessage>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptSpec {
    pub prefix: String,
    pub examples: Vec<PromptExample>,
    pub replanning_examples: Option<Vec<RawExample>>,
    pub query_instruction: String,
    pub history: Vec<HistoryStep>,
}

impl PromptSpec {
    pub fn new(query: &str) -> Self {
        PromptSpec {
            prefix: DEFAULT_PREFIX.into(),
            examples: Vec::new(),
            replanning_examples: None,
            query_instruction: query.into(),
            history: Vec::new(),
        }
    }
}

fn push_examples(out: &mut String, spec: &PromptSpec) {
    for ex in &spec.examples {
        let mut plan: Vec<&str> = ex.plan.iter().map(String::as_str).collect();
        if plan.last() != Some(&TERMINAL_SURFACE) {
            plan.push(TERMINAL_SURFACE);
        }
        out.push_str(&format!(
            "Human: {}\nRobot: {}\n",
            ex.instruction,
            render_plan_line(&plan)
        ));
    }
    if let Some(raw) = &spec.replanning_examples {
        out.push_str(REPLAN_PREFIX);
        for ex in raw {
            out.push_str(&format!("Human: {}\nRobot: {}\n", ex.instruction, ex.robot));
        }
    }
}

/// Renders the step-decoding prompt. The Robot line of the query ends with the next
/// step number, e.g. `"Robot: 1. find an apple, 2."`.
pub fn build_prompt(spec: &PromptSpec, profile: &Profile) -> String {
    let mut out = spec.prefix.clone();
    push_examples(&mut out, spec);
    out.push_str(&format!("Human: {}\nRobot:", spec.query_instruction));
    for (i, h) in spec.history.iter().enumerate() {
        let fb = h
            .feedback
            .as_ref()
            .map(FeedbackMessage::prompt_suffix)
            .unwrap_or_default();
        out.push_str(&format!(" {}. {}{},", i + 1, profile.render(&h.skill), fb));
    }
    out.push_str(&format!(" {}.", spec.history.len() + 1));
    out
}

/// Renders the whole-plan prompt used by generative mode: the admissible skill list,
/// the examples, and the query with an open Robot line.
pub fn build_generative_prompt(spec: &PromptSpec, skills: &SkillSet) -> String {
    let mut out = spec.prefix.clone();
    out.push_str(SKILL_LIST_LEAD);
    out.push_str(&skills.surfaces().join(", "));
    out.push_str(".\n");
    push_examples(&mut out, spec);
    out.push_str(&format!("Human: {}\nRobot:", spec.query_instruction));
    out
}

/// Splits a numbered reply (`"1. a, 2. b, 3. done."`) into its step texts.
pub fn split_numbered(reply: &str) -> Vec<&str> {
    let bytes = reply.as_bytes();
    let mut marks: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let at_boundary = i == 0 || bytes[i - 1].is_ascii_whitespace();
        if at_boundary && bytes[i].is_ascii_digit() {
            let mut j = i;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            if j < bytes.len()
                && bytes[j] == b'.'
                && (j + 1 == bytes.len() || bytes[j + 1].is_ascii_whitespace())
            {
                marks.push((i, j + 1));
                i = j + 1;
                continue;
            }
        }
        i += 1;
    }
    marks
        .iter()
        .enumerate()
        .map(|(k, &(_, body))| {
            let end = marks.get(k + 1).map_or(reply.len(), |m| m.0);
            reply[body..end].trim().trim_end_matches([',', '.']).trim()
        })
        .filter(|s| !s.is_empty())
        .collect()
}

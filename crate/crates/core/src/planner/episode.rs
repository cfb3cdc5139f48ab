use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::decode::{next_skill_full, next_skill_greedy, Decoder};
use super::prompt::{
    build_generative_prompt, build_prompt, split_numbered, HistoryStep, PromptExample, PromptSpec,
    RawExample,
};
use super::PlanError;
use crate::goals::{evaluate_goal, GoalReport, SubgoalPredicate};
use crate::hash::fnv64;
use crate::scorer::{CallStats, Metered, Scorer, ScorerError};
use crate::skills::{Skill, SkillSet};
use crate::worldsim::{FeedbackMessage, StepResult, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Greedy,
    Full,
    Generative,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Greedy => "greedy",
            Mode::Full => "full",
            Mode::Generative => "generative",
        }
    }
}

impl core::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "greedy" => Ok(Mode::Greedy),
            "full" => Ok(Mode::Full),
            "generative" => Ok(Mode::Generative),
            other => Err(format!(
                "unknown mode {other:?} (expected greedy, full or generative)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    DoneToken,
    MaxSteps,
    ParseFailure,
    /// A generated plan ran out of steps without `done`.
    EndOfPlan,
    /// The prompt no longer fits the scorer's context window.
    ContextOverflow,
    /// The scorer failed; excluded from metrics.
    InfraFailure,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::DoneToken => "done_token",
            Termination::MaxSteps => "max_steps",
            Termination::ParseFailure => "parse_failure",
            Termination::EndOfPlan => "end_of_plan",
            Termination::ContextOverflow => "context_overflow",
            Termination::InfraFailure => "infra_failure",
        }
    }
}

pub const DEFAULT_MAX_STEPS: usize = 30;
pub const DEFAULT_HEADROOM: usize = 64;
pub const GENERATE_MAX_TOKENS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub mode: Mode,
    pub max_steps: usize,
    pub replanning: bool,
    /// Tokens kept free after the prompt.
    pub headroom: usize,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            mode: Mode::Greedy,
            max_steps: DEFAULT_MAX_STEPS,
            replanning: false,
            headroom: DEFAULT_HEADROOM,
        }
    }
}

/// Everything about one episode besides the world, the skills and the scorer.
#[derive(Debug, Clone, Copy)]
pub struct EpisodeInput<'a> {
    pub task_id: &'a str,
    pub instruction: &'a str,
    pub goal: &'a [SubgoalPredicate],
    pub prefix: &'a str,
    pub examples: &'a [PromptExample],
    /// Shown only when replanning is enabled.
    pub replanning_examples: Option<&'a [RawExample]>,
}

/// One line of the episode trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    pub step: usize,
    pub prompt_hash: u64,
    pub skill: String,
    pub logprob: Option<f64>,
    pub success: bool,
    pub feedback: Option<String>,
    pub state_hash: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub task_id: String,
    pub instruction: String,
    pub chosen_skills: Vec<String>,
    pub step_results: Vec<StepResult>,
    pub goal_report: GoalReport,
    pub call_stats: CallStats,
    pub termination: Termination,
    pub trace: Vec<StepTrace>,
    /// Generated steps that did not parse as skills.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped_steps: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl EpisodeRecord {
    pub fn is_infra_failure(&self) -> bool {
        self.termination == Termination::InfraFailure
    }

    pub fn steps(&self) -> usize {
        self.step_results.len()
    }
}

struct Run<'a> {
    input: &'a EpisodeInput<'a>,
    world: WorldState,
    profile: crate::skills::Profile,
    chosen: Vec<String>,
    results: Vec<StepResult>,
    trace: Vec<StepTrace>,
    history: Vec<HistoryStep>,
}

impl Run<'_> {
    fn record(
        &mut self,
        surface: &str,
        skill: Skill,
        result: StepResult,
        prompt_hash: u64,
        logprob: Option<f64>,
    ) {
        self.trace.push(StepTrace {
            step: self.results.len() + 1,
            prompt_hash,
            skill: surface.to_string(),
            logprob,
            success: result.success,
            feedback: result.feedback.as_ref().map(|f| f.rendered.clone()),
            state_hash: self.world.state_hash(),
        });
        self.chosen.push(surface.to_string());
        self.history.push(HistoryStep {
            skill,
            feedback: result.feedback.clone(),
        });
        self.results.push(result);
    }

    fn execute(&mut self, surface: &str, skill: Skill, prompt_hash: u64, logprob: Option<f64>) {
        let result = if skill.is_terminal() {
            StepResult::ok(skill.clone(), Vec::new())
        } else {
            self.world.apply_skill(&skill)
        };
        self.record(surface, skill, result, prompt_hash, logprob);
    }

    fn spec(&self, replanning: bool) -> PromptSpec {
        PromptSpec {
            prefix: self.input.prefix.to_string(),
            examples: self.input.examples.to_vec(),
            replanning_examples: if replanning {
                self.input.replanning_examples.map(<[RawExample]>::to_vec)
            } else {
                None
            },
            query_instruction: self.input.instruction.to_string(),
            history: self
                .history
                .iter()
                .map(|h| HistoryStep {
                    skill: h.skill.clone(),
                    feedback: if replanning { h.feedback.clone() } else { None },
                })
                .collect(),
        }
    }

    fn finish(
        self,
        stats: CallStats,
        termination: Termination,
        skipped: Vec<String>,
        error: Option<String>,
    ) -> EpisodeRecord {
        EpisodeRecord {
            task_id: self.input.task_id.to_string(),
            instruction: self.input.instruction.to_string(),
            goal_report: evaluate_goal(&self.world, self.input.goal),
            chosen_skills: self.chosen,
            step_results: self.results,
            call_stats: stats,
            termination,
            trace: self.trace,
            skipped_steps: skipped,
            error,
        }
    }
}

fn check_budget<S: Scorer + ?Sized>(
    session: &S,
    prompt_tokens: usize,
    headroom: usize,
) -> Result<(), PlanError> {
    let info = session.info()?;
    let limit = info.max_context.saturating_sub(headroom);
    if prompt_tokens > limit {
        return Err(PlanError::PromptTooLong {
            tokens: prompt_tokens,
            limit,
            overflow: prompt_tokens - limit,
        });
    }
    Ok(())
}

fn terminated_by(err: &PlanError) -> Termination {
    match err {
        PlanError::PromptTooLong { .. } => Termination::ContextOverflow,
        _ => Termination::InfraFailure,
    }
}

/// Runs one closed-loop episode: decode a skill, execute it, extend the history, until
/// `done` or `max_steps`. Generative mode delegates to [`generative_plan`].
pub fn plan_episode<S: Scorer + ?Sized>(
    input: &EpisodeInput<'_>,
    world: WorldState,
    skills: &SkillSet,
    session: &S,
    config: &EpisodeConfig,
) -> EpisodeRecord {
    if config.mode == Mode::Generative {
        return generative_plan(input, world, skills, session, config);
    }
    let metered = Metered::new(session);
    let mut run = Run {
        input,
        world,
        profile: skills.profile().clone(),
        chosen: Vec::new(),
        results: Vec::new(),
        trace: Vec::new(),
        history: Vec::new(),
    };
    let mut decoder = match Decoder::new(skills) {
        Ok(d) => d,
        Err(e) => {
            return run.finish(
                metered.stats(),
                Termination::InfraFailure,
                Vec::new(),
                Some(e.to_string()),
            )
        }
    };
    let mut skill_scorings = 0u64;
    let outcome: Result<Termination, PlanError> = (|| {
        while run.results.len() < config.max_steps {
            let prompt = build_prompt(&run.spec(config.replanning), &run.profile);
            let ids = metered.tokenize(&prompt)?.ids;
            check_budget(&metered, ids.len(), config.headroom)?;
            let prepared = decoder.prepare(&metered, &prompt, &ids)?;
            let choice = match config.mode {
                Mode::Full => next_skill_full(&metered, &prepared)?,
                _ => next_skill_greedy(&metered, &prepared)?,
            };
            skill_scorings += choice.skill_scorings as u64;
            let skill = skills.skills()[choice.index].clone();
            let surface = skills.surface(choice.index).to_string();
            let terminal = skill.is_terminal();
            run.execute(
                &surface,
                skill,
                fnv64(prompt.as_bytes()),
                Some(choice.logprob),
            );
            if terminal {
                return Ok(Termination::DoneToken);
            }
        }
        Ok(Termination::MaxSteps)
    })();
    let mut stats = metered.stats();
    stats.n_skill_scorings += skill_scorings;
    match outcome {
        Ok(t) => run.finish(stats, t, Vec::new(), None),
        Err(e) => run.finish(stats, terminated_by(&e), Vec::new(), Some(e.to_string())),
    }
}

/// Generates a whole plan in one call from a prompt listing the admissible skills, then
/// executes the parsed steps open-loop. Steps that do not parse are skipped.
pub fn generative_plan<S: Scorer + ?Sized>(
    input: &EpisodeInput<'_>,
    world: WorldState,
    skills: &SkillSet,
    session: &S,
    config: &EpisodeConfig,
) -> EpisodeRecord {
    let metered = Metered::new(session);
    let mut run = Run {
        input,
        world,
        profile: skills.profile().clone(),
        chosen: Vec::new(),
        results: Vec::new(),
        trace: Vec::new(),
        history: Vec::new(),
    };
    if !session.supports_generate() {
        let err = PlanError::Scorer(ScorerError::Unsupported("generate"));
        return run.finish(
            metered.stats(),
            Termination::InfraFailure,
            Vec::new(),
            Some(err.to_string()),
        );
    }
    let prompt = build_generative_prompt(&run.spec(false), skills);
    let reply: Result<String, PlanError> = (|| {
        let n = metered.tokenize(&prompt)?.len();
        check_budget(&metered, n, config.headroom)?;
        let budget = metered
            .info()?
            .max_context
            .saturating_sub(n)
            .min(GENERATE_MAX_TOKENS);
        Ok(metered.generate(&prompt, &["\nHuman:".to_string()], budget)?)
    })();
    let reply = match reply {
        Ok(r) => r,
        Err(e) => {
            return run.finish(
                metered.stats(),
                terminated_by(&e),
                Vec::new(),
                Some(e.to_string()),
            )
        }
    };
    let prompt_hash = fnv64(prompt.as_bytes());
    let mut skipped = Vec::new();
    let mut parsed = 0usize;
    let mut termination = Termination::EndOfPlan;
    for step in split_numbered(&reply) {
        let Ok(skill) = run.profile.parse(step) else {
            skipped.push(step.to_string());
            continue;
        };
        parsed += 1;
        if run.results.len() == config.max_steps {
            termination = Termination::MaxSteps;
            break;
        }
        let surface = run.profile.render(&skill);
        let terminal = skill.is_terminal();
        run.execute(&surface, skill, prompt_hash, None);
        if terminal {
            termination = Termination::DoneToken;
            break;
        }
    }
    if parsed == 0 {
        termination = Termination::ParseFailure;
    }
    run.finish(metered.stats(), termination, skipped, None)
}

/// Renders the final Robot line of an episode, `"1. a, 2. b (this action failed: ...), 3. done."`.
pub fn render_history(record: &EpisodeRecord) -> String {
    let mut out = String::new();
    for (i, (s, r)) in record
        .chosen_skills
        .iter()
        .zip(&record.step_results)
        .enumerate()
    {
        let fb = r
            .feedback
            .as_ref()
            .map(FeedbackMessage::prompt_suffix)
            .unwrap_or_default();
        let sep = if i + 1 == record.chosen_skills.len() {
            "."
        } else {
            ","
        };
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&format!("{}. {s}{fb}{sep}", i + 1));
    }
    out
}

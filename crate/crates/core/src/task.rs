//! Task specifications, dataset lint and fine-tune records.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::goals::{evaluate_goal, validate_goal, SubgoalPredicate};
use crate::skills::{
    enumerate_skills, render_plan_line, Profile, ProfileKind, Skill, SkillSet, TERMINAL_SURFACE,
};
use crate::worldsim::{SceneSpec, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TaskType {
    #[serde(rename = "Pick & Place")]
    PickAndPlace,
    #[serde(rename = "Stack & Place")]
    StackAndPlace,
    #[serde(rename = "Clean & Place")]
    CleanAndPlace,
    #[serde(rename = "Heat & Place")]
    HeatAndPlace,
    #[serde(rename = "Cool & Place")]
    CoolAndPlace,
    #[serde(rename = "Examine in Light")]
    ExamineInLight,
    #[serde(rename = "Setup a dinner table")]
    SetupDinnerTable,
    #[serde(rename = "Put groceries")]
    PutGroceries,
    #[serde(rename = "Prepare a meal")]
    PrepareMeal,
    #[serde(rename = "Wash dishes")]
    WashDishes,
    #[serde(rename = "Prepare snacks")]
    PrepareSnacks,
}

impl TaskType {
    pub const ALL: [TaskType; 11] = [
        TaskType::PickAndPlace,
        TaskType::StackAndPlace,
        TaskType::CleanAndPlace,
        TaskType::HeatAndPlace,
        TaskType::CoolAndPlace,
        TaskType::ExamineInLight,
        TaskType::SetupDinnerTable,
        TaskType::PutGroceries,
        TaskType::PrepareMeal,
        TaskType::WashDishes,
        TaskType::PrepareSnacks,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskType::PickAndPlace => "Pick & Place",
            TaskType::StackAndPlace => "Stack & Place",
            TaskType::CleanAndPlace => "Clean & Place",
            TaskType::HeatAndPlace => "Heat & Place",
            TaskType::CoolAndPlace => "Cool & Place",
            TaskType::ExamineInLight => "Examine in Light",
            TaskType::SetupDinnerTable => "Setup a dinner table",
            TaskType::PutGroceries => "Put groceries",
            TaskType::PrepareMeal => "Prepare a meal",
            TaskType::WashDishes => "Wash dishes",
            TaskType::PrepareSnacks => "Prepare snacks",
        }
    }

    pub fn profile(self) -> ProfileKind {
        match self {
            TaskType::PickAndPlace
            | TaskType::StackAndPlace
            | TaskType::CleanAndPlace
            | TaskType::HeatAndPlace
            | TaskType::CoolAndPlace
            | TaskType::ExamineInLight => ProfileKind::Alfred,
            _ => ProfileKind::Wah,
        }
    }

    pub fn of_profile(kind: ProfileKind) -> impl Iterator<Item = TaskType> {
        Self::ALL.into_iter().filter(move |t| t.profile() == kind)
    }
}

impl core::fmt::Display for TaskType {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for TaskType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown task type {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub task_id: String,
    pub task_type: TaskType,
    pub instructions: Vec<String>,
    pub scene: SceneSpec,
    pub goal: Vec<SubgoalPredicate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub golden_plan: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("task {task_id}: {field}: {reason}")]
pub struct LintError {
    pub task_id: String,
    pub field: String,
    pub reason: String,
}

impl TaskSpec {
    pub fn profile(&self) -> Profile {
        Profile::new(self.task_type.profile())
    }

    pub fn instruction(&self, index: usize) -> Option<&str> {
        self.instructions.get(index).map(String::as_str)
    }

    fn err(&self, field: impl Into<String>, reason: impl Into<String>) -> LintError {
        LintError {
            task_id: self.task_id.clone(),
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn world(&self) -> Result<WorldState, LintError> {
        WorldState::load(&self.scene, self.task_type.profile())
            .map_err(|e| self.err("scene", e.to_string()))
    }

    /// Enumerated skills; an allow-list only restricts ALFRED-profile tasks.
    pub fn skill_set(&self, allow_list: Option<&[(usize, String)]>) -> Result<SkillSet, LintError> {
        let allow_list = allow_list.filter(|_| self.task_type.profile() == ProfileKind::Alfred);
        enumerate_skills(&self.profile(), &self.scene, allow_list)
            .map_err(|e| self.err("scene", e.to_string()))
    }

    /// Golden plan as skills, without a trailing `done`.
    pub fn golden_skills(&self) -> Result<Option<Vec<Skill>>, LintError> {
        let Some(plan) = &self.golden_plan else {
            return Ok(None);
        };
        let profile = self.profile();
        let mut out = Vec::with_capacity(plan.len());
        for (i, step) in plan.iter().enumerate() {
            let skill = profile
                .parse(step)
                .map_err(|e| self.err(format!("golden_plan[{i}]"), e.to_string()))?;
            if skill.is_terminal() {
                if i + 1 != plan.len() {
                    return Err(self.err(
                        format!("golden_plan[{i}]"),
                        "done before the end of the plan",
                    ));
                }
                break;
            }
            out.push(skill);
        }
        Ok(Some(out))
    }

    /// Schema-level checks plus, when present, a replay of the golden plan: every step
    /// must be in the enumerated skill set, succeed, and leave the goal satisfied.
    pub fn lint(&self, allow_list: Option<&[(usize, String)]>) -> Result<(), LintError> {
        if self.task_id.is_empty() {
            return Err(self.err("task_id", "empty"));
        }
        if self.instructions.is_empty() || self.instructions.iter().any(|s| s.trim().is_empty()) {
            return Err(self.err(
                "instructions",
                "must be a non-empty list of non-empty strings",
            ));
        }
        validate_goal(&self.goal).map_err(|e| self.err("goal", e.to_string()))?;
        let mut world = self.world()?;
        let skills = self.skill_set(allow_list)?;
        let Some(golden) = self.golden_skills()? else {
            return Ok(());
        };
        for (i, skill) in golden.iter().enumerate() {
            let field = format!("golden_plan[{i}]");
            if !skills.contains(skill) {
                return Err(self.err(
                    field,
                    format!("{:?} is not in the skill set", self.profile().render(skill)),
                ));
            }
            let r = world.apply_skill(skill);
            if !r.success {
                let why = r.feedback.map(|f| f.rendered).unwrap_or_default();
                return Err(self.err(field, format!("step fails: {why}")));
            }
        }
        let report = evaluate_goal(&world, &self.goal);
        if !report.success {
            return Err(self.err(
                "golden_plan",
                format!(
                    "goal not reached ({}/{} subgoals)",
                    report.satisfied, report.total
                ),
            ));
        }
        Ok(())
    }
}

/// Checks ids are unique and lints every task.
pub fn lint_dataset(
    tasks: &[TaskSpec],
    allow_list: Option<&[(usize, String)]>,
) -> Result<(), LintError> {
    let mut ids: Vec<&str> = tasks.iter().map(|t| t.task_id.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(LintError {
            task_id: w[0].into(),
            field: "task_id".into(),
            reason: "duplicate".into(),
        });
    }
    tasks.iter().try_for_each(|t| t.lint(allow_list))
}

/// Role prefix used for fine-tune instructions.
pub const FINETUNE_PREFIX: &str = "\nRobot: Hi there, I'm a robot operating in a home. \n\
Robot: You can ask me to do various tasks and I'll tell you the sequence of actions I would do to accomplish your task. \n";

/// One instruction-following training record. Field order is part of the format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinetuneRecord {
    pub instruction: String,
    pub input: String,
    pub output: String,
}

/// One record per (task, instruction); the output is the golden plan ending in `done`.
pub fn finetune_records(
    tasks: &[TaskSpec],
    prefix: &str,
) -> Result<Vec<FinetuneRecord>, LintError> {
    let mut out = Vec::new();
    for task in tasks {
        let golden = task
            .golden_skills()?
            .ok_or_else(|| task.err("golden_plan", "missing"))?;
        if task.instructions.is_empty() {
            return Err(task.err("instructions", "empty"));
        }
        let profile = task.profile();
        let mut steps: Vec<String> = golden.iter().map(|s| profile.render(s)).collect();
        steps.push(TERMINAL_SURFACE.to_string());
        let output = render_plan_line(&steps);
        for instr in &task.instructions {
            out.push(FinetuneRecord {
                instruction: format!("{prefix}Human: {instr}\nRobot:"),
                input: String::new(),
                output: output.clone(),
            });
        }
    }
    Ok(out)
}

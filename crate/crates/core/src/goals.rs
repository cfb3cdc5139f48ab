//! Goal conditions: counted predicates checked against a final world state.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::worldsim::{ObjState, ObjectInstance, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PredicateKind {
    #[serde(rename = "ON")]
    On,
    #[serde(rename = "INSIDE")]
    Inside,
    #[serde(rename = "SWITCHON")]
    SwitchOn,
    #[serde(rename = "STATE")]
    State,
    #[serde(rename = "HOLDING_WITH_TOGGLED")]
    HoldingWithToggled,
}

fn one() -> u32 {
    1
}

/// `{"kind":"ON","object":"plate","target":"kitchen table","count":1}`
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubgoalPredicate {
    pub kind: PredicateKind,
    pub object: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<ObjState>,
    #[serde(default = "one")]
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GoalError {
    #[error("subgoal {index}: count must be at least 1")]
    ZeroCount { index: usize },
    #[error("subgoal {index}: {kind:?} requires a target class")]
    MissingTarget { index: usize, kind: PredicateKind },
    #[error("subgoal {index}: STATE requires one of heated, cooled, cleaned, sliced")]
    BadState { index: usize },
    #[error("subgoal {index}: unexpected field for {kind:?}")]
    UnexpectedField { index: usize, kind: PredicateKind },
}

impl SubgoalPredicate {
    pub fn on(object: &str, target: &str) -> Self {
        Self::with_target(PredicateKind::On, object, target)
    }

    pub fn inside(object: &str, target: &str) -> Self {
        Self::with_target(PredicateKind::Inside, object, target)
    }

    pub fn switch_on(object: &str) -> Self {
        SubgoalPredicate {
            kind: PredicateKind::SwitchOn,
            object: object.into(),
            target: None,
            state: None,
            count: 1,
        }
    }

    pub fn state(object: &str, state: ObjState, target: Option<&str>) -> Self {
        SubgoalPredicate {
            kind: PredicateKind::State,
            object: object.into(),
            target: target.map(Into::into),
            state: Some(state),
            count: 1,
        }
    }

    pub fn holding_with_toggled(object: &str, lamp: &str) -> Self {
        Self::with_target(PredicateKind::HoldingWithToggled, object, lamp)
    }

    fn with_target(kind: PredicateKind, object: &str, target: &str) -> Self {
        SubgoalPredicate {
            kind,
            object: object.into(),
            target: Some(target.into()),
            state: None,
            count: 1,
        }
    }

    pub fn with_count(mut self, count: u32) -> Self {
        self.count = count;
        self
    }

    fn validate(&self, index: usize) -> Result<(), GoalError> {
        if self.count == 0 {
            return Err(GoalError::ZeroCount { index });
        }
        let needs_target = matches!(
            self.kind,
            PredicateKind::On | PredicateKind::Inside | PredicateKind::HoldingWithToggled
        );
        if needs_target && self.target.is_none() {
            return Err(GoalError::MissingTarget {
                index,
                kind: self.kind,
            });
        }
        match self.kind {
            PredicateKind::State => match self.state {
                Some(
                    ObjState::Heated | ObjState::Cooled | ObjState::Cleaned | ObjState::Sliced,
                ) => Ok(()),
                _ => Err(GoalError::BadState { index }),
            },
            PredicateKind::SwitchOn if self.target.is_some() || self.state.is_some() => {
                Err(GoalError::UnexpectedField {
                    index,
                    kind: self.kind,
                })
            }
            _ if self.kind != PredicateKind::State && self.state.is_some() => {
                Err(GoalError::UnexpectedField {
                    index,
                    kind: self.kind,
                })
            }
            _ => Ok(()),
        }
    }

    /// Number of instances currently satisfying the predicate.
    pub fn matching(&self, world: &WorldState) -> u32 {
        let target = self.target.as_deref();
        fn of_class<'w>(
            world: &'w WorldState,
            class: &'w str,
        ) -> impl Iterator<Item = &'w ObjectInstance> + 'w {
            world
                .objects
                .values()
                .filter(move |o| o.class_name == class)
        }
        let placed_in_target = |id: &str, inside_only: Option<bool>| {
            let parent = match inside_only {
                Some(false) => world.placement.on.get(id),
                Some(true) => world.placement.inside.get(id),
                None => world
                    .placement
                    .on
                    .get(id)
                    .or_else(|| world.placement.inside.get(id)),
            };
            parent.is_some_and(|p| Some(world.objects[p].class_name.as_str()) == target)
        };
        let n = match self.kind {
            PredicateKind::On => of_class(world, &self.object)
                .filter(|o| placed_in_target(&o.id, Some(false)))
                .count(),
            PredicateKind::Inside => of_class(world, &self.object)
                .filter(|o| placed_in_target(&o.id, Some(true)))
                .count(),
            PredicateKind::SwitchOn => of_class(world, &self.object)
                .filter(|o| o.is(ObjState::ToggledOn))
                .count(),
            PredicateKind::State => {
                let Some(state) = self.state else { return 0 };
                of_class(world, &self.object)
                    .filter(|o| o.is(state) && (target.is_none() || placed_in_target(&o.id, None)))
                    .count()
            }
            PredicateKind::HoldingWithToggled => {
                let holding = world
                    .agent
                    .hands
                    .iter()
                    .any(|h| world.objects[h].class_name == self.object);
                let lit =
                    target.is_some_and(|t| of_class(world, t).any(|o| o.is(ObjState::ToggledOn)));
                usize::from(holding && lit)
            }
        };
        u32::try_from(n).unwrap_or(u32::MAX)
    }

    pub fn satisfied(&self, world: &WorldState) -> bool {
        let need = if self.kind == PredicateKind::HoldingWithToggled {
            1
        } else {
            self.count
        };
        self.matching(world) >= need
    }
}

pub fn validate_goal(goal: &[SubgoalPredicate]) -> Result<(), GoalError> {
    goal.iter().enumerate().try_for_each(|(i, g)| g.validate(i))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalReport {
    pub satisfied: u32,
    pub total: u32,
    pub success: bool,
    pub per_subgoal: Vec<bool>,
}

impl GoalReport {
    /// Satisfied fraction; an empty goal counts as fully satisfied.
    pub fn subgoal_rate(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            f64::from(self.satisfied) / f64::from(self.total)
        }
    }
}

pub fn evaluate_goal(world: &WorldState, goal: &[SubgoalPredicate]) -> GoalReport {
    let per_subgoal: Vec<bool> = goal.iter().map(|g| g.satisfied(world)).collect();
    let satisfied = per_subgoal.iter().filter(|b| **b).count() as u32;
    let total = goal.len() as u32;
    GoalReport {
        satisfied,
        total,
        success: satisfied == total,
        per_subgoal,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skills::{Action, ProfileKind, Skill};
    use crate::worldsim::{AgentSpec, ObjectSpec, Property, SceneSpec, ZoneSpec};
    use alloc::vec;

    fn scene() -> SceneSpec {
        use Property::*;
        let o = |id: &str, class: &str, props: &[Property], zone: &str| ObjectSpec {
            id: id.into(),
            class_name: class.into(),
            properties: props.to_vec(),
            states: vec![],
            on: None,
            inside: None,
            zone: Some(zone.into()),
            basin: None,
        };
        SceneSpec {
            zones: vec![
                ZoneSpec {
                    id: "kitchen".into(),
                    x: 0,
                    y: 0,
                },
                ZoneSpec {
                    id: "dining".into(),
                    x: 4,
                    y: 0,
                },
            ],
            objects: vec![
                o("plate_1", "plate", &[Pickupable], "kitchen"),
                o("kitchen_table_1", "kitchen table", &[Receptacle], "dining"),
                o("potato_1", "potato", &[Pickupable], "kitchen"),
                o("sink_1", "sink", &[Receptacle], "kitchen"),
            ],
            agent: AgentSpec {
                zone: "kitchen".into(),
                capacity: None,
            },
        }
    }

    #[test]
    fn golden_put_plate_on_table() {
        let mut w = WorldState::load(&scene(), ProfileKind::Wah).unwrap();
        let goal = vec![SubgoalPredicate::on("plate", "kitchen table")];
        assert!(!evaluate_goal(&w, &goal).success);
        for s in [
            Skill::unary(Action::WalkTo, "plate"),
            Skill::unary(Action::Grab, "plate"),
            Skill::unary(Action::WalkTo, "kitchen table"),
            Skill::binary(Action::PutOn, "plate", "kitchen table"),
        ] {
            assert!(w.apply_skill(&s).success, "{s:?}");
        }
        let report = evaluate_goal(&w, &goal);
        assert_eq!(
            report,
            GoalReport {
                satisfied: 1,
                total: 1,
                success: true,
                per_subgoal: vec![true]
            }
        );
    }

    #[test]
    fn empty_goal_is_vacuous_success() {
        let w = WorldState::load(&scene(), ProfileKind::Wah).unwrap();
        let r = evaluate_goal(&w, &[]);
        assert_eq!((r.satisfied, r.total, r.success), (0, 0, true));
        assert_eq!(r.subgoal_rate(), 1.0);
    }

    #[test]
    fn heat_and_place_on_fresh_scene() {
        let w = WorldState::load(&scene(), ProfileKind::Alfred).unwrap();
        let goal = vec![
            SubgoalPredicate::state("potato", ObjState::Heated, None),
            SubgoalPredicate::on("potato", "sink"),
        ];
        let r = evaluate_goal(&w, &goal);
        assert_eq!(r.satisfied, 0);
        assert!(!r.success);
    }

    #[test]
    fn counts_above_one() {
        let w = WorldState::load(&scene(), ProfileKind::Wah).unwrap();
        let g = SubgoalPredicate::on("plate", "kitchen table").with_count(2);
        assert_eq!(g.matching(&w), 0);
        assert!(!g.satisfied(&w));
    }

    #[test]
    fn validation() {
        assert!(validate_goal(&[SubgoalPredicate::on("a", "b").with_count(0)]).is_err());
        let mut g = SubgoalPredicate::on("a", "b");
        g.target = None;
        assert_eq!(
            validate_goal(&[g]),
            Err(GoalError::MissingTarget {
                index: 0,
                kind: PredicateKind::On
            })
        );
        assert!(validate_goal(&[SubgoalPredicate::state("a", ObjState::Open, None)]).is_err());
        assert!(validate_goal(&[SubgoalPredicate::switch_on("dishwasher")]).is_ok());
    }
}

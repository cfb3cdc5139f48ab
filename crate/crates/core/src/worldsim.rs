//! Deterministic symbolic household simulator.
//!
//! Space is a set of discrete zones with integer coordinates; an object is reachable when
//! it is in the agent's zone. Skills execute one at a time. A failed skill leaves the
//! world untouched apart from the step counter and returns a catalog feedback message.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::hash::hash_value;
use crate::skills::{Action, ProfileKind, Skill};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Pickupable,
    Openable,
    Toggleable,
    Sliceable,
    Receptacle,
    Container,
    HeatSource,
    ColdSource,
    WaterSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjState {
    Open,
    ToggledOn,
    Sliced,
    Heated,
    Cooled,
    Cleaned,
}

impl ObjState {
    pub fn name(self) -> &'static str {
        match self {
            ObjState::Open => "open",
            ObjState::ToggledOn => "toggled_on",
            ObjState::Sliced => "sliced",
            ObjState::Heated => "heated",
            ObjState::Cooled => "cooled",
            ObjState::Cleaned => "cleaned",
        }
    }
}

// ---- scene specification (dataset schema) ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub zones: Vec<ZoneSpec>,
    pub objects: Vec<ObjectSpec>,
    pub agent: AgentSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoneSpec {
    pub id: String,
    #[serde(default)]
    pub x: i64,
    #[serde(default)]
    pub y: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub id: String,
    #[serde(rename = "class")]
    pub class_name: String,
    #[serde(default)]
    pub properties: Vec<Property>,
    #[serde(default)]
    pub states: Vec<ObjState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub on: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inside: Option<String>,
    /// Required for objects that are neither on nor inside another object.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zone: Option<String>,
    /// Basin filled by a water source (e.g. the sink under a faucet).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basin: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub zone: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SceneError {
    #[error("invalid field `{field}`: {reason}")]
    Field { field: String, reason: String },
    #[error("containment cycle through `{0}`")]
    Cycle(String),
}

fn field_err(field: impl Into<String>, reason: impl Into<String>) -> SceneError {
    SceneError::Field {
        field: field.into(),
        reason: reason.into(),
    }
}

// ---- world state ----

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub id: String,
    pub class_name: String,
    pub properties: BTreeSet<Property>,
    pub states: BTreeSet<ObjState>,
    /// Zone of the object when it is a placement root; derived from its parent otherwise.
    pub position: String,
    pub basin: Option<String>,
}

impl ObjectInstance {
    pub fn has(&self, p: Property) -> bool {
        self.properties.contains(&p)
    }

    pub fn is(&self, s: ObjState) -> bool {
        self.states.contains(&s)
    }

    fn is_receptacle(&self) -> bool {
        self.has(Property::Receptacle) || self.has(Property::Container)
    }

    fn is_closed(&self) -> bool {
        self.has(Property::Openable) && !self.is(ObjState::Open)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlacementGraph {
    pub on: BTreeMap<String, String>,
    pub inside: BTreeMap<String, String>,
}

impl PlacementGraph {
    pub fn parent(&self, id: &str) -> Option<(&str, Relation)> {
        if let Some(p) = self.on.get(id) {
            Some((p.as_str(), Relation::On))
        } else {
            self.inside.get(id).map(|p| (p.as_str(), Relation::Inside))
        }
    }

    fn remove(&mut self, id: &str) {
        self.on.remove(id);
        self.inside.remove(id);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    On,
    Inside,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgentState {
    pub location: String,
    pub hands: Vec<String>,
    pub capacity: usize,
    pub last_receptacle: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WorldState {
    pub profile: ProfileKind,
    pub zones: BTreeMap<String, (i64, i64)>,
    pub objects: BTreeMap<String, ObjectInstance>,
    pub placement: PlacementGraph,
    pub agent: AgentState,
    pub step_count: u64,
}

// ---- feedback ----

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackTemplate {
    /// `{Object} is not visible because it is in {Container}`
    NotVisibleInContainer,
    /// `Robot is not holding any object`
    NotHoldingAnyObject,
    /// `{action} failed`, e.g. `put down failed`
    ActionFailed,
}

/// Opens the feedback annotation appended to a failed step in prompt history.
pub const FEEDBACK_MARKER: &str = " (this action failed: ";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeedbackMessage {
    pub template_id: FeedbackTemplate,
    pub rendered: String,
}

impl FeedbackMessage {
    pub fn not_visible(object_class: &str, container_class: &str) -> Self {
        FeedbackMessage {
            template_id: FeedbackTemplate::NotVisibleInContainer,
            rendered: format!(
                "{} is not visible because it is in {}",
                type_name(object_class),
                type_name(container_class)
            ),
        }
    }

    pub fn not_holding() -> Self {
        FeedbackMessage {
            template_id: FeedbackTemplate::NotHoldingAnyObject,
            rendered: "Robot is not holding any object".to_string(),
        }
    }

    pub fn failed(action: Action) -> Self {
        FeedbackMessage {
            template_id: FeedbackTemplate::ActionFailed,
            rendered: format!("{} failed", action.label()),
        }
    }

    /// Text appended after the failed step in a prompt.
    pub fn prompt_suffix(&self) -> String {
        format!("{FEEDBACK_MARKER}{})", self.rendered)
    }
}

/// Simulator type name of a class: "counter top" -> "CounterTop".
pub fn type_name(class: &str) -> String {
    let mut out = String::with_capacity(class.len());
    for word in class.split(' ') {
        let mut chars = word.chars();
        if let Some(first) = chars.next() {
            out.extend(first.to_uppercase());
            out.push_str(chars.as_str());
        }
    }
    out
}

/// One observable consequence of a successful skill.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "effect", rename_all = "snake_case")]
pub enum Effect {
    Moved {
        zone: String,
    },
    Picked {
        object: String,
    },
    Placed {
        object: String,
        target: String,
        relation: Relation,
    },
    StateSet {
        object: String,
        state: ObjState,
        on: bool,
    },
    /// Derived state gained through a device (`source`): microwave, fridge or faucet.
    Gained {
        object: String,
        state: ObjState,
        source: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepResult {
    pub success: bool,
    pub feedback: Option<FeedbackMessage>,
    pub executed_skill: Skill,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub effects: Vec<Effect>,
}

impl StepResult {
    pub fn ok(skill: Skill, effects: Vec<Effect>) -> Self {
        StepResult {
            success: true,
            feedback: None,
            executed_skill: skill,
            effects,
        }
    }

    pub fn failed(skill: Skill, feedback: FeedbackMessage) -> Self {
        StepResult {
            success: false,
            feedback: Some(feedback),
            executed_skill: skill,
            effects: Vec::new(),
        }
    }
}

type Outcome = Result<Vec<Effect>, FeedbackMessage>;

impl WorldState {
    /// Builds the initial world from a scene. The agent starts empty-handed with no
    /// visited receptacle.
    pub fn load(scene: &SceneSpec, profile: ProfileKind) -> Result<Self, SceneError> {
        let mut zones = BTreeMap::new();
        for (i, z) in scene.zones.iter().enumerate() {
            if z.id.is_empty() {
                return Err(field_err(format!("zones[{i}].id"), "empty zone id"));
            }
            if zones.insert(z.id.clone(), (z.x, z.y)).is_some() {
                return Err(field_err(
                    format!("zones[{i}].id"),
                    format!("duplicate zone `{}`", z.id),
                ));
            }
        }
        if zones.is_empty() {
            return Err(field_err("zones", "scene has no zones"));
        }

        let mut objects = BTreeMap::new();
        for (i, o) in scene.objects.iter().enumerate() {
            if o.id.is_empty() {
                return Err(field_err(format!("objects[{i}].id"), "empty object id"));
            }
            if !crate::skills::valid_class(&o.class_name) {
                return Err(field_err(
                    format!("objects[{i}].class"),
                    format!("invalid class `{}`", o.class_name),
                ));
            }
            let properties: BTreeSet<Property> = o.properties.iter().copied().collect();
            let states: BTreeSet<ObjState> = o.states.iter().copied().collect();
            for s in &states {
                let needed = match s {
                    ObjState::Open => Some(Property::Openable),
                    ObjState::ToggledOn => Some(Property::Toggleable),
                    ObjState::Sliced => Some(Property::Sliceable),
                    _ => None,
                };
                if let Some(p) = needed {
                    if !properties.contains(&p) {
                        return Err(field_err(
                            format!("objects[{i}].states"),
                            format!("`{}` requires property {:?}", s.name(), p),
                        ));
                    }
                }
            }
            let inst = ObjectInstance {
                id: o.id.clone(),
                class_name: o.class_name.clone(),
                properties,
                states,
                position: String::new(),
                basin: o.basin.clone(),
            };
            if objects.insert(o.id.clone(), inst).is_some() {
                return Err(field_err(
                    format!("objects[{i}].id"),
                    format!("duplicate object `{}`", o.id),
                ));
            }
        }

        let mut placement = PlacementGraph::default();
        for (i, o) in scene.objects.iter().enumerate() {
            match (&o.on, &o.inside) {
                (Some(_), Some(_)) => {
                    return Err(field_err(
                        format!("objects[{i}]"),
                        "both `on` and `inside` set",
                    ));
                }
                (Some(p), None) | (None, Some(p)) => {
                    let relation = if o.on.is_some() {
                        Relation::On
                    } else {
                        Relation::Inside
                    };
                    let field = if relation == Relation::On {
                        "on"
                    } else {
                        "inside"
                    };
                    let parent = objects.get(p).ok_or_else(|| {
                        field_err(
                            format!("objects[{i}].{field}"),
                            format!("unknown object `{p}`"),
                        )
                    })?;
                    let ok = match relation {
                        Relation::On => parent.is_receptacle(),
                        Relation::Inside => parent.has(Property::Container),
                    };
                    if !ok {
                        return Err(field_err(
                            format!("objects[{i}].{field}"),
                            format!("`{p}` cannot hold objects this way"),
                        ));
                    }
                    if p == &o.id {
                        return Err(SceneError::Cycle(o.id.clone()));
                    }
                    let map = if relation == Relation::On {
                        &mut placement.on
                    } else {
                        &mut placement.inside
                    };
                    map.insert(o.id.clone(), p.clone());
                }
                (None, None) => {}
            }
            if let Some(b) = &o.basin {
                let ok = objects.get(b).is_some_and(ObjectInstance::is_receptacle);
                if !ok || !o.properties.contains(&Property::WaterSource) {
                    return Err(field_err(
                        format!("objects[{i}].basin"),
                        format!("invalid basin `{b}`"),
                    ));
                }
            }
        }

        // Cycle detection: every chain must terminate within |objects| hops.
        for id in objects.keys() {
            let mut cur = id.as_str();
            let mut hops = 0;
            while let Some((p, _)) = placement.parent(cur) {
                hops += 1;
                if hops > objects.len() {
                    return Err(SceneError::Cycle(id.clone()));
                }
                cur = p;
            }
        }

        // Resolve positions: roots need an explicit zone, children inherit.
        for (i, o) in scene.objects.iter().enumerate() {
            if o.on.is_none() && o.inside.is_none() {
                let zone = o.zone.as_ref().ok_or_else(|| {
                    field_err(format!("objects[{i}].zone"), "root object needs a zone")
                })?;
                if !zones.contains_key(zone) {
                    return Err(field_err(
                        format!("objects[{i}].zone"),
                        format!("unknown zone `{zone}`"),
                    ));
                }
            }
        }
        let roots: BTreeMap<String, String> = scene
            .objects
            .iter()
            .filter_map(|o| o.zone.clone().map(|z| (o.id.clone(), z)))
            .collect();
        let ids: Vec<String> = objects.keys().cloned().collect();
        for id in ids {
            let mut cur = id.as_str();
            while let Some((p, _)) = placement.parent(cur) {
                cur = p;
            }
            let zone = roots[cur].clone();
            if let Some(own) = roots.get(&id) {
                if own != &zone {
                    let i = scene.objects.iter().position(|o| o.id == id).unwrap_or(0);
                    return Err(field_err(
                        format!("objects[{i}].zone"),
                        format!("zone `{own}` disagrees with its parent's zone `{zone}`"),
                    ));
                }
            }
            objects.get_mut(&id).expect("known id").position = zone;
        }

        let capacity = scene.agent.capacity.unwrap_or(profile.capacity());
        if capacity != profile.capacity() {
            return Err(field_err(
                "agent.capacity",
                format!("{profile} profile requires capacity {}", profile.capacity()),
            ));
        }
        if !zones.contains_key(&scene.agent.zone) {
            return Err(field_err(
                "agent.zone",
                format!("unknown zone `{}`", scene.agent.zone),
            ));
        }

        Ok(WorldState {
            profile,
            zones,
            objects,
            placement,
            agent: AgentState {
                location: scene.agent.zone.clone(),
                hands: Vec::new(),
                capacity,
                last_receptacle: None,
            },
            step_count: 0,
        })
    }

    pub fn object(&self, id: &str) -> Option<&ObjectInstance> {
        self.objects.get(id)
    }

    pub fn is_held(&self, id: &str) -> bool {
        self.agent.hands.iter().any(|h| h == id)
    }

    /// Effective zone: the agent's zone when held, otherwise the zone of the placement root.
    pub fn zone_of(&self, id: &str) -> &str {
        if self.is_held(id) {
            return &self.agent.location;
        }
        let mut cur = id;
        while let Some((p, _)) = self.placement.parent(cur) {
            if self.is_held(p) {
                return &self.agent.location;
            }
            cur = p;
        }
        self.objects
            .get(cur)
            .map(|o| o.position.as_str())
            .unwrap_or("")
    }

    pub fn zone_distance(&self, a: &str, b: &str) -> u64 {
        match (self.zones.get(a), self.zones.get(b)) {
            (Some((ax, ay)), Some((bx, by))) => ax.abs_diff(*bx) + ay.abs_diff(*by),
            _ => u64::MAX,
        }
    }

    /// The instance of `class` the agent would interact with. Held objects are excluded.
    ///
    /// Instances in the agent's zone win (lowest id); otherwise the instance whose zone
    /// is closest, ties broken by id.
    pub fn nearest_instance(&self, class: &str) -> Option<&str> {
        let here = self.agent.location.as_str();
        self.objects
            .values()
            .filter(|o| o.class_name == class && !self.is_held(&o.id))
            .min_by_key(|o| {
                let zone = self.zone_of(&o.id);
                (zone != here, self.zone_distance(here, zone), o.id.as_str())
            })
            .map(|o| o.id.as_str())
    }

    fn in_agent_zone(&self, id: &str) -> bool {
        self.zone_of(id) == self.agent.location
    }

    /// Innermost closed container that hides `id`, if any.
    fn hiding_container(&self, id: &str) -> Option<&str> {
        let mut cur = id;
        while let Some((p, rel)) = self.placement.parent(cur) {
            if rel == Relation::Inside && self.objects.get(p).is_some_and(ObjectInstance::is_closed)
            {
                return Some(p);
            }
            cur = p;
        }
        None
    }

    /// Objects whose placement chain reaches `device` and enters it through `inside`
    /// (or through any relation when `any_relation`).
    fn contents_of(&self, device: &str, any_relation: bool) -> Vec<String> {
        self.objects
            .keys()
            .filter(|id| {
                let mut cur = id.as_str();
                while let Some((p, rel)) = self.placement.parent(cur) {
                    if p == device {
                        return any_relation || rel == Relation::Inside;
                    }
                    cur = p;
                }
                false
            })
            .cloned()
            .collect()
    }

    fn is_ancestor_or_self(&self, ancestor: &str, id: &str) -> bool {
        let mut cur = id;
        loop {
            if cur == ancestor {
                return true;
            }
            match self.placement.parent(cur) {
                Some((p, _)) => cur = p,
                None => return false,
            }
        }
    }

    /// Canonical fingerprint of the full state.
    pub fn state_hash(&self) -> u64 {
        hash_value(self)
    }

    /// Executes one skill. The world changes only on success (the step counter always
    /// advances); failures carry a catalog feedback message.
    pub fn apply_skill(&mut self, skill: &Skill) -> StepResult {
        self.step_count += 1;
        let supported = match self.profile {
            ProfileKind::Alfred => crate::skills::Profile::alfred().supports(skill.action),
            ProfileKind::Wah => crate::skills::Profile::wah().supports(skill.action),
        };
        let outcome = if !supported || (skill.action.arity() >= 1 && skill.object.is_none()) {
            Err(FeedbackMessage::failed(skill.action))
        } else {
            match skill.action {
                Action::Done => Ok(Vec::new()),
                Action::Find | Action::WalkTo => self.navigate(skill),
                Action::PickUp | Action::Grab => self.pick_up(skill),
                Action::PutDown => self.put_down(),
                Action::PutOn | Action::PutIn => self.put_onto(skill),
                Action::Open | Action::Close => self.set_open(skill),
                Action::TurnOn | Action::TurnOff | Action::SwitchOn => self.set_toggle(skill),
                Action::Slice => self.slice(skill),
            }
        };
        match outcome {
            Ok(effects) => StepResult::ok(skill.clone(), effects),
            Err(feedback) => StepResult::failed(skill.clone(), feedback),
        }
    }

    fn navigate(&mut self, skill: &Skill) -> Outcome {
        let fail = || FeedbackMessage::failed(skill.action);
        let target = self
            .nearest_instance(skill.object())
            .ok_or_else(fail)?
            .to_string();
        let zone = self.zone_of(&target).to_string();
        let is_receptacle = self.objects[&target].is_receptacle();
        self.agent.location = zone.clone();
        if is_receptacle {
            self.agent.last_receptacle = Some(target);
        }
        Ok(alloc::vec![Effect::Moved { zone }])
    }

    fn pick_up(&mut self, skill: &Skill) -> Outcome {
        let fail = || FeedbackMessage::failed(skill.action);
        let target = self
            .nearest_instance(skill.object())
            .ok_or_else(fail)?
            .to_string();
        let obj = &self.objects[&target];
        if !self.in_agent_zone(&target) || !obj.has(Property::Pickupable) {
            return Err(fail());
        }
        if let Some(c) = self.hiding_container(&target) {
            return Err(FeedbackMessage::not_visible(
                &obj.class_name,
                &self.objects[c].class_name,
            ));
        }
        if self.agent.hands.len() >= self.agent.capacity {
            return Err(fail());
        }
        self.placement.remove(&target);
        self.agent.hands.push(target.clone());
        Ok(alloc::vec![Effect::Picked { object: target }])
    }

    /// Validates placing held `object` onto `target` and returns the relation to use.
    fn placement_for(
        &self,
        object: &str,
        target: &str,
        want: Option<Relation>,
    ) -> Option<Relation> {
        let t = self.objects.get(target)?;
        if self.is_held(target) || !self.in_agent_zone(target) || t.is_closed() {
            return None;
        }
        // Putting an object into something resting on it would close a cycle.
        if self.is_ancestor_or_self(object, target) {
            return None;
        }
        match want {
            Some(Relation::On) => t.has(Property::Receptacle).then_some(Relation::On),
            Some(Relation::Inside) => t.has(Property::Container).then_some(Relation::Inside),
            None if t.has(Property::Container) => Some(Relation::Inside),
            None if t.has(Property::Receptacle) => Some(Relation::On),
            None => None,
        }
    }

    fn place(&mut self, object: String, target: String, relation: Relation) -> Vec<Effect> {
        self.agent.hands.retain(|h| h != &object);
        let zone = self.zone_of(&target).to_string();
        let map = match relation {
            Relation::On => &mut self.placement.on,
            Relation::Inside => &mut self.placement.inside,
        };
        map.insert(object.clone(), target.clone());
        if let Some(o) = self.objects.get_mut(&object) {
            o.position = zone;
        }
        alloc::vec![Effect::Placed {
            object,
            target,
            relation
        }]
    }

    fn put_down(&mut self) -> Outcome {
        let object = self
            .agent
            .hands
            .last()
            .cloned()
            .ok_or_else(FeedbackMessage::not_holding)?;
        let failed = || FeedbackMessage::failed(Action::PutDown);
        let target = self.agent.last_receptacle.clone().ok_or_else(failed)?;
        let relation = self
            .placement_for(&object, &target, None)
            .ok_or_else(failed)?;
        Ok(self.place(object, target, relation))
    }

    fn put_onto(&mut self, skill: &Skill) -> Outcome {
        if self.agent.hands.is_empty() {
            return Err(FeedbackMessage::not_holding());
        }
        let fail = || FeedbackMessage::failed(skill.action);
        let object = self
            .agent
            .hands
            .iter()
            .rev()
            .find(|h| self.objects[*h].class_name == skill.object())
            .cloned()
            .ok_or_else(fail)?;
        let target = self
            .nearest_instance(skill.receptacle())
            .ok_or_else(fail)?
            .to_string();
        let want = if skill.action == Action::PutOn {
            Relation::On
        } else {
            Relation::Inside
        };
        let relation = self
            .placement_for(&object, &target, Some(want))
            .ok_or_else(fail)?;
        Ok(self.place(object, target, relation))
    }

    /// Nearest instance of the skill's class in the agent zone with the given property.
    fn reachable_target(
        &self,
        skill: &Skill,
        property: Property,
    ) -> Result<String, FeedbackMessage> {
        let fail = || FeedbackMessage::failed(skill.action);
        let target = self.nearest_instance(skill.object()).ok_or_else(fail)?;
        if !self.in_agent_zone(target) || !self.objects[target].has(property) {
            return Err(fail());
        }
        Ok(target.to_string())
    }

    fn set_open(&mut self, skill: &Skill) -> Outcome {
        let open = skill.action == Action::Open;
        let target = self.reachable_target(skill, Property::Openable)?;
        if self.objects[&target].is(ObjState::Open) == open {
            return Err(FeedbackMessage::failed(skill.action));
        }
        let mut effects = alloc::vec![Effect::StateSet {
            object: target.clone(),
            state: ObjState::Open,
            on: open
        }];
        let obj = self.objects.get_mut(&target).expect("reachable");
        if open {
            obj.states.insert(ObjState::Open);
        } else {
            obj.states.remove(&ObjState::Open);
            if obj.has(Property::ColdSource) {
                effects.extend(self.grant(&target, ObjState::Cooled, false));
            }
        }
        Ok(effects)
    }

    fn set_toggle(&mut self, skill: &Skill) -> Outcome {
        let on = skill.action != Action::TurnOff;
        let target = self.reachable_target(skill, Property::Toggleable)?;
        if self.objects[&target].is(ObjState::ToggledOn) == on {
            return Err(FeedbackMessage::failed(skill.action));
        }
        let mut effects = alloc::vec![Effect::StateSet {
            object: target.clone(),
            state: ObjState::ToggledOn,
            on
        }];
        let obj = self.objects.get_mut(&target).expect("reachable");
        if on {
            obj.states.insert(ObjState::ToggledOn);
            let heat = obj.has(Property::HeatSource);
            let basin = obj
                .has(Property::WaterSource)
                .then(|| obj.basin.clone())
                .flatten();
            if heat {
                effects.extend(self.grant(&target, ObjState::Heated, false));
            }
            if let Some(basin) = basin {
                let gained = self.grant(&basin, ObjState::Cleaned, true);
                // Attribute cleaning to the faucet rather than the basin.
                effects.extend(gained.into_iter().map(|e| match e {
                    Effect::Gained { object, state, .. } => Effect::Gained {
                        object,
                        state,
                        source: target.clone(),
                    },
                    other => other,
                }));
            }
        } else {
            obj.states.remove(&ObjState::ToggledOn);
        }
        Ok(effects)
    }

    fn grant(&mut self, device: &str, state: ObjState, any_relation: bool) -> Vec<Effect> {
        let mut effects = Vec::new();
        for id in self.contents_of(device, any_relation) {
            let obj = self.objects.get_mut(&id).expect("content id");
            if obj.states.insert(state) {
                effects.push(Effect::Gained {
                    object: id,
                    state,
                    source: device.to_string(),
                });
            }
        }
        effects
    }

    fn slice(&mut self, skill: &Skill) -> Outcome {
        let target = self.reachable_target(skill, Property::Sliceable)?;
        let obj = &self.objects[&target];
        if let Some(c) = self.hiding_container(&target) {
            return Err(FeedbackMessage::not_visible(
                &obj.class_name,
                &self.objects[c].class_name,
            ));
        }
        let has_knife = self
            .agent
            .hands
            .iter()
            .any(|h| self.objects[h].class_name.ends_with("knife"));
        if obj.is(ObjState::Sliced) || !has_knife {
            return Err(FeedbackMessage::failed(skill.action));
        }
        self.objects
            .get_mut(&target)
            .expect("reachable")
            .states
            .insert(ObjState::Sliced);
        Ok(alloc::vec![Effect::StateSet {
            object: target,
            state: ObjState::Sliced,
            on: true
        }])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn o(id: &str, class: &str, props: &[Property]) -> ObjectSpec {
        ObjectSpec {
            id: id.into(),
            class_name: class.into(),
            properties: props.to_vec(),
            states: vec![],
            on: None,
            inside: None,
            zone: None,
            basin: None,
        }
    }

    fn at(mut spec: ObjectSpec, zone: &str) -> ObjectSpec {
        spec.zone = Some(zone.into());
        spec
    }

    fn on(mut spec: ObjectSpec, parent: &str) -> ObjectSpec {
        spec.on = Some(parent.into());
        spec
    }

    fn inside(mut spec: ObjectSpec, parent: &str) -> ObjectSpec {
        spec.inside = Some(parent.into());
        spec
    }

    fn zones() -> Vec<ZoneSpec> {
        vec![
            ZoneSpec {
                id: "counter".into(),
                x: 0,
                y: 0,
            },
            ZoneSpec {
                id: "fridge".into(),
                x: 2,
                y: 0,
            },
            ZoneSpec {
                id: "table".into(),
                x: 5,
                y: 3,
            },
        ]
    }

    fn kitchen() -> SceneSpec {
        use Property::*;
        SceneSpec {
            zones: zones(),
            objects: vec![
                at(o("counter_1", "counter top", &[Receptacle]), "counter"),
                on(o("apple_1", "apple", &[Pickupable, Sliceable]), "counter_1"),
                at(
                    o(
                        "fridge_1",
                        "fridge",
                        &[Receptacle, Container, Openable, ColdSource],
                    ),
                    "fridge",
                ),
                inside(o("egg_1", "egg", &[Pickupable]), "fridge_1"),
                at(o("table_1", "dining table", &[Receptacle]), "table"),
            ],
            agent: AgentSpec {
                zone: "table".into(),
                capacity: None,
            },
        }
    }

    fn skill(a: Action, c: &str) -> Skill {
        Skill::unary(a, c)
    }

    #[test]
    fn load_transcribes_placement() {
        let w = WorldState::load(&kitchen(), ProfileKind::Alfred).unwrap();
        assert_eq!(w.placement.on["apple_1"], "counter_1");
        assert_eq!(w.placement.inside["egg_1"], "fridge_1");
        assert!(!w.objects["fridge_1"].is(ObjState::Open));
        assert!(w.agent.hands.is_empty());
        assert_eq!(w.agent.last_receptacle, None);
        assert_eq!(w.zone_of("apple_1"), "counter");
        assert_eq!(w.agent.capacity, 1);
    }

    #[test]
    fn load_rejects_unknown_receptacle_and_cycles() {
        let mut scene = kitchen();
        scene.objects[1].on = Some("shelf_9".into());
        assert!(matches!(
            WorldState::load(&scene, ProfileKind::Alfred),
            Err(SceneError::Field { ref field, .. }) if field == "objects[1].on"
        ));

        use Property::*;
        let cyc = SceneSpec {
            zones: zones(),
            objects: vec![
                on(o("box_1", "box", &[Pickupable, Receptacle]), "box_2"),
                on(o("box_2", "box", &[Pickupable, Receptacle]), "box_1"),
            ],
            agent: AgentSpec {
                zone: "table".into(),
                capacity: None,
            },
        };
        assert!(matches!(
            WorldState::load(&cyc, ProfileKind::Alfred),
            Err(SceneError::Cycle(_))
        ));
    }

    #[test]
    fn load_checks_state_and_capacity_invariants() {
        let mut scene = kitchen();
        scene.objects[1].states = vec![ObjState::Open];
        assert!(WorldState::load(&scene, ProfileKind::Alfred).is_err());
        let mut scene = kitchen();
        scene.agent.capacity = Some(2);
        assert!(WorldState::load(&scene, ProfileKind::Alfred).is_err());
        assert!(WorldState::load(&scene, ProfileKind::Wah).is_ok());
    }

    #[test]
    fn pick_up_inside_closed_fridge_reports_container() {
        let mut scene = kitchen();
        scene.objects[3].class_name = "apple".into();
        scene.objects[1].class_name = "pear".into();
        let mut w = WorldState::load(&scene, ProfileKind::Alfred).unwrap();
        assert!(w.apply_skill(&skill(Action::Find, "apple")).success);
        let before = w.clone();
        let r = w.apply_skill(&skill(Action::PickUp, "apple"));
        assert!(!r.success);
        let fb = r.feedback.unwrap();
        assert_eq!(
            fb.prompt_suffix(),
            " (this action failed: Apple is not visible because it is in Fridge)"
        );
        assert_eq!(fb.template_id, FeedbackTemplate::NotVisibleInContainer);
        assert_eq!(w.step_count, before.step_count + 1);
        w.step_count = before.step_count;
        assert_eq!(w, before);
    }

    #[test]
    fn put_down_with_empty_hands() {
        let mut w = WorldState::load(&kitchen(), ProfileKind::Alfred).unwrap();
        let r = w.apply_skill(&skill(Action::PutDown, "apple"));
        assert_eq!(
            r.feedback.unwrap().rendered,
            "Robot is not holding any object"
        );
    }

    #[test]
    fn find_moves_to_single_instance_zone() {
        let mut w = WorldState::load(&kitchen(), ProfileKind::Alfred).unwrap();
        assert!(w.apply_skill(&skill(Action::Find, "apple")).success);
        assert_eq!(w.agent.location, "counter");
        // apple is not a receptacle
        assert_eq!(w.agent.last_receptacle, None);
        let r = w.apply_skill(&skill(Action::Find, "banana"));
        assert_eq!(r.feedback.unwrap().rendered, "find failed");
    }

    #[test]
    fn fridge_cycle_cools_apple() {
        let mut w = WorldState::load(&kitchen(), ProfileKind::Alfred).unwrap();
        let plan = [
            skill(Action::Find, "fridge"),
            skill(Action::Open, "fridge"),
            skill(Action::Find, "apple"),
            skill(Action::PickUp, "apple"),
            skill(Action::Find, "fridge"),
            skill(Action::PutDown, "apple"),
            skill(Action::Close, "fridge"),
        ];
        for s in &plan {
            let r = w.apply_skill(s);
            assert!(r.success, "{s:?} failed: {:?}", r.feedback);
        }
        assert!(w.objects["apple_1"].is(ObjState::Cooled));
        assert!(w.objects["egg_1"].is(ObjState::Cooled));
        assert_eq!(w.placement.inside["apple_1"], "fridge_1");
    }

    #[test]
    fn nearest_instance_rules() {
        use Property::*;
        let scene = SceneSpec {
            zones: zones(),
            objects: vec![
                at(o("apple_2", "apple", &[Pickupable]), "table"),
                at(o("apple_1", "apple", &[Pickupable]), "table"),
                at(o("apple_3", "apple", &[Pickupable]), "counter"),
                at(o("pear_1", "pear", &[Pickupable]), "counter"),
            ],
            agent: AgentSpec {
                zone: "table".into(),
                capacity: None,
            },
        };
        let w = WorldState::load(&scene, ProfileKind::Alfred).unwrap();
        assert_eq!(w.nearest_instance("apple"), Some("apple_1"));
        assert_eq!(w.nearest_instance("banana"), None);
        assert_eq!(w.nearest_instance("pear"), Some("pear_1"));
    }

    #[test]
    fn nearest_instance_prefers_closer_zone() {
        use Property::*;
        let scene = SceneSpec {
            zones: zones(),
            objects: vec![
                at(o("cup_1", "cup", &[Pickupable]), "counter"),
                at(o("cup_2", "cup", &[Pickupable]), "fridge"),
            ],
            agent: AgentSpec {
                zone: "table".into(),
                capacity: None,
            },
        };
        // table (5,3): counter at distance 8, fridge at distance 6
        let w = WorldState::load(&scene, ProfileKind::Alfred).unwrap();
        assert_eq!(w.nearest_instance("cup"), Some("cup_2"));
    }

    #[test]
    fn interactions_require_same_zone() {
        let mut w = WorldState::load(&kitchen(), ProfileKind::Alfred).unwrap();
        let r = w.apply_skill(&skill(Action::PickUp, "apple"));
        assert_eq!(r.feedback.unwrap().rendered, "pick up failed");
        let r = w.apply_skill(&skill(Action::Open, "fridge"));
        assert!(!r.success);
    }

    #[test]
    fn put_down_into_closed_container_fails_generic() {
        let mut w = WorldState::load(&kitchen(), ProfileKind::Alfred).unwrap();
        for s in [
            skill(Action::Find, "apple"),
            skill(Action::PickUp, "apple"),
            skill(Action::Find, "fridge"),
        ] {
            assert!(w.apply_skill(&s).success);
        }
        let r = w.apply_skill(&skill(Action::PutDown, "apple"));
        assert_eq!(
            r.feedback.unwrap().prompt_suffix(),
            " (this action failed: put down failed)"
        );
        assert_eq!(w.agent.hands, vec!["apple_1".to_string()]);
    }

    #[test]
    fn capacity_is_enforced() {
        use Property::*;
        let scene = SceneSpec {
            zones: zones(),
            objects: vec![
                at(o("a_1", "apple", &[Pickupable]), "table"),
                at(o("b_1", "bread", &[Pickupable]), "table"),
                at(o("c_1", "cup", &[Pickupable]), "table"),
            ],
            agent: AgentSpec {
                zone: "table".into(),
                capacity: None,
            },
        };
        let mut w = WorldState::load(&scene, ProfileKind::Wah).unwrap();
        assert!(w.apply_skill(&skill(Action::Grab, "apple")).success);
        assert!(w.apply_skill(&skill(Action::Grab, "bread")).success);
        assert!(!w.apply_skill(&skill(Action::Grab, "cup")).success);
        assert_eq!(w.agent.hands.len(), 2);
    }

    #[test]
    fn slice_needs_knife() {
        use Property::*;
        let scene = SceneSpec {
            zones: zones(),
            objects: vec![
                at(o("knife_1", "knife", &[Pickupable]), "counter"),
                at(
                    o("lettuce_1", "lettuce", &[Pickupable, Sliceable]),
                    "counter",
                ),
            ],
            agent: AgentSpec {
                zone: "counter".into(),
                capacity: None,
            },
        };
        let mut w = WorldState::load(&scene, ProfileKind::Alfred).unwrap();
        assert!(!w.apply_skill(&skill(Action::Slice, "lettuce")).success);
        assert!(w.apply_skill(&skill(Action::PickUp, "knife")).success);
        assert!(w.apply_skill(&skill(Action::Slice, "lettuce")).success);
        assert!(w.objects["lettuce_1"].is(ObjState::Sliced));
        assert_eq!(w.objects.len(), 2);
        assert!(!w.apply_skill(&skill(Action::Slice, "lettuce")).success);
    }

    #[test]
    fn actions_outside_profile_fail() {
        let mut w = WorldState::load(&kitchen(), ProfileKind::Alfred).unwrap();
        let r = w.apply_skill(&skill(Action::WalkTo, "apple"));
        assert_eq!(r.feedback.unwrap().rendered, "walk to failed");
    }

    #[test]
    fn type_names() {
        assert_eq!(type_name("apple"), "Apple");
        assert_eq!(type_name("counter top"), "CounterTop");
    }
}

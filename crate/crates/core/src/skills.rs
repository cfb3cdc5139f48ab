//! Environment profiles, the skill grammar and skill-set enumeration.
//!
//! A [`Skill`] is an action plus optional object and receptacle classes. Each profile
//! renders skills to a canonical surface string ("find an apple", "put plate on kitchen
//! table") and parses them back.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::worldsim::{Property, SceneSpec};

/// Skill-count reference points for the original benchmark scenes. Not reproduced here
/// because those scenes are not bundled.
pub const ALFRED_REFERENCE_SKILL_COUNT: usize = 214;
pub const WAH_REFERENCE_MEAN_SKILL_COUNT: f64 = 351.89;

/// Surface string of the terminal skill.
pub const TERMINAL_SURFACE: &str = "done";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Alfred,
    Wah,
}

impl ProfileKind {
    pub fn name(self) -> &'static str {
        match self {
            ProfileKind::Alfred => "alfred",
            ProfileKind::Wah => "wah",
        }
    }

    pub fn capacity(self) -> usize {
        match self {
            ProfileKind::Alfred => 1,
            ProfileKind::Wah => 2,
        }
    }
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for ProfileKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "alfred" => Ok(ProfileKind::Alfred),
            "wah" => Ok(ProfileKind::Wah),
            other => Err(format!(
                "unknown profile `{other}` (expected alfred or wah)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Find,
    PickUp,
    PutDown,
    Open,
    Close,
    TurnOn,
    TurnOff,
    Slice,
    WalkTo,
    Grab,
    PutOn,
    PutIn,
    SwitchOn,
    Done,
}

const ALFRED_ACTIONS: &[Action] = &[
    Action::Find,
    Action::PickUp,
    Action::PutDown,
    Action::Open,
    Action::Close,
    Action::TurnOn,
    Action::TurnOff,
    Action::Slice,
    Action::Done,
];

const WAH_ACTIONS: &[Action] = &[
    Action::WalkTo,
    Action::Grab,
    Action::PutOn,
    Action::PutIn,
    Action::Open,
    Action::Close,
    Action::SwitchOn,
    Action::Done,
];

impl Action {
    /// Number of class parameters the action takes.
    pub fn arity(self) -> usize {
        match self {
            Action::Done => 0,
            Action::PutOn | Action::PutIn => 2,
            _ => 1,
        }
    }

    /// Verb phrase used in generic failure feedback ("pick up failed").
    pub fn label(self) -> &'static str {
        match self {
            Action::Find => "find",
            Action::PickUp => "pick up",
            Action::PutDown => "put down",
            Action::Open => "open",
            Action::Close => "close",
            Action::TurnOn => "turn on",
            Action::TurnOff => "turn off",
            Action::Slice => "slice",
            Action::WalkTo => "walk to",
            Action::Grab => "grab",
            Action::PutOn => "put on",
            Action::PutIn => "put in",
            Action::SwitchOn => "switch on",
            Action::Done => "done",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Skill {
    pub action: Action,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub receptacle: Option<String>,
}

impl Skill {
    pub fn done() -> Self {
        Skill {
            action: Action::Done,
            object: None,
            receptacle: None,
        }
    }

    pub fn unary(action: Action, object: impl Into<String>) -> Self {
        Skill {
            action,
            object: Some(object.into()),
            receptacle: None,
        }
    }

    pub fn binary(
        action: Action,
        object: impl Into<String>,
        receptacle: impl Into<String>,
    ) -> Self {
        Skill {
            action,
            object: Some(object.into()),
            receptacle: Some(receptacle.into()),
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.action == Action::Done
    }

    pub fn object(&self) -> &str {
        self.object.as_deref().unwrap_or("")
    }

    pub fn receptacle(&self) -> &str {
        self.receptacle.as_deref().unwrap_or("")
    }

    fn well_formed(&self) -> bool {
        let params = usize::from(self.object.is_some()) + usize::from(self.receptacle.is_some());
        params == self.action.arity() && (self.receptacle.is_none() || self.object.is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SkillError {
    #[error("no such skill: {0:?}")]
    NoSuchSkill(String),
    #[error("skill {skill:?} is not valid under the {profile} profile")]
    InvalidForProfile { skill: Skill, profile: ProfileKind },
    #[error("allow-list line {line}: {reason}")]
    AllowList { line: usize, reason: String },
    #[error("duplicate skill surface {0:?}")]
    DuplicateSurface(String),
    #[error("invalid class name {0:?}")]
    InvalidClass(String),
}

/// Article exceptions keyed by the first word of the class display name.
const DEFAULT_ARTICLE_EXCEPTIONS: &[(&str, &str)] = &[
    ("hour", "an"),
    ("hourglass", "an"),
    ("honest", "an"),
    ("herb", "an"),
    ("one", "a"),
    ("unit", "a"),
    ("uniform", "a"),
    ("usb", "a"),
    ("user", "a"),
    ("utensil", "a"),
    ("european", "a"),
];

/// An environment profile: action vocabulary, surface grammar and hand capacity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Profile {
    kind: ProfileKind,
    article_exceptions: BTreeMap<String, &'static str>,
}

impl Profile {
    pub fn new(kind: ProfileKind) -> Self {
        let article_exceptions = DEFAULT_ARTICLE_EXCEPTIONS
            .iter()
            .map(|(w, a)| ((*w).to_string(), *a))
            .collect();
        Profile {
            kind,
            article_exceptions,
        }
    }

    pub fn alfred() -> Self {
        Self::new(ProfileKind::Alfred)
    }

    pub fn wah() -> Self {
        Self::new(ProfileKind::Wah)
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn capacity(&self) -> usize {
        self.kind.capacity()
    }

    pub fn actions(&self) -> &'static [Action] {
        match self.kind {
            ProfileKind::Alfred => ALFRED_ACTIONS,
            ProfileKind::Wah => WAH_ACTIONS,
        }
    }

    pub fn supports(&self, action: Action) -> bool {
        self.actions().contains(&action)
    }

    pub fn validate(&self, skill: &Skill) -> Result<(), SkillError> {
        let classes_ok = skill.object.as_deref().is_none_or(valid_class)
            && skill.receptacle.as_deref().is_none_or(valid_class);
        if self.supports(skill.action) && skill.well_formed() && classes_ok {
            Ok(())
        } else {
            Err(SkillError::InvalidForProfile {
                skill: skill.clone(),
                profile: self.kind,
            })
        }
    }

    pub fn article(&self, class: &str) -> &'static str {
        let first = class.split(' ').next().unwrap_or("");
        if let Some(a) = self.article_exceptions.get(first) {
            return a;
        }
        match first.chars().next() {
            Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
            _ => "a",
        }
    }

    /// Canonical surface string of a skill.
    pub fn render(&self, skill: &Skill) -> String {
        let o = skill.object();
        let r = skill.receptacle();
        match (self.kind, skill.action) {
            (_, Action::Done) => TERMINAL_SURFACE.to_string(),
            (ProfileKind::Alfred, Action::Find) => format!("find {} {o}", self.article(o)),
            (ProfileKind::Alfred, a) => format!("{} the {o}", a.label()),
            (ProfileKind::Wah, Action::PutOn) => format!("put {o} on {r}"),
            (ProfileKind::Wah, Action::PutIn) => format!("put {o} in {r}"),
            (ProfileKind::Wah, a) => format!("{} {o}", a.label()),
        }
    }

    /// Parses one step of a plan. Leading step numbers, surrounding whitespace and a
    /// trailing comma or period are ignored.
    pub fn parse(&self, text: &str) -> Result<Skill, SkillError> {
        let step = normalize_step(text);
        self.parse_normalized(step)
            .filter(|s| self.validate(s).is_ok())
            .ok_or_else(|| SkillError::NoSuchSkill(text.to_string()))
    }

    fn parse_normalized(&self, step: &str) -> Option<Skill> {
        if step == TERMINAL_SURFACE {
            return Some(Skill::done());
        }
        match self.kind {
            ProfileKind::Alfred => {
                if let Some(rest) = step.strip_prefix("find ") {
                    let class = rest
                        .strip_prefix("an ")
                        .or_else(|| rest.strip_prefix("a "))?;
                    return Some(Skill::unary(Action::Find, class));
                }
                ALFRED_ACTIONS
                    .iter()
                    .filter(|a| !matches!(a, Action::Find | Action::Done))
                    .find_map(|a| {
                        let class = step.strip_prefix(a.label())?.strip_prefix(" the ")?;
                        Some(Skill::unary(*a, class))
                    })
            }
            ProfileKind::Wah => {
                if let Some(rest) = step.strip_prefix("put ") {
                    // Earliest separator wins: "put X on Y" / "put X in Y".
                    let (pos, action) = [(" on ", Action::PutOn), (" in ", Action::PutIn)]
                        .into_iter()
                        .filter_map(|(sep, a)| rest.find(sep).map(|p| (p, a)))
                        .min_by_key(|(p, _)| *p)?;
                    return Some(Skill::binary(action, &rest[..pos], &rest[pos + 4..]));
                }
                WAH_ACTIONS.iter().filter(|a| a.arity() == 1).find_map(|a| {
                    let class = step.strip_prefix(a.label())?.strip_prefix(' ')?;
                    Some(Skill::unary(*a, class))
                })
            }
        }
    }
}

/// Strips a leading "12. " step number, surrounding whitespace and one trailing `,`/`.`.
pub fn normalize_step(text: &str) -> &str {
    let mut s = text.trim();
    let digits = s.bytes().take_while(u8::is_ascii_digit).count();
    if digits > 0 && s[digits..].starts_with('.') {
        s = s[digits + 1..].trim_start();
    }
    let s = s
        .strip_suffix(',')
        .or_else(|| s.strip_suffix('.'))
        .unwrap_or(s);
    s.trim()
}

/// Class names are lowercase words separated by single spaces, with no step punctuation.
pub fn valid_class(class: &str) -> bool {
    !class.is_empty()
        && !class.starts_with(' ')
        && !class.ends_with(' ')
        && !class.contains("  ")
        && class.chars().all(|c| {
            c.is_ascii_lowercase() || c.is_ascii_digit() || c == ' ' || c == '-' || c == '\''
        })
}

/// The planner's skill vocabulary: an ordered list of skills with distinct surfaces.
#[derive(Debug, Clone)]
pub struct SkillSet {
    profile: Profile,
    skills: Vec<Skill>,
    surfaces: Vec<String>,
    surface_index: BTreeMap<String, usize>,
}

impl SkillSet {
    /// Builds a set from explicit skills; the terminal skill is appended if missing.
    pub fn from_skills(profile: &Profile, skills: Vec<Skill>) -> Result<Self, SkillError> {
        let mut set = SkillSet {
            profile: profile.clone(),
            skills: Vec::with_capacity(skills.len() + 1),
            surfaces: Vec::with_capacity(skills.len() + 1),
            surface_index: BTreeMap::new(),
        };
        let mut terminal_seen = false;
        for skill in skills {
            profile.validate(&skill)?;
            terminal_seen |= skill.is_terminal();
            set.push(skill)?;
        }
        if !terminal_seen {
            set.push(Skill::done())?;
        }
        Ok(set)
    }

    fn push(&mut self, skill: Skill) -> Result<(), SkillError> {
        let surface = self.profile.render(&skill);
        if self.surface_index.contains_key(&surface) {
            return Err(SkillError::DuplicateSurface(surface));
        }
        self.surface_index
            .insert(surface.clone(), self.skills.len());
        self.skills.push(skill);
        self.surfaces.push(surface);
        Ok(())
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn len(&self) -> usize {
        self.skills.len()
    }

    pub fn is_empty(&self) -> bool {
        self.skills.is_empty()
    }

    pub fn skills(&self) -> &[Skill] {
        &self.skills
    }

    pub fn surfaces(&self) -> &[String] {
        &self.surfaces
    }

    pub fn get(&self, index: usize) -> Option<&Skill> {
        self.skills.get(index)
    }

    pub fn surface(&self, index: usize) -> &str {
        &self.surfaces[index]
    }

    pub fn index_of(&self, skill: &Skill) -> Option<usize> {
        self.surface_index.get(&self.profile.render(skill)).copied()
    }

    pub fn contains(&self, skill: &Skill) -> bool {
        self.index_of(skill).is_some()
    }

    /// Looks a step string up in the set. Returns `None` for text that parses under the
    /// profile grammar but names a skill outside the set.
    pub fn lookup(&self, text: &str) -> Option<usize> {
        let step = normalize_step(text);
        if let Some(i) = self.surface_index.get(step) {
            return Some(*i);
        }
        let skill = self.profile.parse(step).ok()?;
        self.index_of(&skill)
    }
}

/// Union of properties per object class in a scene.
pub fn class_properties(scene: &SceneSpec) -> BTreeMap<String, BTreeSet<Property>> {
    let mut classes: BTreeMap<String, BTreeSet<Property>> = BTreeMap::new();
    for obj in &scene.objects {
        classes
            .entry(obj.class_name.clone())
            .or_default()
            .extend(obj.properties.iter().copied());
    }
    classes
}

fn applicable(action: Action, props: &BTreeSet<Property>) -> bool {
    match action {
        Action::Find | Action::WalkTo => true,
        Action::PickUp | Action::PutDown | Action::Grab => props.contains(&Property::Pickupable),
        Action::Open | Action::Close => props.contains(&Property::Openable),
        Action::TurnOn | Action::TurnOff | Action::SwitchOn => {
            props.contains(&Property::Toggleable)
        }
        Action::Slice => props.contains(&Property::Sliceable),
        Action::PutOn | Action::PutIn | Action::Done => false,
    }
}

/// Enumerates every applicable skill for the classes present in `scene`.
///
/// Ordering is profile action order, then object class, then target class, with the
/// terminal skill last. When `allow_list` is given (surface strings with their 1-based
/// line numbers), the enumeration is intersected with it.
pub fn enumerate_skills(
    profile: &Profile,
    scene: &SceneSpec,
    allow_list: Option<&[(usize, String)]>,
) -> Result<SkillSet, SkillError> {
    let classes = class_properties(scene);
    for class in classes.keys() {
        if !valid_class(class) {
            return Err(SkillError::InvalidClass(class.clone()));
        }
    }
    let allowed = match allow_list {
        Some(lines) => {
            let mut set = BTreeSet::new();
            for (line, text) in lines {
                let skill = profile.parse(text).map_err(|_| SkillError::AllowList {
                    line: *line,
                    reason: format!("cannot parse {text:?}"),
                })?;
                set.insert(skill);
            }
            Some(set)
        }
        None => None,
    };

    let mut skills = Vec::new();
    for &action in profile.actions() {
        match action {
            Action::Done => {}
            Action::PutOn | Action::PutIn => {
                let target_prop = if action == Action::PutOn {
                    Property::Receptacle
                } else {
                    Property::Container
                };
                for (obj, props) in &classes {
                    if !props.contains(&Property::Pickupable) {
                        continue;
                    }
                    for (target, tprops) in &classes {
                        if target != obj && tprops.contains(&target_prop) {
                            skills.push(Skill::binary(action, obj.clone(), target.clone()));
                        }
                    }
                }
            }
            _ => {
                for (class, props) in &classes {
                    if applicable(action, props) {
                        skills.push(Skill::unary(action, class.clone()));
                    }
                }
            }
        }
    }
    if let Some(allowed) = &allowed {
        skills.retain(|s| allowed.contains(s));
    }
    skills.push(Skill::done());
    SkillSet::from_skills(profile, skills)
}

/// Parses allow-list text: one surface per line, `#` starts a comment, blank lines skipped.
pub fn parse_allow_list(text: &str) -> Vec<(usize, String)> {
    text.lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let content = line.split('#').next().unwrap_or("").trim();
            (!content.is_empty()).then(|| (i + 1, content.to_string()))
        })
        .collect()
}

/// Renders a numbered step line: `1. a, 2. b, 3. done.`
pub fn render_plan_line<S: AsRef<str>>(steps: &[S]) -> String {
    let mut out = String::new();
    for (i, step) in steps.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&format!("{}. {}", i + 1, step.as_ref()));
    }
    if !steps.is_empty() {
        out.push('.');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::worldsim::{AgentSpec, ObjectSpec, ZoneSpec};
    use alloc::vec;

    fn obj(id: &str, class: &str, props: &[Property]) -> ObjectSpec {
        ObjectSpec {
            id: id.into(),
            class_name: class.into(),
            properties: props.to_vec(),
            states: vec![],
            on: None,
            inside: None,
            zone: Some("z".into()),
            basin: None,
        }
    }

    fn scene(objects: Vec<ObjectSpec>) -> SceneSpec {
        SceneSpec {
            zones: vec![ZoneSpec {
                id: "z".into(),
                x: 0,
                y: 0,
            }],
            objects,
            agent: AgentSpec {
                zone: "z".into(),
                capacity: None,
            },
        }
    }

    #[test]
    fn render_examples() {
        let alfred = Profile::alfred();
        let wah = Profile::wah();
        assert_eq!(
            alfred.render(&Skill::unary(Action::Find, "apple")),
            "find an apple"
        );
        assert_eq!(
            alfred.render(&Skill::unary(Action::Find, "ladle")),
            "find a ladle"
        );
        assert_eq!(
            alfred.render(&Skill::unary(Action::PickUp, "ladle")),
            "pick up the ladle"
        );
        assert_eq!(
            alfred.render(&Skill::unary(Action::TurnOff, "faucet")),
            "turn off the faucet"
        );
        assert_eq!(
            wah.render(&Skill::binary(Action::PutIn, "cutlery fork", "dishwasher")),
            "put cutlery fork in dishwasher"
        );
        assert_eq!(
            wah.render(&Skill::unary(Action::SwitchOn, "dishwasher")),
            "switch on dishwasher"
        );
        assert_eq!(alfred.render(&Skill::done()), "done");
        assert_eq!(wah.render(&Skill::done()), "done");
    }

    #[test]
    fn article_exceptions() {
        let p = Profile::alfred();
        assert_eq!(p.article("hour glass"), "an");
        assert_eq!(p.article("utensil holder"), "a");
        assert_eq!(p.article("egg"), "an");
        assert_eq!(p.article("desk lamp"), "a");
    }

    #[test]
    fn parse_examples() {
        let alfred = Profile::alfred();
        let wah = Profile::wah();
        assert_eq!(
            alfred.parse("pick up the apple"),
            Ok(Skill::unary(Action::PickUp, "apple"))
        );
        assert_eq!(
            wah.parse(" 7. walk to fridge, "),
            Ok(Skill::unary(Action::WalkTo, "fridge"))
        );
        assert_eq!(alfred.parse("5. done."), Ok(Skill::done()));
        assert_eq!(
            alfred.parse("fly to the moon"),
            Err(SkillError::NoSuchSkill("fly to the moon".into()))
        );
        assert!(alfred.parse("walk to fridge").is_err());
        assert!(wah.parse("find an apple").is_err());
        assert!(wah.parse("put plate kitchen table").is_err());
    }

    #[test]
    fn enumeration_applies_property_filter() {
        use Property::*;
        let s = scene(vec![
            obj("apple_1", "apple", &[Pickupable]),
            obj("table_1", "kitchen table", &[Receptacle]),
            obj("fridge_1", "fridge", &[Openable, Container, Receptacle]),
            obj("tv_1", "tv", &[Toggleable]),
        ]);
        let set = enumerate_skills(&Profile::wah(), &s, None).unwrap();
        let got: Vec<&str> = set.surfaces().iter().map(String::as_str).collect();
        assert_eq!(
            got,
            vec![
                "walk to apple",
                "walk to fridge",
                "walk to kitchen table",
                "walk to tv",
                "grab apple",
                "put apple on fridge",
                "put apple on kitchen table",
                "put apple in fridge",
                "open fridge",
                "close fridge",
                "switch on tv",
                "done",
            ]
        );
    }

    #[test]
    fn no_openables_means_no_open_close() {
        let s = scene(vec![obj("apple_1", "apple", &[Property::Pickupable])]);
        for profile in [Profile::alfred(), Profile::wah()] {
            let set = enumerate_skills(&profile, &s, None).unwrap();
            assert!(set
                .skills()
                .iter()
                .all(|k| !matches!(k.action, Action::Open | Action::Close)));
            assert_eq!(set.skills().iter().filter(|k| k.is_terminal()).count(), 1);
        }
    }

    #[test]
    fn allow_list_intersects_and_reports_bad_lines() {
        let s = scene(vec![obj("apple_1", "apple", &[Property::Pickupable])]);
        let lines = parse_allow_list(
            "# comment\nfind an apple\n\npick up the apple # trailing\nfind a banana\n",
        );
        let set = enumerate_skills(&Profile::alfred(), &s, Some(&lines)).unwrap();
        assert_eq!(
            set.surfaces(),
            &["find an apple", "pick up the apple", "done"]
        );

        let bad = parse_allow_list("find an apple\nfly to the moon\n");
        assert_eq!(
            enumerate_skills(&Profile::alfred(), &s, Some(&bad)).unwrap_err(),
            SkillError::AllowList {
                line: 2,
                reason: "cannot parse \"fly to the moon\"".into()
            }
        );
    }

    #[test]
    fn lookup_requires_membership() {
        let s = scene(vec![obj("apple_1", "apple", &[Property::Pickupable])]);
        let set = enumerate_skills(&Profile::alfred(), &s, None).unwrap();
        assert_eq!(set.lookup("2. pick up the apple,"), Some(1));
        assert_eq!(set.lookup("find a banana"), None);
        assert_eq!(set.lookup("done."), Some(set.len() - 1));
    }

    #[test]
    fn plan_line_format() {
        assert_eq!(
            render_plan_line(&["find a ladle", "pick up the ladle", "done"]),
            "1. find a ladle, 2. pick up the ladle, 3. done."
        );
        assert_eq!(render_plan_line::<&str>(&[]), "");
    }
}

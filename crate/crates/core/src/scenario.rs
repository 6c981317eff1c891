//! Deterministic scenario worlds: a hallway sweep that exercises the
//! progress barrier, and an office delivery that exercises speaker
//! arbitration.
//!
//! Both scenarios run the same tree (see [`build_usecase_tree`]): a mutex
//! parallel over two monitor fallbacks (people, light) and the main task, a
//! synchronized parallel of Navigate and Seek. The hallway scenario keeps
//! the monitors idle; the office scenario scripts a dark room and a person
//! stepping in front of the robot while the light request is mid-speech.
//!
//! Positions are stored in integer ten-thousandths of the hallway so
//! progress landmarks (the object at 0.5) compare exactly; speeds from the
//! configuration are rounded onto that grid.

use crate::leaf::{BehaviorRegistry, LeafBehavior, World};
use crate::progress::Progress;
use crate::resource::{ResourceCatalog, ResourceId, ResourceSet};
use crate::status::Status;
use crate::tree::{NodeKind, NodeSpec};
use std::fmt;
use thiserror::Error;

/// Position grid: 1.0 of hallway = this many units.
pub const POSITION_SCALE: u32 = 10_000;

fn to_units(v: f64) -> u32 {
    ((v * POSITION_SCALE as f64).round() as i64).clamp(0, POSITION_SCALE as i64) as u32
}

fn to_fraction(units: u32) -> Progress {
    Progress::new(units as f64 / POSITION_SCALE as f64).expect("units stay on the grid")
}

/// Scenario parameters, loadable from a flat `key=value` file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub nav_speed: f64,
    pub seek_speed: f64,
    pub object_pos: f64,
    pub recognition_ticks: u32,
    pub person_tick: u64,
    pub lights_fixed_tick: u64,
    pub ask_light_utterances: u32,
    pub ask_move_utterances: u32,
    pub base_priority_light: u32,
    pub base_priority_move: u32,
}

impl Default for ScenarioConfig {
    fn default() -> ScenarioConfig {
        ScenarioConfig {
            nav_speed: 0.05,
            seek_speed: 0.05,
            object_pos: 0.5,
            recognition_ticks: 5,
            person_tick: 2,
            lights_fixed_tick: 8,
            ask_light_utterances: 4,
            ask_move_utterances: 2,
            base_priority_light: 0,
            base_priority_move: 1,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {0}: expected `key=value`")]
    Syntax(usize),
    #[error("line {0}: unknown key `{1}`")]
    UnknownKey(usize, String),
    #[error("line {0}: invalid value for `{1}`")]
    BadValue(usize, String),
}

impl ScenarioConfig {
    /// Applies `key=value` overrides (one per line, `#` comments) on top of
    /// this configuration.
    pub fn apply_overrides(mut self, text: &str) -> Result<ScenarioConfig, ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lineno = i + 1;
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax(lineno))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = || ConfigError::BadValue(lineno, key.to_owned());
            match key {
                "nav_speed" => self.nav_speed = value.parse().map_err(|_| bad())?,
                "seek_speed" => self.seek_speed = value.parse().map_err(|_| bad())?,
                "object_pos" => self.object_pos = value.parse().map_err(|_| bad())?,
                "recognition_ticks" => self.recognition_ticks = value.parse().map_err(|_| bad())?,
                "person_tick" => self.person_tick = value.parse().map_err(|_| bad())?,
                "lights_fixed_tick" => self.lights_fixed_tick = value.parse().map_err(|_| bad())?,
                "ask_light_utterances" => {
                    self.ask_light_utterances = value.parse().map_err(|_| bad())?
                }
                "ask_move_utterances" => {
                    self.ask_move_utterances = value.parse().map_err(|_| bad())?
                }
                "base_priority_light" => {
                    self.base_priority_light = value.parse().map_err(|_| bad())?
                }
                "base_priority_move" => {
                    self.base_priority_move = value.parse().map_err(|_| bad())?
                }
                other => return Err(ConfigError::UnknownKey(lineno, other.to_owned())),
            }
        }
        Ok(self)
    }
}

/// Hallway component: robot and gaze positions on the unit hallway, plus
/// objects awaiting recognition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HallwayWorld {
    pub robot_units: u32,
    pub nav_speed_units: u32,
    pub seek_units: u32,
    pub seek_speed_units: u32,
    /// (position units, recognition ticks), ordered along the hallway.
    pub objects: Vec<(u32, u32)>,
    /// Index of the first object not yet recognized.
    pub next_object: usize,
    /// Countdown of the recognition episode in progress, if any.
    pub recognition_remaining: Option<u32>,
}

impl HallwayWorld {
    pub fn from_config(cfg: &ScenarioConfig) -> HallwayWorld {
        HallwayWorld {
            robot_units: 0,
            nav_speed_units: to_units(cfg.nav_speed).max(1),
            seek_units: 0,
            seek_speed_units: to_units(cfg.seek_speed).max(1),
            objects: vec![(to_units(cfg.object_pos), cfg.recognition_ticks)],
            next_object: 0,
            recognition_remaining: None,
        }
    }

    pub fn robot_pos(&self) -> f64 {
        self.robot_units as f64 / POSITION_SCALE as f64
    }

    pub fn seek_pos(&self) -> f64 {
        self.seek_units as f64 / POSITION_SCALE as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LightLevel {
    Dark,
    Good,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OfficeEvent {
    PersonAppears,
    LightsFixed,
}

/// Office component: monitored flags, scripted events that flip them, and
/// the two speech actions' remaining utterances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OfficeWorld {
    pub light_level: LightLevel,
    pub person_in_front: bool,
    /// Who spoke last tick, if anyone. Observability only; exclusion is
    /// enforced by arbitration and checked by the mutex verifier.
    pub speaker_busy_by: Option<String>,
    pub scripted_events: Vec<(u64, OfficeEvent)>,
    pub ask_light_remaining: u32,
    pub ask_light_total: u32,
    pub ask_move_remaining: u32,
    pub ask_move_total: u32,
}

impl OfficeWorld {
    /// Quiet office: lights fine, nobody in front, no events.
    pub fn quiet(cfg: &ScenarioConfig) -> OfficeWorld {
        OfficeWorld {
            light_level: LightLevel::Good,
            person_in_front: false,
            speaker_busy_by: None,
            scripted_events: Vec::new(),
            ask_light_remaining: cfg.ask_light_utterances,
            ask_light_total: cfg.ask_light_utterances,
            ask_move_remaining: cfg.ask_move_utterances,
            ask_move_total: cfg.ask_move_utterances,
        }
    }

    /// Scripted office: dark from the start, a person stepping in front at
    /// `person_tick`, lights fixed at `lights_fixed_tick`.
    pub fn scripted(cfg: &ScenarioConfig) -> OfficeWorld {
        OfficeWorld {
            light_level: LightLevel::Dark,
            scripted_events: vec![
                (cfg.person_tick, OfficeEvent::PersonAppears),
                (cfg.lights_fixed_tick, OfficeEvent::LightsFixed),
            ],
            ..OfficeWorld::quiet(cfg)
        }
    }
}

/// Default office script: dark room, person at the default tick.
pub fn office_script_default() -> OfficeWorld {
    OfficeWorld::scripted(&ScenarioConfig::default())
}

/// The world both scenarios run in: the hallway task plus the office
/// monitors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UseCaseWorld {
    pub hallway: HallwayWorld,
    pub office: OfficeWorld,
}

impl World for UseCaseWorld {
    fn begin_tick(&mut self, tick: u64) {
        for (at, event) in &self.office.scripted_events {
            if *at == tick {
                match event {
                    OfficeEvent::PersonAppears => self.office.person_in_front = true,
                    OfficeEvent::LightsFixed => self.office.light_level = LightLevel::Good,
                }
            }
        }
    }
}

impl UseCaseWorld {
    pub fn hallway(cfg: &ScenarioConfig) -> UseCaseWorld {
        UseCaseWorld {
            hallway: HallwayWorld::from_config(cfg),
            office: OfficeWorld::quiet(cfg),
        }
    }

    pub fn office(cfg: &ScenarioConfig) -> UseCaseWorld {
        UseCaseWorld {
            hallway: HallwayWorld::from_config(cfg),
            office: OfficeWorld::scripted(cfg),
        }
    }
}

/// Moves the robot toward the end of the hallway at its configured speed.
struct Navigate {
    wheels: ResourceId,
}

impl LeafBehavior<UseCaseWorld> for Navigate {
    fn tick(&self, w: &mut UseCaseWorld) -> Status {
        let h = &mut w.hallway;
        h.robot_units = (h.robot_units + h.nav_speed_units).min(POSITION_SCALE);
        self.status(w)
    }

    fn status(&self, w: &UseCaseWorld) -> Status {
        if w.hallway.robot_units == POSITION_SCALE {
            Status::Success
        } else {
            Status::Running
        }
    }

    fn progress(&self, w: &UseCaseWorld) -> Progress {
        to_fraction(w.hallway.robot_units)
    }

    fn resources(&self, w: &UseCaseWorld) -> ResourceSet {
        if self.status(w) == Status::Running {
            ResourceSet::singleton(self.wheels)
        } else {
            ResourceSet::new()
        }
    }
}

/// Sweeps the gaze along the hallway; at an unrecognized object the gaze
/// holds position while the recognition countdown runs.
struct Seek {
    head: ResourceId,
}

impl LeafBehavior<UseCaseWorld> for Seek {
    fn tick(&self, w: &mut UseCaseWorld) -> Status {
        let h = &mut w.hallway;
        if let Some(rem) = h.recognition_remaining {
            if rem <= 1 {
                h.recognition_remaining = None;
                h.next_object += 1;
            } else {
                h.recognition_remaining = Some(rem - 1);
            }
        } else if h
            .objects
            .get(h.next_object)
            .is_some_and(|&(pos, _)| pos == h.seek_units)
        {
            let ticks = h.objects[h.next_object].1;
            if ticks <= 1 {
                h.next_object += 1;
            } else {
                h.recognition_remaining = Some(ticks - 1);
            }
        } else {
            h.seek_units = (h.seek_units + h.seek_speed_units).min(POSITION_SCALE);
        }
        self.status(w)
    }

    fn status(&self, w: &UseCaseWorld) -> Status {
        let h = &w.hallway;
        let swept = h.seek_units == POSITION_SCALE;
        let recognized_all = h.next_object >= h.objects.len() && h.recognition_remaining.is_none();
        if swept && recognized_all {
            Status::Success
        } else {
            Status::Running
        }
    }

    fn progress(&self, w: &UseCaseWorld) -> Progress {
        to_fraction(w.hallway.seek_units)
    }

    fn resources(&self, w: &UseCaseWorld) -> ResourceSet {
        if self.status(w) == Status::Running {
            ResourceSet::singleton(self.head)
        } else {
            ResourceSet::new()
        }
    }
}

struct NoPeopleInFront;

impl LeafBehavior<UseCaseWorld> for NoPeopleInFront {
    fn tick(&self, w: &mut UseCaseWorld) -> Status {
        self.status(w)
    }
    fn status(&self, w: &UseCaseWorld) -> Status {
        if w.office.person_in_front {
            Status::Failure
        } else {
            Status::Success
        }
    }
    fn progress(&self, _: &UseCaseWorld) -> Progress {
        Progress::ONE
    }
    fn resources(&self, _: &UseCaseWorld) -> ResourceSet {
        ResourceSet::new()
    }
}

struct LightLevelGood;

impl LeafBehavior<UseCaseWorld> for LightLevelGood {
    fn tick(&self, w: &mut UseCaseWorld) -> Status {
        self.status(w)
    }
    fn status(&self, w: &UseCaseWorld) -> Status {
        if w.office.light_level == LightLevel::Good {
            Status::Success
        } else {
            Status::Failure
        }
    }
    fn progress(&self, _: &UseCaseWorld) -> Progress {
        Progress::ONE
    }
    fn resources(&self, _: &UseCaseWorld) -> ResourceSet {
        ResourceSet::new()
    }
}

/// Which speech a [`Speech`] leaf drives.
#[derive(Clone, Copy)]
enum SpeechKind {
    AskForBetterLight,
    AskPeopleToMove,
}

/// One-utterance-per-tick speech through the shared speaker. Completing the
/// move request also clears the person flag: the person steps aside once
/// asked.
struct Speech {
    kind: SpeechKind,
    speaker: ResourceId,
}

impl Speech {
    fn name(&self) -> &'static str {
        match self.kind {
            SpeechKind::AskForBetterLight => "AskForBetterLight",
            SpeechKind::AskPeopleToMove => "AskPeopleToMove",
        }
    }

    fn remaining<'w>(&self, w: &'w mut UseCaseWorld) -> &'w mut u32 {
        match self.kind {
            SpeechKind::AskForBetterLight => &mut w.office.ask_light_remaining,
            SpeechKind::AskPeopleToMove => &mut w.office.ask_move_remaining,
        }
    }

    fn read(&self, w: &UseCaseWorld) -> (u32, u32) {
        match self.kind {
            SpeechKind::AskForBetterLight => {
                (w.office.ask_light_remaining, w.office.ask_light_total)
            }
            SpeechKind::AskPeopleToMove => (w.office.ask_move_remaining, w.office.ask_move_total),
        }
    }

    fn release_if_held(&self, w: &mut UseCaseWorld) {
        if w.office.speaker_busy_by.as_deref() == Some(self.name()) {
            w.office.speaker_busy_by = None;
        }
    }
}

impl LeafBehavior<UseCaseWorld> for Speech {
    fn tick(&self, w: &mut UseCaseWorld) -> Status {
        let rem = self.remaining(w);
        if *rem > 0 {
            *rem -= 1;
            let done = *rem == 0;
            w.office.speaker_busy_by = Some(self.name().to_owned());
            if done {
                self.release_if_held(w);
                if matches!(self.kind, SpeechKind::AskPeopleToMove) {
                    w.office.person_in_front = false;
                }
            }
        }
        self.status(w)
    }

    fn status(&self, w: &UseCaseWorld) -> Status {
        if self.read(w).0 == 0 {
            Status::Success
        } else {
            Status::Running
        }
    }

    fn progress(&self, w: &UseCaseWorld) -> Progress {
        let (remaining, total) = self.read(w);
        if total == 0 {
            return Progress::ONE;
        }
        Progress::new((total - remaining) as f64 / total as f64).expect("fraction of total")
    }

    fn resources(&self, w: &UseCaseWorld) -> ResourceSet {
        if self.read(w).0 > 0 {
            ResourceSet::singleton(self.speaker)
        } else {
            ResourceSet::new()
        }
    }

    fn halt(&self, w: &mut UseCaseWorld) {
        self.release_if_held(w);
    }

    fn pause(&self, w: &mut UseCaseWorld) {
        self.release_if_held(w);
    }
}

/// Scenario names the CLI accepts.
pub const SCENARIOS: [&str; 2] = ["hallway", "office"];

/// A world, its leaf bindings, and the resource catalog they intern into.
pub struct ScenarioBundle {
    pub world: UseCaseWorld,
    pub registry: BehaviorRegistry<UseCaseWorld>,
    pub catalog: ResourceCatalog,
}

#[derive(Debug, Error, PartialEq)]
#[error("unknown scenario `{0}` (expected one of: hallway, office)")]
pub struct UnknownScenario(pub String);

/// Binds the named scenario: its initial world plus the six leaf behaviors
/// (Navigate, Seek, the two monitor conditions, the two speech actions).
pub fn bind_scenario(name: &str, cfg: &ScenarioConfig) -> Result<ScenarioBundle, UnknownScenario> {
    let world = match name {
        "hallway" => UseCaseWorld::hallway(cfg),
        "office" => UseCaseWorld::office(cfg),
        other => return Err(UnknownScenario(other.to_owned())),
    };
    let mut catalog = ResourceCatalog::new();
    let speaker = catalog.intern("speaker").expect("nonempty token");
    let wheels = catalog.intern("wheels").expect("nonempty token");
    let head = catalog.intern("head").expect("nonempty token");

    let mut registry = BehaviorRegistry::new();
    registry.register("Navigate", Box::new(Navigate { wheels }));
    registry.register("Seek", Box::new(Seek { head }));
    registry.register("NoPeopleInFront", Box::new(NoPeopleInFront));
    registry.register("LightLevelGood", Box::new(LightLevelGood));
    registry.register(
        "AskForBetterLight",
        Box::new(Speech {
            kind: SpeechKind::AskForBetterLight,
            speaker,
        }),
    );
    registry.register(
        "AskPeopleToMove",
        Box::new(Speech {
            kind: SpeechKind::AskPeopleToMove,
            speaker,
        }),
    );
    Ok(ScenarioBundle {
        world,
        registry,
        catalog,
    })
}

/// The shared use-case tree: a mutex parallel over the people monitor, the
/// light monitor, and the synchronized Navigate/Seek task, in that order.
pub fn usecase_tree(cfg: &ScenarioConfig) -> NodeSpec {
    NodeSpec::operator(
        "0",
        NodeKind::ParallelMutex,
        vec![
            NodeSpec::operator(
                "0.0",
                NodeKind::Fallback,
                vec![
                    NodeSpec::condition("0.0.0", "NoPeopleInFront"),
                    NodeSpec::action("0.0.1", "AskPeopleToMove"),
                ],
            )
            .with_base_priority(cfg.base_priority_move),
            NodeSpec::operator(
                "0.1",
                NodeKind::Fallback,
                vec![
                    NodeSpec::condition("0.1.0", "LightLevelGood"),
                    NodeSpec::action("0.1.1", "AskForBetterLight"),
                ],
            )
            .with_base_priority(cfg.base_priority_light),
            NodeSpec::operator(
                "0.2",
                NodeKind::ParallelSync,
                vec![
                    NodeSpec::action("0.2.0", "Navigate"),
                    NodeSpec::action("0.2.1", "Seek"),
                ],
            ),
        ],
    )
}

/// [`usecase_tree`] with default parameters.
pub fn build_usecase_tree() -> NodeSpec {
    usecase_tree(&ScenarioConfig::default())
}

impl fmt::Display for LightLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LightLevel::Dark => f.write_str("dark"),
            LightLevel::Good => f.write_str("good"),
        }
    }
}

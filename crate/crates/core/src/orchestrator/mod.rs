//! Show controller in three layers.
//!
//! The top layer is a task state machine driven by detected intentions. The
//! middle layer turns the current state into on/off gates for each module.
//! The bottom layer routes messages between modules and only looks at the
//! gates, never at the state.

mod scenario;

pub use scenario::{parse_scenario, replay, ScenarioStep, TraceEntry};

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrchError {
    #[error("unknown module {0:?}")]
    UnknownModule(String),
    #[error("unknown intention {0:?}")]
    UnknownIntention(String),
    #[error("route {0} is not in the routing table")]
    UnknownRoute(Route),
    #[error("scenario line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ShowState {
    Idle,
    Conversing,
    Calibrating,
    Solo,
    Duet,
    Teaching,
}

impl ShowState {
    pub const ALL: [ShowState; 6] = [
        ShowState::Idle,
        ShowState::Conversing,
        ShowState::Calibrating,
        ShowState::Solo,
        ShowState::Duet,
        ShowState::Teaching,
    ];
}

impl fmt::Display for ShowState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Intention {
    AskSolo,
    AskDuet,
    AskTeaching,
    StartConversation,
    RequestCalibration,
    Done,
    None,
}

impl Intention {
    pub const ALL: [Intention; 7] = [
        Intention::AskSolo,
        Intention::AskDuet,
        Intention::AskTeaching,
        Intention::StartConversation,
        Intention::RequestCalibration,
        Intention::Done,
        Intention::None,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Intention::AskSolo => "ask_solo",
            Intention::AskDuet => "ask_duet",
            Intention::AskTeaching => "ask_teaching",
            Intention::StartConversation => "start_conversation",
            Intention::RequestCalibration => "request_calibration",
            Intention::Done => "done",
            Intention::None => "none",
        }
    }

    /// Accepts the snake_case names and the variant names.
    pub fn parse(s: &str) -> Result<Self, OrchError> {
        Intention::ALL
            .into_iter()
            .find(|i| i.as_str() == s || format!("{i:?}") == s)
            .ok_or_else(|| OrchError::UnknownIntention(s.to_string()))
    }
}

impl fmt::Display for Intention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Current state plus the state a calibration will return to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FsmState {
    pub current: ShowState,
    pub resume: ShowState,
}

impl Default for FsmState {
    fn default() -> Self {
        FsmState::at(ShowState::Idle)
    }
}

impl FsmState {
    pub fn at(state: ShowState) -> Self {
        FsmState {
            current: state,
            resume: state,
        }
    }
}

/// The task table. Anything not listed leaves the state as it is.
pub fn transition(fsm: FsmState, intent: Intention) -> FsmState {
    use Intention as I;
    use ShowState as S;
    let go = |s: ShowState| FsmState::at(s);
    match (fsm.current, intent) {
        (S::Calibrating, I::RequestCalibration) => fsm,
        (current, I::RequestCalibration) => FsmState {
            current: S::Calibrating,
            resume: current,
        },
        (S::Calibrating, I::Done) => go(fsm.resume),
        (S::Idle, I::StartConversation) => go(S::Conversing),
        (S::Conversing, I::AskSolo) => go(S::Solo),
        (S::Conversing, I::AskDuet) => go(S::Duet),
        (S::Conversing, I::AskTeaching) => go(S::Teaching),
        (S::Solo | S::Duet | S::Teaching, I::Done) => go(S::Conversing),
        _ => fsm,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Module {
    Tracker,
    ThereminSynth,
    GuiDuet,
    Conversation,
}

impl Module {
    pub const ALL: [Module; 4] = [Module::Tracker, Module::ThereminSynth, Module::GuiDuet, Module::Conversation];

    pub fn as_str(self) -> &'static str {
        match self {
            Module::Tracker => "tracker",
            Module::ThereminSynth => "theremin_synth",
            Module::GuiDuet => "gui_duet",
            Module::Conversation => "conversation",
        }
    }

    pub fn parse(s: &str) -> Result<Self, OrchError> {
        Module::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| OrchError::UnknownModule(s.to_string()))
    }
}

impl fmt::Display for Module {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One gate per module; total by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ControlSignals {
    gates: [bool; 4],
}

impl ControlSignals {
    pub fn with(on: &[Module]) -> Self {
        let mut s = ControlSignals::default();
        for &m in on {
            s.gates[m as usize] = true;
        }
        s
    }

    pub fn is_on(&self, m: Module) -> bool {
        self.gates[m as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Module, bool)> + '_ {
        Module::ALL.into_iter().map(|m| (m, self.is_on(m)))
    }
}

impl fmt::Display for ControlSignals {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .iter()
            .map(|(m, on)| format!("{m}:{}", if on { "on" } else { "off" }))
            .collect();
        f.write_str(&parts.join(","))
    }
}

pub fn control_signals(state: ShowState) -> ControlSignals {
    use Module::*;
    match state {
        ShowState::Idle => ControlSignals::with(&[]),
        ShowState::Conversing => ControlSignals::with(&[Conversation]),
        ShowState::Calibrating => ControlSignals::with(&[Tracker, ThereminSynth]),
        ShowState::Solo => ControlSignals::with(&[ThereminSynth]),
        ShowState::Duet => ControlSignals::with(&[Tracker, ThereminSynth, GuiDuet]),
        ShowState::Teaching => ControlSignals::with(&[Tracker, GuiDuet]),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Route {
    pub source: Module,
    pub dest: Module,
}

impl Route {
    pub fn new(source: Module, dest: Module) -> Self {
        Route { source, dest }
    }

    /// Parses `source->dest`.
    pub fn parse(s: &str) -> Result<Self, OrchError> {
        let (a, b) = s.split_once("->").ok_or_else(|| OrchError::UnknownModule(s.to_string()))?;
        Ok(Route::new(Module::parse(a.trim())?, Module::parse(b.trim())?))
    }

    pub fn enabled(&self, signals: &ControlSignals) -> bool {
        signals.is_on(self.source) && signals.is_on(self.dest)
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.source, self.dest)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutingTable {
    pub routes: Vec<Route>,
}

impl Default for RoutingTable {
    /// Hand positions to the synth and the duet display, and the duet
    /// display's score to the synth.
    fn default() -> Self {
        RoutingTable {
            routes: vec![
                Route::new(Module::Tracker, Module::ThereminSynth),
                Route::new(Module::Tracker, Module::GuiDuet),
                Route::new(Module::GuiDuet, Module::ThereminSynth),
            ],
        }
    }
}

impl RoutingTable {
    pub fn flags(&self, signals: &ControlSignals) -> Vec<(Route, bool)> {
        self.routes.iter().map(|r| (*r, r.enabled(signals))).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Routed<M> {
    pub delivered: Vec<(Route, M)>,
    pub dropped: usize,
}

/// Delivers each message whose route has both ends gated on.
pub fn route_messages<M: Clone>(
    signals: &ControlSignals,
    table: &RoutingTable,
    inbox: &[(Route, M)],
) -> Result<Routed<M>, OrchError> {
    let mut out = Routed {
        delivered: Vec::new(),
        dropped: 0,
    };
    for (route, msg) in inbox {
        if !table.routes.contains(route) {
            return Err(OrchError::UnknownRoute(*route));
        }
        if route.enabled(signals) {
            out.delivered.push((*route, msg.clone()));
        } else {
            out.dropped += 1;
        }
    }
    Ok(out)
}

//! Mission state machine: load, pick the next waypoint, move, scan, and go
//! home, with an operator takeover path out of `Move`.

mod metrics;
mod mission;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::geometry::{at_destination, Pose2D, Tolerance};
pub use metrics::{mission_metrics, MissionReport};
pub use mission::{
    run_mission, scan_at_waypoint, Capture, InterruptTrigger, LogEvent, Mission, MissionConfig, MissionOutcome,
    OperatorSignal, RunLog, ScanParams, ScanReport, WaypointVerdict,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NavState {
    LoadMap,
    CheckWaypoints,
    CheckDestination,
    Move,
    Scan,
    ManualControl,
    Home,
    Done,
}

impl NavState {
    pub const ALL: [NavState; 8] = [
        NavState::LoadMap,
        NavState::CheckWaypoints,
        NavState::CheckDestination,
        NavState::Move,
        NavState::Scan,
        NavState::ManualControl,
        NavState::Home,
        NavState::Done,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NavState::LoadMap => "LoadMap",
            NavState::CheckWaypoints => "CheckWaypoints",
            NavState::CheckDestination => "CheckDestination",
            NavState::Move => "Move",
            NavState::Scan => "Scan",
            NavState::ManualControl => "ManualControl",
            NavState::Home => "Home",
            NavState::Done => "Done",
        }
    }
}

impl fmt::Display for NavState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NavEvent {
    MapLoaded,
    /// Number of waypoints still queued.
    WaypointsRemaining(usize),
    NoWaypoints,
    AtDest,
    NotAtDest,
    NavSuccess,
    NavTimeout,
    OperatorInterrupt,
    OperatorRelease,
    ScanDone,
    HomeReached,
    /// The current waypoint used up its navigation attempts and is given up.
    RetriesExhausted,
}

impl NavEvent {
    /// One instance of every event kind, with several queue lengths.
    pub fn samples() -> Vec<NavEvent> {
        vec![
            NavEvent::MapLoaded,
            NavEvent::WaypointsRemaining(0),
            NavEvent::WaypointsRemaining(1),
            NavEvent::WaypointsRemaining(17),
            NavEvent::NoWaypoints,
            NavEvent::AtDest,
            NavEvent::NotAtDest,
            NavEvent::NavSuccess,
            NavEvent::NavTimeout,
            NavEvent::OperatorInterrupt,
            NavEvent::OperatorRelease,
            NavEvent::ScanDone,
            NavEvent::HomeReached,
            NavEvent::RetriesExhausted,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            NavEvent::MapLoaded => "map_loaded",
            NavEvent::WaypointsRemaining(_) => "waypoints_remaining",
            NavEvent::NoWaypoints => "no_waypoints",
            NavEvent::AtDest => "at_dest",
            NavEvent::NotAtDest => "not_at_dest",
            NavEvent::NavSuccess => "nav_success",
            NavEvent::NavTimeout => "nav_timeout",
            NavEvent::OperatorInterrupt => "operator_interrupt",
            NavEvent::OperatorRelease => "operator_release",
            NavEvent::ScanDone => "scan_done",
            NavEvent::HomeReached => "home_reached",
            NavEvent::RetriesExhausted => "retries_exhausted",
        }
    }
}

impl fmt::Display for NavEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NavEvent::WaypointsRemaining(n) => write!(f, "waypoints_remaining({n})"),
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FsmError {
    #[error("event {event} is not valid in state {state}")]
    Rejected { state: NavState, event: NavEvent },
}

/// The transition table.
pub fn transition(state: NavState, event: NavEvent) -> Result<NavState, FsmError> {
    use NavEvent as E;
    use NavState as S;
    let next = match (state, event) {
        (S::LoadMap, E::MapLoaded) => S::CheckWaypoints,
        (S::CheckWaypoints, E::WaypointsRemaining(n)) if n > 0 => S::CheckDestination,
        (S::CheckWaypoints, E::WaypointsRemaining(0) | E::NoWaypoints) => S::Home,
        (S::CheckDestination, E::AtDest) => S::Scan,
        (S::CheckDestination, E::NotAtDest) => S::Move,
        (S::CheckDestination, E::RetriesExhausted) => S::CheckWaypoints,
        (S::Move, E::NavSuccess | E::NavTimeout) => S::CheckDestination,
        (S::Move, E::OperatorInterrupt) => S::ManualControl,
        (S::ManualControl, E::OperatorRelease) => S::Scan,
        (S::Scan, E::ScanDone) => S::CheckWaypoints,
        (S::Home, E::HomeReached) => S::Done,
        _ => return Err(FsmError::Rejected { state, event }),
    };
    Ok(next)
}

/// State holder that applies [`transition`] and keeps the walk it took.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fsm {
    state: NavState,
    history: Vec<(NavState, NavEvent, NavState)>,
}

impl Default for Fsm {
    fn default() -> Self {
        Self::new()
    }
}

impl Fsm {
    pub fn new() -> Self {
        Self {
            state: NavState::LoadMap,
            history: Vec::new(),
        }
    }

    pub fn state(&self) -> NavState {
        self.state
    }

    pub fn history(&self) -> &[(NavState, NavEvent, NavState)] {
        &self.history
    }

    /// Applies `event`; on rejection the state is left unchanged.
    pub fn step(&mut self, event: NavEvent) -> Result<NavState, FsmError> {
        let next = transition(self.state, event)?;
        self.history.push((self.state, event, next));
        self.state = next;
        Ok(next)
    }
}

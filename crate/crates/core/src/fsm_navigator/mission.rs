use std::collections::VecDeque;
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::sync::mpsc::{self, Receiver, Sender};

use serde::{Deserialize, Serialize};

use super::{Fsm, NavEvent, NavState};
use crate::geometry::{at_destination, normalize_angle, Point2, Pose2D, Tolerance};
use crate::path_planner::PlannedPath;
use crate::sim_world::{NavOutcome, SimError, SimWorld};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanParams {
    /// Number of evenly spaced headings, at least one.
    pub orientations: usize,
    /// Gesture codes performed, in order, at every heading.
    pub gestures: Vec<String>,
    /// Time each gesture takes, seconds.
    pub gesture_seconds: f64,
}

impl Default for ScanParams {
    fn default() -> Self {
        Self {
            orientations: 4,
            gestures: vec!["stand".into(), "sit".into()],
            gesture_seconds: 1.0,
        }
    }
}

impl ScanParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.orientations == 0 {
            return Err("scan needs at least one orientation".into());
        }
        if self.gestures.is_empty() {
            return Err("scan needs at least one gesture".into());
        }
        if !(self.gesture_seconds.is_finite() && self.gesture_seconds >= 0.0) {
            return Err(format!("gesture duration must be >= 0, got {}", self.gesture_seconds));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionConfig {
    pub tolerance: Tolerance,
    /// Navigation attempts per waypoint before it is given up.
    pub max_attempts: usize,
    /// Seconds the operator holds the robot before releasing it at the goal.
    pub assist_delay: f64,
    /// `None` stubs the scan out, as in the recorded trials.
    pub scan: Option<ScanParams>,
    /// Mission time limit in seconds.
    pub deadline: Option<f64>,
}

impl Default for MissionConfig {
    fn default() -> Self {
        Self {
            tolerance: Tolerance::default(),
            max_attempts: 5,
            assist_delay: 3.0,
            scan: None,
            deadline: None,
        }
    }
}

/// Scripted operator takeover. Each trigger fires once, during a `Move`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InterruptTrigger {
    /// First moment the robot is moving at or after this mission time.
    AtTime(f64),
    /// When moving towards the waypoint with this zero-based index.
    AtWaypoint(usize),
}

/// Messages another thread may send into a running mission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorSignal {
    Interrupt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Capture {
    pub t: f64,
    /// Commanded heading `theta_0 + 2 pi n / N`, wrapped.
    pub heading: f64,
    pub orientation: usize,
    pub gesture: String,
    pub pose: Pose2D,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub captures: Vec<Capture>,
    /// A rotation timed out; `captures` holds what was taken before it.
    pub failed: bool,
}

/// Algorithm of the scan: for each of `N` headings, perform every gesture
/// and take a snapshot. The first heading is the current one, so `N = 1`
/// never rotates.
pub fn scan_at_waypoint(world: &mut SimWorld, params: &ScanParams, tol: &Tolerance) -> Result<ScanReport, SimError> {
    let origin = world.perceived_pose();
    let mut captures = Vec::with_capacity(params.orientations * params.gestures.len());
    for n in 0..params.orientations {
        let heading = normalize_angle(origin.psi + TAU * n as f64 / params.orientations as f64);
        if n > 0 {
            let result = world.goto_pose(Pose2D::new(origin.x, origin.y, heading), tol)?;
            if !result.succeeded() {
                return Ok(ScanReport { captures, failed: true });
            }
        }
        for gesture in &params.gestures {
            world.wait(params.gesture_seconds);
            captures.push(Capture {
                t: world.time(),
                heading,
                orientation: n,
                gesture: gesture.clone(),
                pose: world.perceived_pose(),
            });
        }
    }
    Ok(ScanReport {
        captures,
        failed: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaypointVerdict {
    pub index: usize,
    pub goal: Pose2D,
    pub reached: bool,
    /// Reached only with operator help.
    pub assisted: bool,
    pub attempts: usize,
    pub timeouts: usize,
    /// Seconds from selecting the waypoint to leaving it.
    pub duration: f64,
    /// Some attempt found the goal, carried into the true frame, blocked.
    pub goal_true_blocked: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEvent {
    pub t: f64,
    pub state: NavState,
    pub event: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MissionOutcome {
    Completed,
    Aborted { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub start: Pose2D,
    pub events: Vec<LogEvent>,
    pub transitions: Vec<(NavState, NavEvent, NavState)>,
    /// One per waypoint, in path order.
    pub verdicts: Vec<WaypointVerdict>,
    pub captures: Vec<Capture>,
    pub outcome: MissionOutcome,
    pub end_time: f64,
}

impl RunLog {
    /// States entered, starting with `LoadMap`.
    pub fn states(&self) -> Vec<NavState> {
        std::iter::once(NavState::LoadMap)
            .chain(self.transitions.iter().map(|t| t.2))
            .collect()
    }

    /// `t state event detail` per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            let _ = writeln!(out, "{:.2} {} {} {}", e.t, e.state, e.event, e.detail);
        }
        out
    }

    fn note(&mut self, t: f64, state: NavState, event: &str, detail: String) {
        self.events.push(LogEvent {
            t,
            state,
            event: event.to_string(),
            detail,
        });
    }
}

struct Current {
    index: usize,
    goal: Pose2D,
    started: f64,
    attempts: usize,
    timeouts: usize,
    blocked: bool,
    assisted: bool,
}

impl Current {
    fn verdict(&self, reached: bool, now: f64) -> WaypointVerdict {
        WaypointVerdict {
            index: self.index,
            goal: self.goal,
            reached,
            assisted: self.assisted,
            attempts: self.attempts,
            timeouts: self.timeouts,
            duration: now - self.started,
            goal_true_blocked: self.blocked,
        }
    }
}

#[derive(Debug)]
pub struct Mission {
    config: MissionConfig,
    triggers: Vec<(InterruptTrigger, bool)>,
    operator: Option<Receiver<OperatorSignal>>,
}

impl Mission {
    pub fn new(config: MissionConfig) -> Self {
        Self {
            config,
            triggers: Vec::new(),
            operator: None,
        }
    }

    pub fn with_interrupts(mut self, triggers: impl IntoIterator<Item = InterruptTrigger>) -> Self {
        self.triggers.extend(triggers.into_iter().map(|t| (t, false)));
        self
    }

    /// Sender for live operator signals, polled while moving.
    pub fn operator_channel(&mut self) -> Sender<OperatorSignal> {
        let (tx, rx) = mpsc::channel();
        self.operator = Some(rx);
        tx
    }

    /// Visits `waypoints` from the robot's current pose and returns home.
    pub fn run(&mut self, waypoints: &[Point2], world: &mut SimWorld) -> RunLog {
        let mut log = RunLog {
            start: world.perceived_pose(),
            events: Vec::new(),
            transitions: Vec::new(),
            verdicts: Vec::with_capacity(waypoints.len()),
            captures: Vec::new(),
            outcome: MissionOutcome::Completed,
            end_time: 0.0,
        };
        let mut fsm = Fsm::new();
        let mut queue: VecDeque<(usize, Point2)> = waypoints.iter().copied().enumerate().collect();
        let mut current: Option<Current> = None;
        if let Err(reason) = self.drive(world, &mut fsm, &mut log, &mut queue, &mut current) {
            log.note(world.time(), fsm.state(), "abort", reason.clone());
            let now = world.time();
            if let Some(cur) = current.take() {
                log.verdicts.push(cur.verdict(false, now));
            }
            for (index, p) in queue {
                log.verdicts.push(WaypointVerdict {
                    index,
                    goal: Pose2D::new(p.x, p.y, 0.0),
                    reached: false,
                    assisted: false,
                    attempts: 0,
                    timeouts: 0,
                    duration: 0.0,
                    goal_true_blocked: false,
                });
            }
            log.outcome = MissionOutcome::Aborted { reason };
        }
        log.transitions = fsm.history().to_vec();
        log.end_time = world.time();
        log
    }

    fn drive(
        &mut self,
        world: &mut SimWorld,
        fsm: &mut Fsm,
        log: &mut RunLog,
        queue: &mut VecDeque<(usize, Point2)>,
        current: &mut Option<Current>,
    ) -> Result<(), String> {
        let tol = self.config.tolerance;
        let fire = |fsm: &mut Fsm, log: &mut RunLog, t: f64, event: NavEvent, detail: String| {
            let from = fsm.state();
            let to = fsm.step(event).map_err(|e| e.to_string())?;
            let detail = if detail.is_empty() {
                format!("-> {to}")
            } else {
                format!("-> {to} {detail}")
            };
            log.note(t, from, &event.to_string(), detail);
            Ok::<(), String>(())
        };
        let mut previous = (log.start.position(), log.start.psi);

        fire(fsm, log, world.time(), NavEvent::MapLoaded, String::new())?;
        loop {
            if let Some(limit) = self.config.deadline {
                if world.time() > limit && fsm.state() != NavState::Done {
                    return Err(format!("deadline of {limit} s exceeded"));
                }
            }
            let now = world.time();
            match fsm.state() {
                NavState::LoadMap => unreachable!("map is loaded before the loop"),
                NavState::CheckWaypoints => {
                    let remaining = queue.len();
                    if let Some((index, p)) = queue.pop_front() {
                        let psi = previous.0.bearing_to(p).unwrap_or(previous.1);
                        let goal = Pose2D::new(p.x, p.y, psi);
                        *current = Some(Current {
                            index,
                            goal,
                            started: now,
                            attempts: 0,
                            timeouts: 0,
                            blocked: false,
                            assisted: false,
                        });
                        let detail = format!("waypoint={index} goal={:.3},{:.3},{:.3}", goal.x, goal.y, goal.psi);
                        fire(fsm, log, now, NavEvent::WaypointsRemaining(remaining), detail)?;
                    } else {
                        fire(fsm, log, now, NavEvent::WaypointsRemaining(0), String::new())?;
                    }
                }
                NavState::CheckDestination => {
                    let cur = current.as_mut().expect("a waypoint is selected");
                    if at_destination(world.perceived_pose(), cur.goal, &tol) {
                        fire(fsm, log, now, NavEvent::AtDest, String::new())?;
                    } else if cur.attempts >= self.config.max_attempts {
                        let cur = current.take().expect("a waypoint is selected");
                        log.verdicts.push(cur.verdict(false, now));
                        previous = (cur.goal.position(), cur.goal.psi);
                        let detail = format!("waypoint={} unreached attempts={}", cur.index, cur.attempts);
                        fire(fsm, log, now, NavEvent::RetriesExhausted, detail)?;
                    } else {
                        fire(fsm, log, now, NavEvent::NotAtDest, String::new())?;
                    }
                }
                NavState::Move => {
                    let cur = current.as_mut().expect("a waypoint is selected");
                    cur.attempts += 1;
                    let index = cur.index;
                    let triggers = &mut self.triggers;
                    let operator = &self.operator;
                    let result = world
                        .goto_pose_until(cur.goal, &tol, |w| {
                            let due = triggers.iter_mut().find(|(t, fired)| {
                                !*fired
                                    && match *t {
                                        InterruptTrigger::AtTime(at) => w.time() >= at,
                                        InterruptTrigger::AtWaypoint(k) => k == index,
                                    }
                            });
                            if let Some(hit) = due {
                                hit.1 = true;
                                return true;
                            }
                            operator
                                .as_ref()
                                .is_some_and(|rx| matches!(rx.try_recv(), Ok(OperatorSignal::Interrupt)))
                        })
                        .map_err(|e| e.to_string())?;
                    cur.blocked |= result.goal_true_blocked;
                    let detail = format!(
                        "waypoint={index} attempt={} elapsed={:.2} stalls={}{}",
                        cur.attempts,
                        result.elapsed,
                        result.stalls,
                        if result.goal_true_blocked { " goal_blocked" } else { "" }
                    );
                    let event = match result.outcome {
                        NavOutcome::Success => NavEvent::NavSuccess,
                        NavOutcome::Timeout => {
                            cur.timeouts += 1;
                            NavEvent::NavTimeout
                        }
                        NavOutcome::Interrupted => NavEvent::OperatorInterrupt,
                    };
                    fire(fsm, log, world.time(), event, detail)?;
                }
                NavState::ManualControl => {
                    let cur = current.as_mut().expect("a waypoint is selected");
                    world.wait(self.config.assist_delay);
                    world.teleport_perceived(cur.goal);
                    cur.assisted = true;
                    let detail = format!("waypoint={} assisted", cur.index);
                    fire(fsm, log, world.time(), NavEvent::OperatorRelease, detail)?;
                }
                NavState::Scan => {
                    if let Some(params) = &self.config.scan {
                        let report = scan_at_waypoint(world, params, &tol).map_err(|e| e.to_string())?;
                        for c in &report.captures {
                            log.note(c.t, NavState::Scan, "gesture", c.gesture.clone());
                            log.note(
                                c.t,
                                NavState::Scan,
                                "capture",
                                format!("heading={:.4} gesture={}", c.heading, c.gesture),
                            );
                        }
                        if report.failed {
                            log.note(world.time(), NavState::Scan, "scan_failed", String::new());
                        }
                        log.captures.extend(report.captures);
                    }
                    let cur = current.take().expect("a waypoint is selected");
                    let now = world.time();
                    log.verdicts.push(cur.verdict(true, now));
                    previous = (cur.goal.position(), cur.goal.psi);
                    fire(
                        fsm,
                        log,
                        now,
                        NavEvent::ScanDone,
                        format!("waypoint={} reached", cur.index),
                    )?;
                }
                NavState::Home => {
                    let home = log.start;
                    let mut reached = at_destination(world.perceived_pose(), home, &tol);
                    let mut attempts = 0;
                    while !reached && attempts < self.config.max_attempts {
                        attempts += 1;
                        reached = world.goto_pose(home, &tol).map_err(|e| e.to_string())?.succeeded();
                    }
                    let now = world.time();
                    log.note(
                        now,
                        NavState::Home,
                        "gesture",
                        format!("stand_down home_reached={reached}"),
                    );
                    fire(fsm, log, now, NavEvent::HomeReached, String::new())?;
                }
                NavState::Done => return Ok(()),
            }
        }
    }
}

/// Runs the spliced waypoints of `path` with scripted interrupts.
pub fn run_mission(
    path: &PlannedPath,
    world: &mut SimWorld,
    config: MissionConfig,
    interrupts: impl IntoIterator<Item = InterruptTrigger>,
) -> RunLog {
    Mission::new(config)
        .with_interrupts(interrupts)
        .run(&path.spliced_path, world)
}

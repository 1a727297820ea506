//! Deterministic planar stand-in for the robot and its navigation stack.
//!
//! The world integrates body-frame velocity commands with explicit Euler steps
//! against the true map. Localization drift is a heading bias `beta` that
//! follows a seeded random walk: every true displacement `d` moves the
//! perceived position by `Rot(beta) d`, so with `beta = 0` the perceived pose
//! is exactly the true pose.

mod frames;
mod nav_grid;
mod synthetic;

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use frames::{project_base_footprint, velocity_to_joystick, BodyTransform, JoystickCommand, STICK_LIMIT};
pub use synthetic::{generate_synthetic_map, MapShape, MAX_MAP_SIDE, MIN_MAP_SIDE};

use crate::geometry::{angle_diff, at_destination, AxisConvention, Point2, Pose2D, Tolerance, WorldFrame};
use crate::map_io::OccupancyGrid;
use nav_grid::NavGrid;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulator configuration: {0}")]
    InvalidConfig(String),
    #[error("goal ({x}, {y}) lies outside the map")]
    GoalOutOfBounds { x: f64, y: f64 },
    #[error("start ({x}, {y}) lies outside the map")]
    StartOutOfBounds { x: f64, y: f64 },
    #[error("invalid rotation: {0}")]
    InvalidRotation(String),
    #[error("cannot generate map: {0}")]
    Degenerate(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// m/s, body forward.
    pub max_vx: f64,
    /// m/s, body left.
    pub max_vy: f64,
    /// rad/s.
    pub max_wz: f64,
    /// Integration step, seconds.
    pub dt: f64,
    /// Clearance kept from non-free cells, meters.
    pub robot_radius: f64,
    /// Standard deviation of the heading-bias random walk per sqrt(second).
    pub drift_rate: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            max_vx: 1.0,
            max_vy: 0.5,
            max_wz: 0.8,
            dt: 0.01,
            robot_radius: 0.35,
            drift_rate: 0.0,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        for (name, v) in [
            ("max_vx", self.max_vx),
            ("max_vy", self.max_vy),
            ("max_wz", self.max_wz),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.dt > 0.0 && self.dt <= 0.1) {
            return bad(format!("dt must be in (0, 0.1], got {}", self.dt));
        }
        if !(self.robot_radius.is_finite() && self.robot_radius >= 0.0) {
            return bad(format!("robot_radius must be >= 0, got {}", self.robot_radius));
        }
        if !(self.drift_rate.is_finite() && self.drift_rate >= 0.0) {
            return bad(format!("drift_rate must be >= 0, got {}", self.drift_rate));
        }
        Ok(())
    }
}

/// Body-frame velocity command.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Twist {
    pub vx: f64,
    pub vy: f64,
    pub wz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NavOutcome {
    Success,
    Timeout,
    /// Stopped by the caller's interrupt check.
    Interrupted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NavResult {
    pub outcome: NavOutcome,
    pub elapsed: f64,
    /// The goal, carried into the true frame, sits in blocked space or cannot be reached.
    pub goal_true_blocked: bool,
    /// Steps whose motion was cancelled because it would enter blocked space.
    pub stalls: usize,
}

impl NavResult {
    pub fn succeeded(&self) -> bool {
        self.outcome == NavOutcome::Success
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub truth: Pose2D,
    pub perceived: Pose2D,
}

/// Largest command magnitudes issued so far, after clamping.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CommandPeaks {
    pub vx: f64,
    pub vy: f64,
    pub wz: f64,
}

const HEADING_GAIN: f64 = 2.0;
const SPEED_GAIN: f64 = 3.0;
const MIN_SPEED: f64 = 0.05;
const MIN_TURN_RATE: f64 = 0.05;
/// Heading error above which the robot turns in place before translating.
const TURN_IN_PLACE: f64 = std::f64::consts::FRAC_PI_4;

#[derive(Debug, Clone)]
pub struct SimWorld {
    config: SimConfig,
    frame: WorldFrame,
    grid: OccupancyGrid,
    nav: NavGrid,
    truth: Pose2D,
    /// Perceived position minus true position.
    offset: Point2,
    bias: f64,
    steps: u64,
    rng: ChaCha8Rng,
    peaks: CommandPeaks,
    trace_every: Option<u64>,
    trace: Vec<TraceSample>,
}

impl SimWorld {
    pub fn new(grid: OccupancyGrid, axis: AxisConvention, config: SimConfig, start: Pose2D) -> Result<Self, SimError> {
        config.validate()?;
        let frame = grid.frame(axis);
        if frame.world_to_cell(start.position(), grid.height, grid.width).is_none() {
            return Err(SimError::StartOutOfBounds { x: start.x, y: start.y });
        }
        let nav = NavGrid::new(&grid, frame, config.robot_radius);
        Ok(Self {
            config,
            frame,
            grid,
            nav,
            truth: Pose2D::new(start.x, start.y, start.psi),
            offset: Point2::default(),
            bias: 0.0,
            steps: 0,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            peaks: CommandPeaks::default(),
            trace_every: None,
            trace: Vec::new(),
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    pub fn frame(&self) -> WorldFrame {
        self.frame
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.config.dt
    }

    pub fn true_pose(&self) -> Pose2D {
        self.truth
    }

    pub fn perceived_pose(&self) -> Pose2D {
        Pose2D::new(
            self.truth.x + self.offset.x,
            self.truth.y + self.offset.y,
            self.truth.psi + self.bias,
        )
    }

    pub fn heading_bias(&self) -> f64 {
        self.bias
    }

    pub fn command_peaks(&self) -> CommandPeaks {
        self.peaks
    }

    /// Records a trace sample every `every` steps (and at the current time).
    pub fn enable_trace(&mut self, every: u64) {
        self.trace_every = Some(every.max(1));
        self.record();
    }

    pub fn trace(&self) -> &[TraceSample] {
        &self.trace
    }

    fn record(&mut self) {
        if self.trace_every.is_some() {
            let sample = TraceSample {
                t: self.time(),
                truth: self.truth,
                perceived: self.perceived_pose(),
            };
            self.trace.push(sample);
        }
    }

    /// Whether the robot center may not occupy `p` in the true map.
    pub fn is_blocked(&self, p: Point2) -> bool {
        self.nav.is_blocked(p)
    }

    fn in_bounds(&self, p: Point2) -> bool {
        self.frame.world_to_cell(p, self.grid.height, self.grid.width).is_some()
    }

    /// Where the robot would physically have to stand for its perceived pose to equal `goal`.
    pub fn goal_in_true_frame(&self, goal: Pose2D) -> Pose2D {
        let perceived = self.perceived_pose();
        let (dx, dy) = (goal.x - perceived.x, goal.y - perceived.y);
        let (s, c) = (-self.bias).sin_cos();
        Pose2D::new(
            self.truth.x + c * dx - s * dy,
            self.truth.y + s * dx + c * dy,
            goal.psi - self.bias,
        )
    }

    /// Heading-bias random walk step.
    pub fn inject_drift(&mut self, dt: f64) -> Pose2D {
        if self.config.drift_rate > 0.0 {
            let normal = Normal::new(0.0, self.config.drift_rate * dt.sqrt()).expect("finite std dev");
            self.bias += normal.sample(&mut self.rng);
        }
        self.perceived_pose()
    }

    /// Applies one clamped command for `dt`. Returns false when the motion was
    /// cancelled because it would end in blocked space.
    pub fn step(&mut self, cmd: Twist) -> bool {
        let dt = self.config.dt;
        let cmd = Twist {
            vx: cmd.vx.clamp(-self.config.max_vx, self.config.max_vx),
            vy: cmd.vy.clamp(-self.config.max_vy, self.config.max_vy),
            wz: cmd.wz.clamp(-self.config.max_wz, self.config.max_wz),
        };
        self.peaks.vx = self.peaks.vx.max(cmd.vx.abs());
        self.peaks.vy = self.peaks.vy.max(cmd.vy.abs());
        self.peaks.wz = self.peaks.wz.max(cmd.wz.abs());

        let (s, c) = self.truth.psi.sin_cos();
        let (dx, dy) = ((c * cmd.vx - s * cmd.vy) * dt, (s * cmd.vx + c * cmd.vy) * dt);
        let next = Point2::new(self.truth.x + dx, self.truth.y + dy);
        // Entering blocked space is refused; a robot already inside may move out.
        let moved =
            (dx == 0.0 && dy == 0.0) || !self.nav.is_blocked(next) || self.nav.is_blocked(self.truth.position());
        if moved {
            let (bs, bc) = self.bias.sin_cos();
            self.offset.x += (bc - 1.0) * dx - bs * dy;
            self.offset.y += bs * dx + (bc - 1.0) * dy;
            self.truth.x = next.x;
            self.truth.y = next.y;
        }
        self.truth = Pose2D::new(self.truth.x, self.truth.y, self.truth.psi + cmd.wz * dt);
        self.steps += 1;
        self.inject_drift(dt);
        if let Some(every) = self.trace_every {
            if self.steps.is_multiple_of(every) {
                self.record();
            }
        }
        moved
    }

    /// Lets time pass without motion.
    pub fn wait(&mut self, seconds: f64) {
        let n = (seconds / self.config.dt).round().max(0.0) as u64;
        for _ in 0..n {
            self.step(Twist::default());
        }
    }

    /// Puts the robot where its perceived pose equals `goal`, as an operator carrying it would.
    pub fn teleport_perceived(&mut self, goal: Pose2D) {
        self.truth = Pose2D::new(goal.x - self.offset.x, goal.y - self.offset.y, goal.psi - self.bias);
        self.record();
    }

    /// Drives towards `goal` (perceived frame) until `at_destination` holds or
    /// `tol.timeout` seconds pass.
    ///
    /// The route is planned on the true map towards the point the perceived
    /// goal corresponds to. When that point is blocked or unreachable the
    /// robot approaches the closest reachable cell and waits out the timeout.
    pub fn goto_pose(&mut self, goal: Pose2D, tol: &Tolerance) -> Result<NavResult, SimError> {
        self.goto_pose_until(goal, tol, |_| false)
    }

    /// [`SimWorld::goto_pose`] that also stops, before any step, once `interrupt` returns true.
    pub fn goto_pose_until<F>(&mut self, goal: Pose2D, tol: &Tolerance, mut interrupt: F) -> Result<NavResult, SimError>
    where
        F: FnMut(&SimWorld) -> bool,
    {
        if !self.in_bounds(goal.position()) {
            return Err(SimError::GoalOutOfBounds { x: goal.x, y: goal.y });
        }
        let t0 = self.steps;
        let max_steps = (tol.timeout / self.config.dt).round() as u64;
        let elapsed = |w: &Self| (w.steps - t0) as f64 * w.config.dt;
        let mut stalls = 0;

        let goal_true = self.goal_in_true_frame(goal);
        let here = self.truth.position();
        let route = self.nav.plan(here, goal_true.position());
        let goal_true_blocked = route.is_none();
        let mut route = match route {
            Some(r) => r,
            None => vec![
                here,
                self.nav.nearest_reachable(here, goal_true.position()).unwrap_or(here),
            ],
        };
        let mut leg = 1;

        loop {
            if at_destination(self.perceived_pose(), goal, tol) {
                return Ok(NavResult {
                    outcome: NavOutcome::Success,
                    elapsed: elapsed(self),
                    goal_true_blocked,
                    stalls,
                });
            }
            if self.steps - t0 >= max_steps {
                return Ok(NavResult {
                    outcome: NavOutcome::Timeout,
                    elapsed: elapsed(self),
                    goal_true_blocked,
                    stalls,
                });
            }
            if interrupt(self) {
                return Ok(NavResult {
                    outcome: NavOutcome::Interrupted,
                    elapsed: elapsed(self),
                    goal_true_blocked,
                    stalls,
                });
            }
            // The final target follows the bias as it drifts.
            if !goal_true_blocked {
                *route.last_mut().expect("route has a goal") = self.goal_in_true_frame(goal).position();
            }
            let cmd = self.control(&mut route, &mut leg, goal, tol, goal_true_blocked);
            if !self.step(cmd) {
                stalls += 1;
            }
        }
    }

    fn control(&self, route: &mut [Point2], leg: &mut usize, goal: Pose2D, tol: &Tolerance, parked: bool) -> Twist {
        let pos = self.truth.position();
        let last = route.len() - 1;
        // Skip intermediate corners once reached.
        while *leg < last && pos.distance(route[*leg]) < 0.5 * self.frame.resolution {
            *leg += 1;
        }
        let target = route[(*leg).min(last)];
        let dist = pos.distance(target);
        let arrive = if *leg >= last {
            if parked {
                1e-6
            } else {
                0.5 * tol.position
            }
        } else {
            0.0
        };
        if *leg >= last && dist <= arrive {
            if parked {
                return Twist::default();
            }
            let err = angle_diff(goal.psi, self.perceived_pose().psi);
            let rate = (HEADING_GAIN * err)
                .abs()
                .max(MIN_TURN_RATE)
                .min(err.abs() / self.config.dt);
            return Twist {
                vx: 0.0,
                vy: 0.0,
                wz: rate.copysign(err),
            };
        }
        let bearing = (target.y - pos.y).atan2(target.x - pos.x);
        let err = angle_diff(bearing, self.truth.psi);
        let wz = (HEADING_GAIN * err).clamp(-self.config.max_wz, self.config.max_wz);
        if err.abs() > TURN_IN_PLACE && dist > tol.position {
            return Twist { vx: 0.0, vy: 0.0, wz };
        }
        let remaining = dist
            + route[(*leg).min(last)..]
                .windows(2)
                .map(|w| w[0].distance(w[1]))
                .sum::<f64>();
        let speed = (SPEED_GAIN * remaining).max(MIN_SPEED).min(dist / self.config.dt);
        // World-frame direction expressed in the body frame, scaled to fit both limits.
        let (s, c) = self.truth.psi.sin_cos();
        let (ux, uy) = ((target.x - pos.x) / dist, (target.y - pos.y) / dist);
        let (bx, by) = ((c * ux + s * uy) * speed, (-s * ux + c * uy) * speed);
        let scale = [1.0, self.config.max_vx / bx.abs(), self.config.max_vy / by.abs()]
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        Twist {
            vx: bx * scale,
            vy: by * scale,
            wz,
        }
    }

    /// `t x y psi perceived_x perceived_y perceived_psi` per line.
    pub fn trace_text(&self) -> String {
        let mut out = String::from("# t x y psi perceived_x perceived_y perceived_psi\n");
        for s in &self.trace {
            let _ = writeln!(
                out,
                "{:.2} {} {} {} {} {} {}",
                s.t, s.truth.x, s.truth.y, s.truth.psi, s.perceived.x, s.perceived.y, s.perceived.psi
            );
        }
        out
    }
}

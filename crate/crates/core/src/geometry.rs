//! Planar points, poses and the pixel/world mapping shared by every stage.

use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

/// A point in the world frame, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Direction from `self` towards `other`, or `None` when the points coincide.
    pub fn bearing_to(self, other: Point2) -> Option<f64> {
        let (dx, dy) = (other.x - self.x, other.y - self.y);
        if dx == 0.0 && dy == 0.0 {
            None
        } else {
            Some(dy.atan2(dx))
        }
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn normalize_angle(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let mut a = angle.rem_euclid(TAU);
    if a > PI {
        a -= TAU;
    }
    a
}

/// Smallest signed rotation taking `from` onto `to`, in `(-pi, pi]`.
pub fn angle_diff(to: f64, from: f64) -> f64 {
    normalize_angle(to - from)
}

/// Planar pose `(x, y, psi)` with `psi` kept in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, psi: f64) -> Self {
        Self {
            x,
            y,
            psi: normalize_angle(psi),
        }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

/// Arrival tolerance and per-attempt navigation timeout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    /// Meters.
    pub position: f64,
    /// Radians.
    pub yaw: f64,
    /// Seconds.
    pub timeout: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            position: 0.05,
            yaw: 0.08,
            timeout: 10.0,
        }
    }
}

impl Tolerance {
    pub fn is_valid(&self) -> bool {
        [self.position, self.yaw, self.timeout]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0)
    }
}

// Slack so that boundary cases such as a 0.05 m offset typed as decimals still count.
const TOLERANCE_SLACK: f64 = 1e-12;

/// Planar distance within `tol.position` and wrapped yaw error within `tol.yaw`, both inclusive.
pub fn at_destination(pose: Pose2D, goal: Pose2D, tol: &Tolerance) -> bool {
    pose.position().distance(goal.position()) <= tol.position + TOLERANCE_SLACK
        && angle_diff(goal.psi, pose.psi).abs() <= tol.yaw + TOLERANCE_SLACK
}

/// How a pixel `(row, col)` maps onto world `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AxisConvention {
    /// `x = R*row + o_x`, `y = R*col + o_y`. Literal reading of the reader's
    /// flattening step.
    #[default]
    RowCol,
    /// `x = R*col + o_x`, `y = R*row + o_y`, for maps authored with x along columns.
    ColRow,
}

impl AxisConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            AxisConvention::RowCol => "row-col",
            AxisConvention::ColRow => "col-row",
        }
    }
}

impl std::str::FromStr for AxisConvention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "row-col" => Ok(AxisConvention::RowCol),
            "col-row" => Ok(AxisConvention::ColRow),
            other => Err(format!(
                "unknown axis convention `{other}` (expected row-col or col-row)"
            )),
        }
    }
}

/// Pixel-to-world transform of a map: resolution, origin and axis convention.
///
/// Pixel `(i, j)` is centered on the world point `R * (i, j) + o` (or its
/// column-first counterpart), so the pixel covers half a cell on each side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldFrame {
    pub resolution: f64,
    pub origin: Point2,
    pub axis: AxisConvention,
}

impl WorldFrame {
    pub fn new(resolution: f64, origin: Point2, axis: AxisConvention) -> Self {
        Self {
            resolution,
            origin,
            axis,
        }
    }

    pub fn cell_to_world(&self, row: usize, col: usize) -> Point2 {
        let (a, b) = match self.axis {
            AxisConvention::RowCol => (row as f64, col as f64),
            AxisConvention::ColRow => (col as f64, row as f64),
        };
        Point2::new(self.resolution * a + self.origin.x, self.resolution * b + self.origin.y)
    }

    /// Continuous `(row, col)` coordinates of a world point.
    pub fn world_to_cell_f(&self, p: Point2) -> (f64, f64) {
        let a = (p.x - self.origin.x) / self.resolution;
        let b = (p.y - self.origin.y) / self.resolution;
        match self.axis {
            AxisConvention::RowCol => (a, b),
            AxisConvention::ColRow => (b, a),
        }
    }

    /// The cell containing `p`, if it lies inside a `height x width` map.
    pub fn world_to_cell(&self, p: Point2, height: usize, width: usize) -> Option<(usize, usize)> {
        let (r, c) = self.world_to_cell_f(p);
        let (r, c) = (r.round(), c.round());
        if r < 0.0 || c < 0.0 || !r.is_finite() || !c.is_finite() {
            return None;
        }
        let (r, c) = (r as usize, c as usize);
        (r < height && c < width).then_some((r, c))
    }
}

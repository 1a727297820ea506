//! Coverage path planning over the morphological skeleton of a 2D occupancy map.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`map_reader`] turns a tri-level occupancy map into an unordered set of
//!    waypoints lying on the skeleton of the navigable free space.
//! 2. [`waypoint_graph`] connects waypoints whose source pixels are 8-neighbors.
//! 3. [`path_planner`] orders the waypoints by hopping between nearest leaves and
//!    stitching the hops with shortest paths, then subsamples the result.
//! 4. [`fsm_navigator`] drives a robot through the waypoints with a finite state
//!    machine, using the kinematic stand-in in [`sim_world`].
//!
//! [`map_io`] handles PGM maps and their sidecar metadata, [`bench`] holds the
//! timing harness. Data-parallel inner loops go through [`par`], which falls
//! back to sequential execution when the `parallel` feature is disabled.

pub mod bench;
pub mod fsm_navigator;
pub mod geometry;
pub mod map_io;
pub mod map_reader;
pub mod par;
pub mod path_planner;
pub mod sim_world;
pub mod waypoint_graph;

pub use geometry::{at_destination, AxisConvention, Point2, Pose2D, Tolerance, WorldFrame};
pub use map_io::{MapMetadata, OccupancyGrid};
pub use par::Exec;

/// Cell value for occupied space.
pub const OCCUPIED: u8 = 0;
/// Cell value for unknown space.
pub const UNKNOWN: u8 = 128;
/// Cell value for free space.
pub const FREE: u8 = 255;

//! Occupancy map to waypoint set.
//!
//! The reader folds unknown space into obstacles, smooths and re-binarizes the
//! map, keeps the largest free region (holes filled), erodes it by a square
//! kernel for clearance and thins what is left to a one-pixel skeleton. Every
//! skeleton pixel becomes a waypoint in world coordinates.

mod contour;
mod filters;
mod thinning;

use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{AxisConvention, Point2, WorldFrame};
use crate::map_io::OccupancyGrid;
use crate::par::Exec;
use crate::{FREE, OCCUPIED};

pub use filters::gaussian_kernel;

#[derive(Debug, Error, PartialEq)]
pub enum ReaderError {
    #[error("invalid reader parameters: {0}")]
    InvalidParams(String),
    #[error("no free space left at stage `{stage}`")]
    EmptyMap { stage: Stage },
    #[error("skeleton is empty: free space vanished at stage `{stage}`")]
    EmptySkeleton { stage: Stage },
    #[error("waypoint file: {0}")]
    Format(String),
}

/// Intermediate rasters of the reader, in pipeline order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    Original,
    Adjusted,
    Fuzzied,
    Contour,
    Eroded,
    Skeleton,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Original,
        Stage::Adjusted,
        Stage::Fuzzied,
        Stage::Contour,
        Stage::Eroded,
        Stage::Skeleton,
    ];

    /// File stem used for stage dumps.
    pub fn name(self) -> &'static str {
        match self {
            Stage::Original => "original",
            Stage::Adjusted => "adjusted",
            Stage::Fuzzied => "fuzzied",
            Stage::Contour => "contour",
            Stage::Eroded => "eroded",
            Stage::Skeleton => "skeleton",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReaderParams {
    /// Gaussian standard deviation in pixels.
    pub sigma: u32,
    /// Cells strictly above this value are free after binarization.
    pub kappa: u8,
    /// Side length of the square erosion kernel, in pixels.
    pub erosion_k: usize,
    pub axis: AxisConvention,
    pub exec: Exec,
}

impl Default for ReaderParams {
    fn default() -> Self {
        Self {
            sigma: 3,
            kappa: 128,
            erosion_k: 10,
            axis: AxisConvention::RowCol,
            exec: Exec::default(),
        }
    }
}

impl ReaderParams {
    pub fn validate(&self) -> Result<(), ReaderError> {
        if self.sigma < 1 {
            return Err(ReaderError::InvalidParams("sigma must be at least 1".into()));
        }
        if self.erosion_k < 1 {
            return Err(ReaderError::InvalidParams("erosion kernel must be at least 1".into()));
        }
        Ok(())
    }
}

/// Unordered waypoints with the skeleton pixel each one came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaypointSet {
    pub points: Vec<Point2>,
    /// `(row, col)` of the source pixel, parallel to `points`.
    pub pixels: Vec<(usize, usize)>,
    pub frame: WorldFrame,
}

impl WaypointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Rebuilds a set from world points alone by inverting the frame transform.
    /// Each point must sit within `1e-6` pixels of a pixel center.
    pub fn from_points(points: Vec<Point2>, frame: WorldFrame) -> Result<Self, String> {
        let mut pixels = Vec::with_capacity(points.len());
        for (k, p) in points.iter().enumerate() {
            let (r, c) = frame.world_to_cell_f(*p);
            let (rr, cr) = (r.round(), c.round());
            if (r - rr).abs() > 1e-6 || (c - cr).abs() > 1e-6 || rr < 0.0 || cr < 0.0 {
                return Err(format!("waypoint {k} at {p} is not on the pixel lattice"));
            }
            pixels.push((rr as usize, cr as usize));
        }
        Ok(Self { points, pixels, frame })
    }

    /// Header `# waypoints count=.. resolution=.. origin_x=.. origin_y=.. axis=..`
    /// followed by one `x y` line per waypoint.
    pub fn to_text(&self) -> String {
        let f = &self.frame;
        let mut out = format!(
            "# waypoints count={} resolution={} origin_x={} origin_y={} axis={}\n",
            self.len(),
            f.resolution,
            f.origin.x,
            f.origin.y,
            f.axis.as_str()
        );
        for p in &self.points {
            let _ = writeln!(out, "{} {}", p.x, p.y);
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, ReaderError> {
        let err = ReaderError::Format;
        let mut lines = text.lines();
        let header = lines
            .next()
            .and_then(|l| l.strip_prefix("# waypoints"))
            .ok_or_else(|| err("missing '# waypoints' header".into()))?;
        let (mut count, mut res, mut ox, mut oy, mut axis) = (None, None, None, None, None);
        for token in header.split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| err(format!("bad header token {token:?}")))?;
            let num = || {
                value
                    .parse::<f64>()
                    .map_err(|_| err(format!("bad number {value:?} for {key}")))
            };
            match key {
                "count" => {
                    count = Some(
                        value
                            .parse::<usize>()
                            .map_err(|_| err(format!("bad count {value:?}")))?,
                    )
                }
                "resolution" => res = Some(num()?),
                "origin_x" => ox = Some(num()?),
                "origin_y" => oy = Some(num()?),
                "axis" => axis = Some(value.parse::<AxisConvention>().map_err(err)?),
                _ => {}
            }
        }
        let missing = |k: &str| err(format!("header lacks {k}"));
        let count = count.ok_or_else(|| missing("count"))?;
        let resolution = res.ok_or_else(|| missing("resolution"))?;
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(err(format!("resolution must be positive, got {resolution}")));
        }
        let origin = Point2::new(
            ox.ok_or_else(|| missing("origin_x"))?,
            oy.ok_or_else(|| missing("origin_y"))?,
        );
        let frame = WorldFrame::new(resolution, origin, axis.unwrap_or_default());
        let mut points = Vec::with_capacity(count);
        for (n, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace().map(str::parse::<f64>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(x)), Some(Ok(y)), None) => points.push(Point2::new(x, y)),
                _ => return Err(err(format!("line {}: expected `x y`, got {line:?}", n + 2))),
            }
        }
        if points.len() != count {
            return Err(err(format!("header says {count} waypoints, found {}", points.len())));
        }
        Self::from_points(points, frame).map_err(err)
    }
}

/// Sets every non-free cell to occupied.
pub fn fold_unknown(grid: &OccupancyGrid) -> OccupancyGrid {
    grid.with_cells(
        grid.cells
            .iter()
            .map(|&c| if c < FREE { OCCUPIED } else { FREE })
            .collect(),
    )
}

/// Separable Gaussian blur, kernel radius `3 * sigma`, borders replicated.
pub fn gaussian_smooth(grid: &OccupancyGrid, sigma: u32, exec: Exec) -> OccupancyGrid {
    filters::gaussian_smooth(grid, sigma, exec)
}

/// `cell > kappa` becomes free, everything else occupied.
pub fn binarize(grid: &OccupancyGrid, kappa: u8) -> OccupancyGrid {
    grid.with_cells(
        grid.cells
            .iter()
            .map(|&c| if c > kappa { FREE } else { OCCUPIED })
            .collect(),
    )
}

/// Keeps only the largest free region, with its interior holes filled.
pub fn fill_largest_contour(grid: &OccupancyGrid) -> Result<OccupancyGrid, ReaderError> {
    contour::fill_largest_region(grid).ok_or(ReaderError::EmptyMap { stage: Stage::Contour })
}

pub fn erode(grid: &OccupancyGrid, erosion_k: usize, exec: Exec) -> OccupancyGrid {
    filters::erode(grid, erosion_k, exec)
}

pub fn skeletonize(grid: &OccupancyGrid, exec: Exec) -> OccupancyGrid {
    thinning::zhang_suen(grid, exec)
}

/// One waypoint per free pixel, in raster order.
pub fn extract_waypoints(grid: &OccupancyGrid, axis: AxisConvention) -> WaypointSet {
    let frame = grid.frame(axis);
    let mut points = Vec::new();
    let mut pixels = Vec::new();
    for (idx, _) in grid.cells.iter().enumerate().filter(|(_, &c)| c == FREE) {
        let (r, c) = (idx / grid.width, idx % grid.width);
        pixels.push((r, c));
        points.push(frame.cell_to_world(r, c));
    }
    WaypointSet { points, pixels, frame }
}

/// Runs the full reader on a tri-level map.
pub fn read_map(grid: &OccupancyGrid, params: &ReaderParams) -> Result<WaypointSet, ReaderError> {
    read_map_staged(grid, params, |_, _| {})
}

/// Like [`read_map`], handing each intermediate raster to `on_stage` as soon
/// as it is produced.
pub fn read_map_staged<F>(
    grid: &OccupancyGrid,
    params: &ReaderParams,
    mut on_stage: F,
) -> Result<WaypointSet, ReaderError>
where
    F: FnMut(Stage, &OccupancyGrid),
{
    params.validate()?;
    on_stage(Stage::Original, grid);
    let adjusted = fold_unknown(grid);
    on_stage(Stage::Adjusted, &adjusted);
    let fuzzied = gaussian_smooth(&adjusted, params.sigma, params.exec);
    on_stage(Stage::Fuzzied, &fuzzied);
    let crisp = binarize(&fuzzied, params.kappa);
    let contour = fill_largest_contour(&crisp)?;
    on_stage(Stage::Contour, &contour);
    let eroded = erode(&contour, params.erosion_k, params.exec);
    on_stage(Stage::Eroded, &eroded);
    if !eroded.cells.contains(&FREE) {
        return Err(ReaderError::EmptySkeleton { stage: Stage::Eroded });
    }
    let skeleton = skeletonize(&eroded, params.exec);
    on_stage(Stage::Skeleton, &skeleton);
    Ok(extract_waypoints(&skeleton, params.axis))
}

//! Timing harness for the reader and the planner.
//!
//! Inputs are generated up front and only the pipeline call itself is timed,
//! so file I/O never enters a measurement.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::geometry::{AxisConvention, Point2, WorldFrame};
use crate::map_io::OccupancyGrid;
use crate::map_reader::{read_map, ReaderError, ReaderParams, WaypointSet};
use crate::path_planner::{plan, PlanError, PlannerParams};
use crate::sim_world::{generate_synthetic_map, MapShape, SimError};
use crate::waypoint_graph::WaypointGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    /// Pixels for the reader, waypoints for the planner.
    pub size: usize,
    pub iterations: usize,
    /// Seconds per call.
    pub mean: f64,
    /// Sample standard deviation in seconds, zero for a single iteration.
    pub stddev: f64,
}

/// Runs `f` once untimed, then `iterations` timed times.
pub fn time_iterations<T, F>(size: usize, iterations: usize, mut f: F) -> BenchRecord
where
    F: FnMut() -> T,
{
    let iterations = iterations.max(1);
    std::hint::black_box(f());
    let samples: Vec<f64> = (0..iterations)
        .map(|_| {
            let t0 = Instant::now();
            std::hint::black_box(f());
            t0.elapsed().as_secs_f64()
        })
        .collect();
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let stddev = if samples.len() > 1 {
        (samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    BenchRecord {
        size,
        iterations,
        mean,
        stddev,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Pearson correlation; zero when every `y` is equal.
    pub r: f64,
}

/// Ordinary least squares `y = slope * x + intercept`. `None` unless there
/// are at least two distinct `x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
        r: if syy > 0.0 { sxy / (sxx * syy).sqrt() } else { 0.0 },
    })
}

pub fn fit_records(records: &[BenchRecord]) -> Option<LinearFit> {
    let xs: Vec<f64> = records.iter().map(|r| r.size as f64).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.mean).collect();
    linear_fit(&xs, &ys)
}

/// Square L-room map used by the reader bench.
pub fn bench_map(side: usize, seed: u64) -> Result<OccupancyGrid, SimError> {
    generate_synthetic_map(MapShape::LRoom, side, side, 0.05, seed)
}

/// A comb-shaped skeleton of exactly `n` waypoints: a spine along row 0 with
/// teeth of `TOOTH` pixels hanging from every fourth column.
pub fn comb_waypoints(n: usize, resolution: f64) -> WaypointSet {
    const TOOTH: usize = 8;
    let frame = WorldFrame::new(resolution, Point2::default(), AxisConvention::RowCol);
    let mut pixels = Vec::with_capacity(n);
    let mut col = 0;
    'outer: while pixels.len() < n {
        pixels.push((0, col));
        if col % 4 == 2 {
            for row in 1..=TOOTH {
                if pixels.len() == n {
                    break 'outer;
                }
                pixels.push((row, col));
            }
        }
        col += 1;
    }
    let points = pixels.iter().map(|&(r, c)| frame.cell_to_world(r, c)).collect();
    WaypointSet { points, pixels, frame }
}

/// Times [`read_map`] on generated maps of the given side lengths.
pub fn bench_read_map(
    sides: &[usize],
    iterations: usize,
    params: &ReaderParams,
) -> Result<Vec<BenchRecord>, BenchError> {
    let mut out = Vec::with_capacity(sides.len());
    for &side in sides {
        let grid = bench_map(side, 0)?;
        read_map(&grid, params)?;
        out.push(time_iterations(grid.pixel_count(), iterations, || {
            read_map(&grid, params)
        }));
    }
    Ok(out)
}

/// Times graph construction plus [`plan`] on comb skeletons of the given
/// waypoint counts, starting at the spine's first pixel.
pub fn bench_plan(counts: &[usize], iterations: usize, spacing: f64) -> Result<Vec<BenchRecord>, BenchError> {
    let resolution = 0.1;
    let params = PlannerParams {
        waypoint_spacing: spacing,
        start_position: Point2::default(),
        all_components: false,
    };
    let mut out = Vec::with_capacity(counts.len());
    for &n in counts {
        let set = comb_waypoints(n, resolution);
        let run = || -> Result<usize, PlanError> {
            let graph = WaypointGraph::build(&set)?;
            Ok(plan(&graph, &params)?.full_path.len())
        };
        run()?;
        out.push(time_iterations(n, iterations, run));
    }
    Ok(out)
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Reader(#[from] ReaderError),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

/// `size iterations mean_s stddev_s` rows, then a slope line in `unit` per
/// size step when at least two sizes were measured.
pub fn format_table(title: &str, unit: &str, records: &[BenchRecord]) -> String {
    let mut out = format!(
        "# {title}\n{:>10} {:>10} {:>14} {:>14}\n",
        "size", "iterations", "mean_s", "stddev_s"
    );
    for r in records {
        let _ = writeln!(
            out,
            "{:>10} {:>10} {:>14.6e} {:>14.6e}",
            r.size, r.iterations, r.mean, r.stddev
        );
    }
    if let Some(fit) = fit_records(records) {
        let _ = writeln!(
            out,
            "slope {:.4} {unit} intercept {:.6e} s r {:.4}",
            fit.slope * 1e9,
            fit.intercept,
            fit.r
        );
    }
    out
}

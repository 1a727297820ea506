use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use skelnav::fsm_navigator::InterruptTrigger;
use skelnav::sim_world::MapShape;
use skelnav::{AxisConvention, Point2};

mod commands;

/// Skeleton-based coverage path planning: read a map, plan a path over its
/// skeleton and run a simulated mission along it.
#[derive(Debug, Parser)]
#[command(name = "skelnav", version)]
struct Cli {
    /// Print machine-readable JSON instead of text reports.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Turn an occupancy map into skeleton waypoints.
    ReadMap(ReadMapArgs),
    /// Order waypoints into a coverage path.
    Plan(PlanArgs),
    /// Run a mission along a path in the kinematic simulator.
    Simulate(SimulateArgs),
    /// Time the reader and the planner over a range of input sizes.
    Bench(BenchArgs),
    /// Write a synthetic occupancy map.
    GenMap(GenMapArgs),
    /// read-map, plan and simulate in one go.
    RunAll(RunAllArgs),
}

#[derive(Debug, Args)]
struct MapArgs {
    /// PGM (P5) occupancy image.
    #[arg(long)]
    map: PathBuf,
    /// `key = value` sidecar with resolution and origin.
    #[arg(long)]
    meta: PathBuf,
}

#[derive(Debug, Args)]
struct ReaderArgs {
    /// Gaussian standard deviation, pixels.
    #[arg(long, default_value_t = 3)]
    sigma: u32,
    /// Binarization threshold.
    #[arg(long, default_value_t = 128)]
    kappa: u8,
    /// Erosion kernel side, pixels.
    #[arg(long, default_value_t = 10)]
    erode: usize,
    /// Pixel to world mapping: row-col (x along rows) or col-row.
    #[arg(long, default_value = "row-col")]
    axis: AxisConvention,
    /// Directory for the six stage images.
    #[arg(long)]
    stages_out: Option<PathBuf>,
    /// Run the raster filters on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Args)]
struct PlannerArgs {
    /// Distance between visited waypoints, meters.
    #[arg(long, default_value_t = 1.0)]
    spacing: f64,
    /// Chain every skeleton component instead of only the starting one.
    #[arg(long)]
    all_components: bool,
}

#[derive(Debug, Args)]
struct SimArgs {
    /// Position tolerance, meters.
    #[arg(long, default_value_t = 0.05)]
    tol_pos: f64,
    /// Heading tolerance, radians.
    #[arg(long, default_value_t = 0.08)]
    tol_yaw: f64,
    /// Seconds allowed per navigation attempt.
    #[arg(long, default_value_t = 10.0)]
    timeout: f64,
    /// Heading drift rate, rad per sqrt(s).
    #[arg(long, default_value_t = 0.0)]
    drift: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Operator takeovers: a mission time in seconds (`12.5`) or a one-based
    /// waypoint number (`wp:36`). Repeat or separate with commas.
    #[arg(long, value_delimiter = ',', value_parser = parse_interrupt)]
    interrupt_at: Vec<InterruptTrigger>,
    /// Navigation attempts per waypoint.
    #[arg(long, default_value_t = 5)]
    max_attempts: usize,
    /// Scan at each waypoint with this many headings (two gestures each).
    #[arg(long)]
    scan: Option<usize>,
    /// Abort the mission after this many seconds.
    #[arg(long)]
    deadline: Option<f64>,
    /// Clearance kept from obstacles, meters.
    #[arg(long, default_value_t = 0.35)]
    robot_radius: f64,
}

#[derive(Debug, Args)]
struct ReadMapArgs {
    #[command(flatten)]
    map: MapArgs,
    #[command(flatten)]
    reader: ReaderArgs,
    /// Waypoint file to write.
    #[arg(long, default_value = "waypoints.txt")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PlanArgs {
    /// Waypoint file from read-map.
    #[arg(long)]
    waypoints: PathBuf,
    /// Robot start position `x,y`, meters.
    #[arg(long, value_parser = parse_xy, allow_hyphen_values = true)]
    start: Point2,
    #[command(flatten)]
    planner: PlannerArgs,
    /// Path file to write.
    #[arg(long, default_value = "path.txt")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    map: MapArgs,
    /// Path file from plan.
    #[arg(long)]
    path: PathBuf,
    /// Start position `x,y`; defaults to the first path point.
    #[arg(long, value_parser = parse_xy, allow_hyphen_values = true)]
    start: Option<Point2>,
    #[arg(long, default_value = "row-col")]
    axis: AxisConvention,
    #[command(flatten)]
    sim: SimArgs,
    /// Run log to write.
    #[arg(long, default_value = "run_log.txt")]
    log: PathBuf,
    /// Report table to write.
    #[arg(long, default_value = "report.txt")]
    report: PathBuf,
    /// Pose trace (truth and perceived, every 0.1 s) to write.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum BenchTarget {
    Read,
    Plan,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Map side lengths for the reader bench.
    #[arg(long, value_delimiter = ',', default_values_t = [100, 200, 400, 800])]
    sizes: Vec<usize>,
    /// Waypoint counts for the planner bench.
    #[arg(long, value_delimiter = ',', default_values_t = [10, 100, 1000, 10000])]
    counts: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    read_iters: usize,
    #[arg(long, default_value_t = 500)]
    plan_iters: usize,
    #[arg(long, default_value_t = 1.0)]
    spacing: f64,
    /// Run only one of the two benches.
    #[arg(long, value_enum)]
    only: Option<BenchTarget>,
    /// Time the reader with its filters on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Args)]
struct GenMapArgs {
    /// l-room, corridor[:W], branching[:W], annulus or rooms.
    #[arg(long, default_value = "l-room")]
    shape: MapShape,
    #[arg(long, default_value_t = 200)]
    width: usize,
    #[arg(long, default_value_t = 200)]
    height: usize,
    /// Meters per pixel.
    #[arg(long, default_value_t = 0.1)]
    resolution: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output stem; writes `<out>.pgm` and `<out>.meta`.
    #[arg(long, default_value = "map")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RunAllArgs {
    #[command(flatten)]
    map: MapArgs,
    #[command(flatten)]
    reader: ReaderArgs,
    #[command(flatten)]
    planner: PlannerArgs,
    /// Planner start `x,y`; defaults to the first waypoint read.
    #[arg(long, value_parser = parse_xy, allow_hyphen_values = true)]
    start: Option<Point2>,
    #[command(flatten)]
    sim: SimArgs,
    /// Directory for every artifact.
    #[arg(long)]
    out_dir: PathBuf,
}

fn parse_xy(s: &str) -> Result<Point2, String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected x,y, got {s:?}"))?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    let p = Point2::new(num(x)?, num(y)?);
    if !(p.x.is_finite() && p.y.is_finite()) {
        return Err(format!("non-finite position {s:?}"));
    }
    Ok(p)
}

fn parse_interrupt(s: &str) -> Result<InterruptTrigger, String> {
    if let Some(n) = s.strip_prefix("wp:") {
        let n: usize = n.parse().map_err(|e| format!("waypoint number {n:?}: {e}"))?;
        if n == 0 {
            return Err("waypoint numbers start at 1".into());
        }
        return Ok(InterruptTrigger::AtWaypoint(n - 1));
    }
    let t: f64 = s.parse().map_err(|e| format!("interrupt time {s:?}: {e}"))?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(format!("interrupt time must be >= 0, got {t}"));
    }
    Ok(InterruptTrigger::AtTime(t))
}

fn run(cli: Cli) -> Result<()> {
    let json = cli.json;
    match cli.command {
        Command::ReadMap(a) => commands::read_map(a, json),
        Command::Plan(a) => commands::plan(a, json),
        Command::Simulate(a) => commands::simulate(a, json),
        Command::Bench(a) => commands::bench(a, json),
        Command::GenMap(a) => commands::gen_map(a, json),
        Command::RunAll(a) => commands::run_all(a, json),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(commands::exit_code(&err))
        }
    }
}

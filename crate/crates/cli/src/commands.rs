use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use skelnav::bench::{bench_plan, bench_read_map, fit_records, format_table, BenchRecord, LinearFit};
use skelnav::fsm_navigator::{
    mission_metrics, Mission, MissionConfig, MissionOutcome, MissionReport, RunLog, ScanParams, WaypointVerdict,
};
use skelnav::map_io::{load_map, save_map, save_stage, MapIoError};
use skelnav::map_reader::{read_map_staged, ReaderError, ReaderParams, WaypointSet};
use skelnav::path_planner::{plan as plan_path, PathFile, PlanError, PlannedPath, PlannerParams};
use skelnav::sim_world::{generate_synthetic_map, SimConfig, SimError, SimWorld};
use skelnav::waypoint_graph::{GraphError, WaypointGraph};
use skelnav::{AxisConvention, Exec, OccupancyGrid, Point2, Pose2D, Tolerance};

use crate::{
    BenchArgs, BenchTarget, GenMapArgs, PlanArgs, PlannerArgs, ReadMapArgs, ReaderArgs, RunAllArgs, SimArgs,
    SimulateArgs,
};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_EMPTY_MAP: u8 = 3;
pub const EXIT_MAP_IO: u8 = 4;
pub const EXIT_PLANNER: u8 = 5;
pub const EXIT_SIMULATOR: u8 = 6;

/// Failure that is not one of the library error types but still needs a
/// specific exit code.
#[derive(Debug)]
struct Fault {
    code: u8,
    message: String,
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Fault {}

fn fault(code: u8, message: impl Into<String>) -> anyhow::Error {
    Fault {
        code,
        message: message.into(),
    }
    .into()
}

pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(f) = cause.downcast_ref::<Fault>() {
            return f.code;
        }
        if let Some(e) = cause.downcast_ref::<ReaderError>() {
            return match e {
                ReaderError::EmptyMap { .. } | ReaderError::EmptySkeleton { .. } => EXIT_EMPTY_MAP,
                ReaderError::InvalidParams(_) => EXIT_USAGE,
                ReaderError::Format(_) => EXIT_MAP_IO,
            };
        }
        if cause.is::<MapIoError>() || cause.is::<std::io::Error>() {
            return EXIT_MAP_IO;
        }
        if cause.is::<PlanError>() || cause.is::<GraphError>() {
            return EXIT_PLANNER;
        }
        if cause.is::<SimError>() {
            return EXIT_SIMULATOR;
        }
    }
    1
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn print_json(value: &impl Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn reader_params(a: &ReaderArgs) -> ReaderParams {
    ReaderParams {
        sigma: a.sigma,
        kappa: a.kappa,
        erosion_k: a.erode,
        axis: a.axis,
        exec: if a.sequential {
            Exec::Sequential
        } else {
            Exec::default()
        },
    }
}

fn load(map: &Path, meta: &Path) -> Result<OccupancyGrid> {
    let (grid, _) = load_map(map, meta).with_context(|| format!("loading map {}", map.display()))?;
    Ok(grid)
}

/// Runs the reader, dumping stages to `stages_out` when given.
fn run_reader(grid: &OccupancyGrid, a: &ReaderArgs, stages_out: Option<&Path>) -> Result<(WaypointSet, Vec<PathBuf>)> {
    let mut dumps = Vec::new();
    let mut dump_err = None;
    let set = read_map_staged(grid, &reader_params(a), |stage, g| {
        if let (Some(dir), None) = (stages_out, &dump_err) {
            match save_stage(g, stage.name(), dir) {
                Ok(p) => dumps.push(p),
                Err(e) => dump_err = Some(e),
            }
        }
    })
    .context("map reader failed")?;
    if let Some(e) = dump_err {
        return Err(anyhow::Error::new(e).context("writing stage dump"));
    }
    Ok((set, dumps))
}

#[derive(Serialize)]
struct ReadSummary {
    waypoints: usize,
    waypoint_file: PathBuf,
    stages: Vec<PathBuf>,
}

pub fn read_map(a: ReadMapArgs, json: bool) -> Result<()> {
    let grid = load(&a.map.map, &a.map.meta)?;
    let (set, stages) = run_reader(&grid, &a.reader, a.reader.stages_out.as_deref())?;
    write(&a.out, set.to_text())?;
    let summary = ReadSummary {
        waypoints: set.len(),
        waypoint_file: a.out,
        stages,
    };
    if json {
        print_json(&summary)
    } else {
        println!("waypoints {}", summary.waypoints);
        Ok(())
    }
}

#[derive(Serialize)]
struct PlanSummary {
    full_path: usize,
    spliced_path: usize,
    stride: usize,
    total_length: f64,
    mean_spacing: Option<f64>,
    coverage: skelnav::path_planner::Coverage,
}

fn run_planner(set: &WaypointSet, start: Point2, a: &PlannerArgs) -> Result<(PlannedPath, PathFile)> {
    if set.is_empty() {
        return Err(fault(EXIT_PLANNER, "waypoint set is empty, nothing to plan"));
    }
    let graph = WaypointGraph::build(set).context("building waypoint graph")?;
    let params = PlannerParams {
        waypoint_spacing: a.spacing,
        start_position: start,
        all_components: a.all_components,
    };
    let path = plan_path(&graph, &params).context("planning")?;
    let cov = &path.coverage;
    if cov.components_total > 1 {
        let left: usize = cov.unplanned_components.iter().map(|c| c.vertices).sum();
        if left > 0 {
            eprintln!(
                "warning: skeleton has {} components; {} waypoints in {} of them are not on the path (see --all-components)",
                cov.components_total,
                left,
                cov.unplanned_components.len()
            );
        } else {
            eprintln!(
                "warning: skeleton has {} components, chained by straight hops",
                cov.components_total
            );
        }
    }
    let file = PathFile::new(&path, &params, graph.resolution());
    Ok((path, file))
}

fn plan_summary(path: &PlannedPath) -> PlanSummary {
    let m = path.metrics();
    PlanSummary {
        full_path: path.full_path.len(),
        spliced_path: path.spliced_path.len(),
        stride: path.stride,
        total_length: m.total_length,
        mean_spacing: m.mean_spacing,
        coverage: path.coverage.clone(),
    }
}

fn print_plan(s: &PlanSummary) {
    println!("full_path {}", s.full_path);
    println!("spliced_path {}", s.spliced_path);
    println!("stride {}", s.stride);
    println!("total_length {:.3}", s.total_length);
}

pub fn plan(a: PlanArgs, json: bool) -> Result<()> {
    let set = WaypointSet::parse(&read(&a.waypoints)?).with_context(|| format!("parsing {}", a.waypoints.display()))?;
    let (path, file) = run_planner(&set, a.start, &a.planner)?;
    write(&a.out, file.to_text())?;
    let s = plan_summary(&path);
    if json {
        print_json(&s)
    } else {
        print_plan(&s);
        Ok(())
    }
}

fn mission_config(a: &SimArgs) -> Result<MissionConfig> {
    let tolerance = Tolerance {
        position: a.tol_pos,
        yaw: a.tol_yaw,
        timeout: a.timeout,
    };
    if !tolerance.is_valid() {
        return Err(fault(EXIT_USAGE, "tolerances and timeout must be positive and finite"));
    }
    if a.max_attempts == 0 {
        return Err(fault(EXIT_USAGE, "--max-attempts must be at least 1"));
    }
    let scan = a.scan.map(|orientations| ScanParams {
        orientations,
        ..ScanParams::default()
    });
    if let Some(s) = &scan {
        s.validate().map_err(|m| fault(EXIT_USAGE, m))?;
    }
    Ok(MissionConfig {
        tolerance,
        max_attempts: a.max_attempts,
        scan,
        deadline: a.deadline,
        ..MissionConfig::default()
    })
}

#[derive(Serialize)]
struct SimSummary {
    report: MissionReport,
    outcome: MissionOutcome,
    verdicts: Vec<WaypointVerdict>,
    heading_bias: f64,
}

struct SimRun {
    log: RunLog,
    world: SimWorld,
}

fn run_simulation(
    grid: OccupancyGrid,
    axis: AxisConvention,
    points: &[Point2],
    start: Point2,
    a: &SimArgs,
    trace: bool,
) -> Result<SimRun> {
    let config = SimConfig {
        drift_rate: a.drift,
        seed: a.seed,
        robot_radius: a.robot_radius,
        ..SimConfig::default()
    };
    let mission = mission_config(a)?;
    let mut world =
        SimWorld::new(grid, axis, config, Pose2D::new(start.x, start.y, 0.0)).context("starting simulator")?;
    if trace {
        world.enable_trace(10);
    }
    let log = Mission::new(mission)
        .with_interrupts(a.interrupt_at.iter().copied())
        .run(points, &mut world);
    Ok(SimRun { log, world })
}

/// Writes log, report and trace; fails with the simulator exit code if the
/// mission was aborted, after the partial log is on disk.
fn finish_simulation(
    run: &SimRun,
    log_path: &Path,
    report_path: &Path,
    trace_path: Option<&Path>,
    json: bool,
) -> Result<()> {
    let report = mission_metrics(&run.log);
    write(log_path, run.log.to_text())?;
    let table = MissionReport::table(&[("1".to_string(), report.clone())]);
    write(report_path, &table)?;
    if let Some(p) = trace_path {
        write(p, run.world.trace_text())?;
    }
    if json {
        print_json(&SimSummary {
            report,
            outcome: run.log.outcome.clone(),
            verdicts: run.log.verdicts.clone(),
            heading_bias: run.world.heading_bias(),
        })?;
    } else {
        print!("{table}");
    }
    match &run.log.outcome {
        MissionOutcome::Completed => Ok(()),
        MissionOutcome::Aborted { reason } => Err(fault(
            EXIT_SIMULATOR,
            format!("mission aborted: {reason}; partial log in {}", log_path.display()),
        )),
    }
}

pub fn simulate(a: SimulateArgs, json: bool) -> Result<()> {
    let grid = load(&a.map.map, &a.map.meta)?;
    let path = PathFile::parse(&read(&a.path)?).with_context(|| format!("parsing {}", a.path.display()))?;
    let start = a.start.or(path.points.first().copied()).unwrap_or(path.start);
    let run = run_simulation(grid, a.axis, &path.points, start, &a.sim, a.trace.is_some())?;
    finish_simulation(&run, &a.log, &a.report, a.trace.as_deref(), json)
}

#[derive(Serialize)]
struct BenchSection {
    records: Vec<BenchRecord>,
    fit: Option<LinearFit>,
}

#[derive(Serialize)]
struct BenchSummary {
    read_map: Option<BenchSection>,
    plan: Option<BenchSection>,
}

pub fn bench(a: BenchArgs, json: bool) -> Result<()> {
    let want = |t| a.only.is_none_or(|o| o == t);
    let mut summary = BenchSummary {
        read_map: None,
        plan: None,
    };
    if want(BenchTarget::Read) && !a.sizes.is_empty() {
        let params = ReaderParams {
            exec: if a.sequential {
                Exec::Sequential
            } else {
                Exec::default()
            },
            ..ReaderParams::default()
        };
        let records = bench_read_map(&a.sizes, a.read_iters, &params).context("reader bench")?;
        if !json {
            print!("{}", format_table("read_map (size = pixels)", "ns/pixel", &records));
        }
        summary.read_map = Some(BenchSection {
            fit: fit_records(&records),
            records,
        });
    }
    if want(BenchTarget::Plan) && !a.counts.is_empty() {
        let records = bench_plan(&a.counts, a.plan_iters, a.spacing).context("planner bench")?;
        if !json {
            print!("{}", format_table("plan (size = waypoints)", "ns/waypoint", &records));
        }
        summary.plan = Some(BenchSection {
            fit: fit_records(&records),
            records,
        });
    }
    if json {
        print_json(&summary)?;
    }
    Ok(())
}

pub fn gen_map(a: GenMapArgs, json: bool) -> Result<()> {
    let grid = generate_synthetic_map(a.shape, a.width, a.height, a.resolution, a.seed)?;
    let image = a.out.with_extension("pgm");
    let meta = a.out.with_extension("meta");
    if let Some(dir) = image.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let name = a.out.file_stem().and_then(|s| s.to_str()).unwrap_or("map");
    save_map(&grid, name, &image, &meta)?;
    if json {
        print_json(&serde_json::json!({ "map": image, "meta": meta, "width": a.width, "height": a.height }))
    } else {
        println!("{}", image.display());
        println!("{}", meta.display());
        Ok(())
    }
}

pub fn run_all(a: RunAllArgs, json: bool) -> Result<()> {
    let out = &a.out_dir;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let grid = load(&a.map.map, &a.map.meta)?;
    let stages_dir = a.reader.stages_out.clone().unwrap_or_else(|| out.join("stages"));
    let (set, _) = run_reader(&grid, &a.reader, Some(&stages_dir))?;
    write(&out.join("waypoints.txt"), set.to_text())?;

    let start = a
        .start
        .or(set.points.first().copied())
        .ok_or_else(|| fault(EXIT_PLANNER, "waypoint set is empty, nothing to plan"))?;
    let (path, file) = run_planner(&set, start, &a.planner)?;
    write(&out.join("path.txt"), file.to_text())?;
    let plan = plan_summary(&path);
    if !json {
        println!("waypoints {}", set.len());
        print_plan(&plan);
    }

    let sim_start = file.points.first().copied().unwrap_or(start);
    let run = run_simulation(grid, a.reader.axis, &file.points, sim_start, &a.sim, true)?;
    finish_simulation(
        &run,
        &out.join("run_log.txt"),
        &out.join("report.txt"),
        Some(&out.join("trace.txt")),
        json,
    )
}

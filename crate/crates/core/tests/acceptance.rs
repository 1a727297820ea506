//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fails.

use std::collections::{HashMap, HashSet};
use std::f64::consts::{FRAC_PI_2, PI};
use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skelnav::bench::{bench_plan, bench_read_map, comb_waypoints, fit_records, time_iterations};
use skelnav::fsm_navigator::{
    mission_metrics, scan_at_waypoint, transition, InterruptTrigger, Mission, MissionConfig, NavEvent, NavState,
    RunLog, ScanParams,
};
use skelnav::geometry::{angle_diff, normalize_angle};
use skelnav::map_io::{load_stage, save_stage, stage_metadata_path};
use skelnav::map_reader::{binarize, fold_unknown, read_map, read_map_staged, ReaderParams, Stage, WaypointSet};
use skelnav::path_planner::{plan, PlannedPath, PlannerParams};
use skelnav::sim_world::{
    generate_synthetic_map, project_base_footprint, velocity_to_joystick, BodyTransform, MapShape, SimConfig, SimWorld,
    STICK_LIMIT,
};
use skelnav::waypoint_graph::WaypointGraph;
use skelnav::{AxisConvention, OccupancyGrid, Point2, Pose2D, Tolerance, WorldFrame, FREE, OCCUPIED};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {{
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    }};
}

// ---------------------------------------------------------------- helpers

fn free_set(g: &OccupancyGrid) -> Vec<bool> {
    g.cells.iter().map(|&c| c == FREE).collect()
}

fn bi_level(g: &OccupancyGrid) -> bool {
    g.cells.iter().all(|&c| c == FREE || c == OCCUPIED)
}

/// Number of components of `mask` under 8- or 4-connectivity.
fn components(mask: &[bool], w: usize, h: usize, eight: bool) -> usize {
    let mut seen = vec![false; mask.len()];
    let mut count = 0;
    for s in 0..mask.len() {
        if !mask[s] || seen[s] {
            continue;
        }
        count += 1;
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(p) = stack.pop() {
            let (r, c) = ((p / w) as isize, (p % w) as isize);
            for dr in -1..=1isize {
                for dc in -1..=1isize {
                    if (dr == 0 && dc == 0) || (!eight && dr != 0 && dc != 0) {
                        continue;
                    }
                    let (rr, cc) = (r + dr, c + dc);
                    if rr < 0 || cc < 0 || rr >= h as isize || cc >= w as isize {
                        continue;
                    }
                    let q = rr as usize * w + cc as usize;
                    if mask[q] && !seen[q] {
                        seen[q] = true;
                        stack.push(q);
                    }
                }
            }
        }
    }
    count
}

/// True when every non-free cell connects to the map border through
/// 4-connected non-free cells, i.e. the free region has no holes.
fn hole_free(g: &OccupancyGrid) -> bool {
    let (w, h) = (g.width + 2, g.height + 2);
    let mut mask = vec![true; w * h];
    for r in 0..g.height {
        for c in 0..g.width {
            mask[(r + 1) * w + c + 1] = g.get(r, c) != FREE;
        }
    }
    components(&mask, w, h, false) == 1
}

fn erosion_oracle(g: &OccupancyGrid, k: usize) -> Vec<bool> {
    let a = k / 2;
    let mut out = vec![false; g.cells.len()];
    for i in 0..g.height {
        for j in 0..g.width {
            if i < a || j < a || i - a + k > g.height || j - a + k > g.width {
                continue;
            }
            out[i * g.width + j] = (i - a..i - a + k).all(|r| (j - a..j - a + k).all(|c| g.get(r, c) == FREE));
        }
    }
    out
}

fn open_room(h: usize, w: usize, res: f64) -> OccupancyGrid {
    let mut g = OccupancyGrid::new(w, h, res, Point2::default(), vec![FREE; w * h]).unwrap();
    for r in 0..h {
        g.set(r, 0, OCCUPIED);
        g.set(r, w - 1, OCCUPIED);
    }
    for c in 0..w {
        g.set(0, c, OCCUPIED);
        g.set(h - 1, c, OCCUPIED);
    }
    g
}

fn pipeline(grid: &OccupancyGrid, spacing: f64) -> Result<(WaypointSet, PlannedPath), String> {
    let set = read_map(grid, &ReaderParams::default()).map_err(|e| e.to_string())?;
    let graph = WaypointGraph::build(&set).map_err(|e| e.to_string())?;
    let params = PlannerParams {
        waypoint_spacing: spacing,
        start_position: set.points[0],
        all_components: false,
    };
    let path = plan(&graph, &params).map_err(|e| e.to_string())?;
    Ok((set, path))
}

fn mission(grid: &OccupancyGrid, path: &[Point2], drift: f64, seed: u64) -> Result<(RunLog, SimWorld), String> {
    let cfg = SimConfig {
        drift_rate: drift,
        seed,
        ..SimConfig::default()
    };
    let p0 = path[0];
    let mut world = SimWorld::new(grid.clone(), AxisConvention::RowCol, cfg, Pose2D::new(p0.x, p0.y, 0.0))
        .map_err(|e| e.to_string())?;
    world.enable_trace(10);
    let log = Mission::new(MissionConfig::default()).run(path, &mut world);
    Ok((log, world))
}

// ---------------------------------------------------------------- 1

fn pipeline_fidelity() -> Outcome {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let params = ReaderParams::default();
    let mut maps = vec![generate_synthetic_map(MapShape::LRoom, 200, 200, 0.1, 0).map_err(|e| e.to_string())?];
    for seed in 1..4 {
        maps.push(generate_synthetic_map(MapShape::LRoom, 200, 200, 0.1, seed).map_err(|e| e.to_string())?);
    }
    for (m, grid) in maps.iter().enumerate() {
        let out = dir.path().join(m.to_string());
        let mut stages: HashMap<Stage, OccupancyGrid> = HashMap::new();
        read_map_staged(grid, &params, |s, g| {
            save_stage(g, s.name(), &out).unwrap();
            stages.insert(s, g.clone());
        })
        .map_err(|e| e.to_string())?;
        for s in Stage::ALL {
            let img = out.join(format!("{}.pgm", s.name()));
            let (loaded, _) = load_stage(&img, &stage_metadata_path(&out, s.name())).map_err(|e| e.to_string())?;
            check!(loaded == stages[&s], "stage {s} dump does not round-trip");
        }
        let (w, h) = (grid.width, grid.height);
        let original = &stages[&Stage::Original];
        let adjusted = &stages[&Stage::Adjusted];
        let fuzzied = &stages[&Stage::Fuzzied];
        let contour = &stages[&Stage::Contour];
        let eroded = &stages[&Stage::Eroded];
        let skeleton = &stages[&Stage::Skeleton];
        check!(original == grid, "original stage differs from input");

        check!(bi_level(adjusted), "adjusted not bi-level");
        check!(&fold_unknown(adjusted) == adjusted, "fold not idempotent");
        check!(
            adjusted
                .cells
                .iter()
                .zip(&grid.cells)
                .all(|(&a, &o)| (a == FREE) == (o == FREE)),
            "fold changed free space"
        );

        let crisp = binarize(fuzzied, params.kappa);
        check!(bi_level(&crisp), "binarize not bi-level");

        check!(bi_level(contour), "contour not bi-level");
        let cfree = free_set(contour);
        check!(
            components(&cfree, w, h, true) == 1,
            "contour free space is not one component"
        );
        check!(hole_free(contour), "contour has unfilled holes");
        let crisp_free = free_set(&crisp);
        let kept = cfree.iter().zip(&crisp_free).filter(|(&c, &b)| c && b).count();
        let largest = crisp_free.iter().filter(|&&b| b).count();
        check!(kept * 2 > largest, "contour does not cover the main free region");

        let efree = free_set(eroded);
        check!(
            efree.iter().zip(&cfree).all(|(&e, &c)| !e || c),
            "eroded not within contour"
        );
        check!(
            efree == erosion_oracle(contour, params.erosion_k),
            "erosion differs from window oracle"
        );

        let sfree = free_set(skeleton);
        check!(sfree.iter().any(|&s| s), "skeleton empty");
        check!(
            sfree.iter().zip(&efree).all(|(&s, &e)| !s || e),
            "skeleton not within eroded"
        );
        check!(
            components(&sfree, w, h, true) == components(&efree, w, h, true),
            "skeleton changed the component count"
        );
        for r in 0..h - 1 {
            for c in 0..w - 1 {
                let block = [(r, c), (r + 1, c), (r, c + 1), (r + 1, c + 1)];
                check!(
                    !block.iter().all(|&(i, j)| sfree[i * w + j]),
                    "skeleton has a 2x2 block at ({r}, {c})"
                );
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    check!(secs < 5.0, "suite took {secs:.2} s");
    Ok(format!("{} L-room maps, six stages each, {secs:.2} s", maps.len()))
}

// ---------------------------------------------------------------- 2

/// Random pixel tree: each new pixel touches exactly one existing pixel.
fn random_tree(rng: &mut ChaCha8Rng, n: usize) -> WaypointSet {
    let mut pixels = vec![(20usize, 20usize)];
    let mut taken: HashSet<(usize, usize)> = pixels.iter().copied().collect();
    let mut tries = 0;
    while pixels.len() < n && tries < 20_000 {
        tries += 1;
        let (r, c) = pixels[rng.random_range(0..pixels.len())];
        let (dr, dc) = (
            rng.random_range(-1..=1i64) as isize,
            rng.random_range(-1..=1i64) as isize,
        );
        let q = ((r as isize + dr) as usize, (c as isize + dc) as usize);
        if taken.contains(&q) || q.0 == 0 || q.1 == 0 || q.0 > 40 || q.1 > 40 {
            continue;
        }
        let touching = (-1..=1isize)
            .flat_map(|a| (-1..=1isize).map(move |b| (a, b)))
            .filter(|&(a, b)| (a, b) != (0, 0))
            .filter(|&(a, b)| taken.contains(&((q.0 as isize + a) as usize, (q.1 as isize + b) as usize)))
            .count();
        if touching == 1 {
            taken.insert(q);
            pixels.push(q);
        }
    }
    let frame = WorldFrame::new(0.1, Point2::default(), AxisConvention::RowCol);
    let points = pixels.iter().map(|&(r, c)| frame.cell_to_world(r, c)).collect();
    WaypointSet { points, pixels, frame }
}

fn pixel_adjacency(set: &WaypointSet) -> Vec<Vec<usize>> {
    let at: HashMap<(usize, usize), usize> = set.pixels.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    set.pixels
        .iter()
        .map(|&(r, c)| {
            let mut v: Vec<usize> = (-1..=1isize)
                .flat_map(|a| (-1..=1isize).map(move |b| (a, b)))
                .filter(|&(a, b)| (a, b) != (0, 0))
                .filter_map(|(a, b)| at.get(&((r as isize + a) as usize, (c as isize + b) as usize)).copied())
                .collect();
            v.sort_unstable();
            v
        })
        .collect()
}

/// Tree path from `s` to `t` by depth-first search.
fn dfs_path(adj: &[Vec<usize>], s: usize, t: usize) -> Vec<usize> {
    let mut parent = vec![usize::MAX; adj.len()];
    parent[s] = s;
    let mut stack = vec![s];
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if parent[v] == usize::MAX {
                parent[v] = u;
                stack.push(v);
            }
        }
    }
    let mut path = vec![t];
    while *path.last().unwrap() != s {
        path.push(parent[*path.last().unwrap()]);
    }
    path.reverse();
    path
}

fn closer(points: &[Point2], from: Point2, a: usize, b: usize) -> bool {
    let (da, db) = (from.distance(points[a]), from.distance(points[b]));
    da < db || (da == db && a < b)
}

/// Every ordering of `leaves` in which each leaf is the nearest remaining one.
fn greedy_orders(points: &[Point2], leaves: &[usize], start: Point2) -> Vec<Vec<usize>> {
    fn permute(k: usize, v: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == v.len() {
            out.push(v.clone());
            return;
        }
        for i in k..v.len() {
            v.swap(k, i);
            permute(k + 1, v, out);
            v.swap(k, i);
        }
    }
    let mut all = Vec::new();
    permute(0, &mut leaves.to_vec(), &mut all);
    all.into_iter()
        .filter(|order| {
            order.iter().enumerate().all(|(i, &leaf)| {
                let from = if i == 0 { start } else { points[order[i - 1]] };
                order[i + 1..].iter().all(|&other| closer(points, from, leaf, other))
            })
        })
        .collect()
}

fn coverage_on_trees() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut permutation_checked = 0;
    for case in 0..200 {
        let n = rng.random_range(1..=50);
        let set = random_tree(&mut rng, n);
        let start = Point2::new(rng.random_range(-1.0..5.0), rng.random_range(-1.0..5.0));
        let graph = WaypointGraph::build(&set).map_err(|e| e.to_string())?;
        let path = plan(
            &graph,
            &PlannerParams {
                waypoint_spacing: 0.1,
                start_position: start,
                all_components: false,
            },
        )
        .map_err(|e| e.to_string())?;
        let adj = pixel_adjacency(&set);
        let edges: usize = adj.iter().map(Vec::len).sum::<usize>() / 2;
        check!(edges + 1 == set.len(), "case {case}: generator produced a cycle");
        let leaves: Vec<usize> = (0..set.len()).filter(|&i| adj[i].len() <= 1).collect();

        let fp = &path.full_path;
        let unique: HashSet<usize> = fp.iter().copied().collect();
        check!(unique.len() == fp.len(), "case {case}: repeated vertex");
        let reachable: HashSet<usize> = (0..set.len())
            .filter(|&v| !dfs_path(&adj, fp[0], v).is_empty())
            .collect();
        check!(
            unique == reachable && fp.len() == set.len(),
            "case {case}: not every vertex planned"
        );
        let leaf_order: Vec<usize> = fp.iter().copied().filter(|v| leaves.contains(v)).collect();
        check!(
            leaf_order.len() == leaves.len(),
            "case {case}: leaf missing or repeated"
        );

        // Greedy order built step by step, then the path it implies.
        let mut remaining = leaves.clone();
        let mut expected = Vec::new();
        let mut from = start;
        while !remaining.is_empty() {
            let best = *remaining
                .iter()
                .reduce(|a, b| if closer(&set.points, from, *a, *b) { a } else { b })
                .unwrap();
            remaining.retain(|&l| l != best);
            from = set.points[best];
            expected.push(best);
        }
        check!(
            leaf_order == expected,
            "case {case}: leaf order {leaf_order:?}, greedy {expected:?}"
        );
        let mut oracle_path = vec![expected[0]];
        for pair in expected.windows(2) {
            for v in dfs_path(&adj, pair[0], pair[1]) {
                if !oracle_path.contains(&v) {
                    oracle_path.push(v);
                }
            }
        }
        check!(&oracle_path == fp, "case {case}: path differs from tree-path oracle");

        if leaves.len() <= 7 {
            let orders = greedy_orders(&set.points, &leaves, start);
            check!(
                orders == vec![leaf_order.clone()],
                "case {case}: permutation oracle disagrees"
            );
            permutation_checked += 1;
        }
    }
    Ok(format!(
        "200 trees, {permutation_checked} with exhaustive leaf permutations"
    ))
}

// ---------------------------------------------------------------- 3

fn waypoint_spacing() -> Outcome {
    let maps = [
        (MapShape::Corridor { width: 20 }, 600, 60, 0),
        (MapShape::Corridor { width: 24 }, 300, 80, 0),
        (MapShape::Corridor { width: 30 }, 400, 100, 1),
        (MapShape::Corridor { width: 40 }, 500, 120, 2),
        (MapShape::Corridor { width: 24 }, 800, 64, 3),
    ];
    let mut means = Vec::new();
    for (shape, w, h, seed) in maps {
        let grid = generate_synthetic_map(shape, w, h, 0.10, seed).map_err(|e| e.to_string())?;
        let (_, path) = pipeline(&grid, 1.0)?;
        check!(path.stride == 10, "stride {}", path.stride);
        let m = path.metrics();
        let mean = m.mean_spacing.ok_or("path too short")?;
        check!((0.8..=1.2).contains(&mean), "{shape:?}: mean spacing {mean:.3}");
        means.push(format!("{mean:.3}"));
    }
    Ok(format!("mean spacing {} m", means.join(", ")))
}

// ---------------------------------------------------------------- 4

fn scaling_trends() -> Outcome {
    let reads = bench_read_map(&[100, 200, 400, 800], 100, &ReaderParams::default()).map_err(|e| e.to_string())?;
    let rfit = fit_records(&reads).ok_or("no read fit")?;
    check!(rfit.r > 0.95, "read_map r = {:.4}", rfit.r);
    let plans = bench_plan(&[10, 100, 1_000, 10_000], 500, 1.0).map_err(|e| e.to_string())?;
    let pfit = fit_records(&plans).ok_or("no plan fit")?;
    check!(pfit.r > 0.90, "plan r = {:.4}", pfit.r);

    let grid = generate_synthetic_map(MapShape::LRoom, 231, 225, 0.05, 0).map_err(|e| e.to_string())?;
    let params = ReaderParams::default();
    let read = time_iterations(grid.pixel_count(), 20, || read_map(&grid, &params).unwrap());
    check!(read.mean < 0.05, "225x231 read took {:.2} ms", read.mean * 1e3);
    let set = comb_waypoints(100, 0.1);
    let small = time_iterations(100, 50, || {
        let g = WaypointGraph::build(&set).unwrap();
        plan(&g, &PlannerParams::default()).unwrap()
    });
    check!(small.mean < 0.05, "100-waypoint plan took {:.2} ms", small.mean * 1e3);
    Ok(format!(
        "read {:.1} ns/px r={:.4}; plan {:.0} ns/wp r={:.4}; 225x231 read {:.2} ms; 100-wp plan {:.3} ms",
        rfit.slope * 1e9,
        rfit.r,
        pfit.slope * 1e9,
        pfit.r,
        read.mean * 1e3,
        small.mean * 1e3
    ))
}

// ---------------------------------------------------------------- 5, 6

fn branching_map() -> Result<(OccupancyGrid, Vec<Point2>), String> {
    let grid =
        generate_synthetic_map(MapShape::Branching { width: 24 }, 300, 200, 0.10, 0).map_err(|e| e.to_string())?;
    let (_, path) = pipeline(&grid, 1.0)?;
    Ok((grid, path.spliced_path))
}

fn reachability_drift_free() -> Outcome {
    let mut parts = Vec::new();
    let lroom = generate_synthetic_map(MapShape::LRoom, 200, 200, 0.10, 0).map_err(|e| e.to_string())?;
    let (_, lpath) = pipeline(&lroom, 1.0)?;
    for (name, grid, path) in [
        ("branching", branching_map()?.0, branching_map()?.1),
        ("l-room", lroom, lpath.spliced_path),
    ] {
        let (a, _) = mission(&grid, &path, 0.0, 11)?;
        let (b, _) = mission(&grid, &path, 0.0, 11)?;
        check!(a == b, "{name}: repeated runs differ");
        let report = mission_metrics(&a);
        check!(
            report.reachability_percent == 100.0,
            "{name}: reachability {:.2} %, unreached {:?}",
            report.reachability_percent,
            report.unreached
        );
        parts.push(format!(
            "{name} {}/{} in {:.1} s",
            report.reached, report.waypoints, report.total_time
        ));
    }
    Ok(parts.join("; "))
}

fn reachability_under_drift() -> Outcome {
    let (grid, path) = branching_map()?;
    let (log, world) = mission(&grid, &path, 0.02, 7)?;
    let max_bias = world
        .trace()
        .iter()
        .map(|s| angle_diff(s.perceived.psi, s.truth.psi).abs())
        .fold(0.0, f64::max);
    check!(
        max_bias > 5f64.to_radians(),
        "heading bias peaked at {:.2} deg",
        max_bias.to_degrees()
    );
    let report = mission_metrics(&log);
    check!(report.reachability_percent < 100.0, "drift left reachability at 100 %");
    for v in log.verdicts.iter().filter(|v| !v.reached) {
        check!(
            v.goal_true_blocked,
            "waypoint {} missed without a blocked goal",
            v.index + 1
        );
    }
    let (again, _) = mission(&grid, &path, 0.02, 7)?;
    check!(again == log, "drifted runs not reproducible");
    Ok(format!(
        "{:.2} % reached, peak bias {:.1} deg, unreached {:?}",
        report.reachability_percent,
        max_bias.to_degrees(),
        report.unreached.iter().map(|i| i + 1).collect::<Vec<_>>()
    ))
}

// ---------------------------------------------------------------- 7

fn fsm_conformance() -> Outcome {
    use NavEvent as E;
    use NavState as S;
    let table = |s: S, e: E| -> Option<S> {
        Some(match (s, e) {
            (S::LoadMap, E::MapLoaded) => S::CheckWaypoints,
            (S::CheckWaypoints, E::WaypointsRemaining(0)) => S::Home,
            (S::CheckWaypoints, E::WaypointsRemaining(_)) => S::CheckDestination,
            (S::CheckWaypoints, E::NoWaypoints) => S::Home,
            (S::CheckDestination, E::AtDest) => S::Scan,
            (S::CheckDestination, E::NotAtDest) => S::Move,
            (S::CheckDestination, E::RetriesExhausted) => S::CheckWaypoints,
            (S::Move, E::NavSuccess) => S::CheckDestination,
            (S::Move, E::NavTimeout) => S::CheckDestination,
            (S::Move, E::OperatorInterrupt) => S::ManualControl,
            (S::ManualControl, E::OperatorRelease) => S::Scan,
            (S::Scan, E::ScanDone) => S::CheckWaypoints,
            (S::Home, E::HomeReached) => S::Done,
            _ => return None,
        })
    };
    let mut pairs = 0;
    for s in S::ALL {
        for e in E::samples() {
            pairs += 1;
            match (transition(s, e), table(s, e)) {
                (Ok(got), Some(want)) => check!(got == want, "{s} + {e}: {got} instead of {want}"),
                (Err(_), None) => {}
                (got, want) => return Err(format!("{s} + {e}: got {got:?}, table says {want:?}")),
            }
        }
    }

    let grid = open_room(62, 14, 0.1);
    let mut world = SimWorld::new(
        grid,
        AxisConvention::RowCol,
        SimConfig::default(),
        Pose2D::new(0.6, 0.65, 0.0),
    )
    .map_err(|e| e.to_string())?;
    let wps = [Point2::new(2.6, 0.65), Point2::new(4.6, 0.65)];
    let log = Mission::new(MissionConfig::default())
        .with_interrupts([InterruptTrigger::AtTime(2.0)])
        .run(&wps, &mut world);
    let states = log.states();
    let at = states
        .iter()
        .position(|&s| s == S::ManualControl)
        .ok_or("no ManualControl state")?;
    check!(
        states[at - 1..at + 3] == [S::Move, S::ManualControl, S::Scan, S::CheckWaypoints],
        "sequence {:?}",
        &states[at - 1..(at + 3).min(states.len())]
    );
    for &(from, event, to) in &log.transitions {
        check!(
            table(from, event) == Some(to),
            "logged {from} + {event} -> {to} not in table"
        );
    }
    check!(
        log.verdicts.iter().filter(|v| v.assisted).count() == 1,
        "expected one assisted waypoint"
    );
    Ok(format!(
        "{pairs} (state, event) pairs; interrupt sequence Move->ManualControl->Scan->CheckWaypoints"
    ))
}

// ---------------------------------------------------------------- 8

fn scan_procedure() -> Outcome {
    let tol = Tolerance::default();
    let theta0 = 0.7;
    let mut world = SimWorld::new(
        open_room(40, 40, 0.1),
        AxisConvention::RowCol,
        SimConfig::default(),
        Pose2D::new(2.0, 2.0, theta0),
    )
    .map_err(|e| e.to_string())?;
    let report = scan_at_waypoint(&mut world, &ScanParams::default(), &tol).map_err(|e| e.to_string())?;
    check!(!report.failed, "scan rotation timed out");
    check!(report.captures.len() == 8, "{} captures", report.captures.len());
    for (k, cap) in report.captures.iter().enumerate() {
        let want = normalize_angle(theta0 + FRAC_PI_2 * (k / 2) as f64);
        check!(
            angle_diff(cap.heading, want).abs() < 1e-12,
            "capture {k} heading {}",
            cap.heading
        );
        check!(
            angle_diff(cap.pose.psi, want).abs() <= tol.yaw,
            "capture {k} taken at {}",
            cap.pose.psi
        );
    }

    let start = Pose2D::new(2.0, 2.0, theta0);
    let mut world = SimWorld::new(
        open_room(40, 40, 0.1),
        AxisConvention::RowCol,
        SimConfig::default(),
        start,
    )
    .map_err(|e| e.to_string())?;
    let single = ScanParams {
        orientations: 1,
        ..ScanParams::default()
    };
    let report = scan_at_waypoint(&mut world, &single, &tol).map_err(|e| e.to_string())?;
    check!(
        report.captures.len() == 2,
        "N=1 gave {} captures",
        report.captures.len()
    );
    check!(world.command_peaks().wz == 0.0, "N=1 rotated");
    check!(world.true_pose() == start, "N=1 moved the robot");
    Ok("N=4,|G|=2: 8 captures at theta0 + k*pi/2; N=1: no rotation".into())
}

// ---------------------------------------------------------------- 9

fn frame_and_joystick_math() -> Outcome {
    let close = |a: &Matrix3<f64>, b: &Matrix3<f64>| (a - b).amax() < 1e-12;
    let z = Vector3::new(0.0, 0.0, -0.3);

    let f = project_base_footprint(&BodyTransform {
        rotation: Matrix3::identity(),
        translation: Vector3::new(0.0, 0.0, 0.3),
    })
    .map_err(|e| e.to_string())?;
    check!(close(&f.rotation, &Matrix3::identity()), "identity: rotation");
    check!(
        (f.translation - z).amax() < 1e-12,
        "identity: translation {:?}",
        f.translation
    );

    let yaw = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
    let tf = BodyTransform {
        rotation: yaw,
        translation: Vector3::new(0.0, 0.0, 0.3),
    };
    let f = project_base_footprint(&tf).map_err(|e| e.to_string())?;
    check!(close(&f.rotation, &yaw.transpose()), "yaw: rotation is not the inverse");
    check!(
        (f.translation - z).amax() < 1e-12,
        "yaw: translation {:?}",
        f.translation
    );

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let (r, p, y) = (
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
            rng.random_range(-PI..PI),
        );
        let t = Vector3::new(
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(0.0..1.0),
        );
        let tf = BodyTransform::from_euler(r, p, y, t);
        let f = project_base_footprint(&tf).map_err(|e| e.to_string())?;
        let inertial = tf.rotation * f.rotation;
        let roll = inertial[(2, 1)].atan2(inertial[(2, 2)]);
        let pitch = (-inertial[(2, 0)]).asin();
        check!(
            roll.abs() < 1e-12 && pitch.abs() < 1e-12,
            "footprint roll {roll}, pitch {pitch}"
        );
        check!(
            (t + tf.rotation * f.translation).z.abs() < 1e-12,
            "footprint not on the ground"
        );
    }

    let cfg = SimConfig::default();
    // Stick axes live in the open interval (-1, 1).
    let oracle = |x: f64| {
        if x >= 1.0 {
            STICK_LIMIT
        } else if x <= -1.0 {
            -STICK_LIMIT
        } else {
            x
        }
    };
    for i in 0..1000 {
        let v = Vector3::new(
            rng.random_range(-2.0..2.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let w = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.6..1.6),
        );
        let j = velocity_to_joystick(v, w, &cfg);
        let want = (oracle(-v.y / 0.5), oracle(v.x / 1.0), oracle(-w.z / 0.8));
        check!(
            (j.lx - want.0).abs() < 1e-12
                && (j.ly - want.1).abs() < 1e-12
                && (j.rx - want.2).abs() < 1e-12
                && j.ry == 0.0,
            "triple {i}: {j:?} vs {want:?}"
        );
        check!(
            [j.lx, j.ly, j.rx].iter().all(|a| a.abs() < 1.0),
            "triple {i} left (-1, 1)"
        );
    }
    Ok("footprint examples to 1e-12; 1000 joystick triples match".into())
}

// ---------------------------------------------------------------- runner

fn main() {
    let criteria: [Criterion; 9] = [
        ("pipeline fidelity", pipeline_fidelity),
        ("coverage on trees", coverage_on_trees),
        ("waypoint spacing", waypoint_spacing),
        ("scaling trends", scaling_trends),
        ("reachability, drift-free", reachability_drift_free),
        ("reachability under drift", reachability_under_drift),
        ("FSM conformance", fsm_conformance),
        ("scan procedure", scan_procedure),
        ("frame and joystick math", frame_and_joystick_math),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail} [{secs:.1} s]", n + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why} [{secs:.1} s]", n + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

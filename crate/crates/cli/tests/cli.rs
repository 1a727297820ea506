use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn skelnav(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skelnav"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = skelnav(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Generates a map and returns `(pgm, meta)`.
fn gen(dir: &Path, shape: &str, w: usize, h: usize) -> (PathBuf, PathBuf) {
    let stem = dir.join(shape.replace(':', "_"));
    ok(&[
        "gen-map",
        "--shape",
        shape,
        "--width",
        &w.to_string(),
        "--height",
        &h.to_string(),
        "--out",
        s(&stem),
    ]);
    (stem.with_extension("pgm"), stem.with_extension("meta"))
}

fn read_and_plan(dir: &Path, map: &(PathBuf, PathBuf), spacing: &str) -> (PathBuf, String) {
    let wps = dir.join("waypoints.txt");
    ok(&["read-map", "--map", s(&map.0), "--meta", s(&map.1), "--out", s(&wps)]);
    let path = dir.join(format!("path_{spacing}.txt"));
    let stdout = ok(&[
        "plan",
        "--waypoints",
        s(&wps),
        "--start",
        "0,0",
        "--spacing",
        spacing,
        "--out",
        s(&path),
    ]);
    (path, stdout)
}

#[test]
fn read_map_defaults_and_stage_dumps() {
    let dir = TempDir::new().unwrap();
    let map = gen(dir.path(), "l-room", 200, 200);
    let wps = dir.path().join("w.txt");
    let stdout = ok(&["read-map", "--map", s(&map.0), "--meta", s(&map.1), "--out", s(&wps)]);
    let count: usize = stdout.trim().strip_prefix("waypoints ").unwrap().parse().unwrap();
    assert!(count > 0);
    let text = fs::read_to_string(&wps).unwrap();
    assert!(text.starts_with(&format!("# waypoints count={count} resolution=0.1")));
    assert_eq!(text.lines().count(), count + 1);

    let stages = dir.path().join("stages");
    assert!(!stages.exists());
    let json = ok(&[
        "--json",
        "read-map",
        "--map",
        s(&map.0),
        "--meta",
        s(&map.1),
        "--out",
        s(&wps),
        "--stages-out",
        s(&stages),
    ]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["waypoints"], count);
    for name in ["original", "adjusted", "fuzzied", "contour", "eroded", "skeleton"] {
        assert!(stages.join(format!("{name}.pgm")).is_file(), "{name}");
        assert!(stages.join(format!("{name}.meta")).is_file(), "{name}");
    }
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let pgm = d.join("solid.pgm");
    let mut bytes = b"P5\n40 40\n255\n".to_vec();
    bytes.extend(std::iter::repeat_n(0u8, 1600));
    fs::write(&pgm, bytes).unwrap();
    let meta = d.join("solid.meta");
    fs::write(&meta, "resolution = 0.1\norigin_x = 0\norigin_y = 0\n").unwrap();
    let out = skelnav(&[
        "read-map",
        "--map",
        s(&pgm),
        "--meta",
        s(&meta),
        "--out",
        s(&d.join("w.txt")),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("contour"));

    let out = skelnav(&["read-map", "--map", s(&d.join("missing.pgm")), "--meta", s(&meta)]);
    assert_eq!(out.status.code(), Some(4));

    let empty = d.join("empty.txt");
    fs::write(
        &empty,
        "# waypoints count=0 resolution=0.1 origin_x=0 origin_y=0 axis=row-col\n",
    )
    .unwrap();
    let out = skelnav(&[
        "plan",
        "--waypoints",
        s(&empty),
        "--start",
        "0,0",
        "--out",
        s(&d.join("p.txt")),
    ]);
    assert_eq!(out.status.code(), Some(5));

    let map = gen(d, "corridor", 200, 60);
    let wps = d.join("w.txt");
    ok(&["read-map", "--map", s(&map.0), "--meta", s(&map.1), "--out", s(&wps)]);
    let out = skelnav(&["plan", "--waypoints", s(&wps), "--start", "0,0", "--spacing", "0.05"]);
    assert_eq!(out.status.code(), Some(5));

    let out = skelnav(&["plan", "--waypoints", s(&wps)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn plan_stride_and_identity_splice() {
    let dir = TempDir::new().unwrap();
    let map = gen(dir.path(), "branching", 300, 200);
    let (path, stdout) = read_and_plan(dir.path(), &map, "1.0");
    assert!(stdout.contains("stride 10\n"));
    let full: usize = stdout
        .lines()
        .next()
        .unwrap()
        .strip_prefix("full_path ")
        .unwrap()
        .parse()
        .unwrap();
    let header = fs::read_to_string(&path).unwrap();
    assert!(header.starts_with("# path count="));
    assert!(header.contains("spacing=1 resolution=0.1 start=0,0"));

    let (path, stdout) = read_and_plan(dir.path(), &map, "0.1");
    assert!(stdout.contains("stride 1\n"));
    assert!(stdout.contains(&format!("spliced_path {full}\n")));
    assert_eq!(fs::read_to_string(path).unwrap().lines().count(), full + 1);

    // Far-away start: the nearest leaf is still used.
    let wps = dir.path().join("waypoints.txt");
    let far = ok(&[
        "plan",
        "--waypoints",
        s(&wps),
        "--start",
        "-500,900",
        "--out",
        s(&dir.path().join("far.txt")),
    ]);
    assert!(far.contains(&format!("full_path {full}")));
}

#[test]
fn simulate_reports() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let map = gen(d, "corridor", 240, 60);
    let (path, _) = read_and_plan(d, &map, "1.0");
    let base = |log: &Path, report: &Path| -> Vec<String> {
        vec![
            "simulate".into(),
            "--map".into(),
            s(&map.0).into(),
            "--meta".into(),
            s(&map.1).into(),
            "--path".into(),
            s(&path).into(),
            "--log".into(),
            s(log).into(),
            "--report".into(),
            s(report).into(),
        ]
    };
    let args = base(&d.join("log1.txt"), &d.join("rep1.txt"));
    let stdout = ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(stdout.starts_with("Trial  Waypoints  Reached  Reachability (%)"));
    assert!(stdout.contains(" 100.00 "), "{stdout}");
    let log = fs::read_to_string(d.join("log1.txt")).unwrap();
    assert!(log.starts_with("0.00 LoadMap map_loaded -> CheckWaypoints"));
    assert!(log.contains("Home home_reached -> Done"));

    let mut args = base(&d.join("log2.txt"), &d.join("rep2.txt"));
    args.extend(["--interrupt-at".into(), "wp:2".into()]);
    let stdout = ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(stdout.contains("Human assistance required at waypoint 2."), "{stdout}");

    let mut args = base(&d.join("log3.txt"), &d.join("rep3.txt"));
    args.extend(["--deadline".into(), "1".into()]);
    let out = skelnav(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(out.status.code(), Some(6));
    assert!(fs::read_to_string(d.join("log3.txt")).unwrap().contains(" abort "));
}

#[test]
fn drifted_runs_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let map = gen(d, "branching", 300, 200);
    let run = |tag: &str| {
        let out = d.join(tag);
        let json = ok(&[
            "--json",
            "run-all",
            "--map",
            s(&map.0),
            "--meta",
            s(&map.1),
            "--drift",
            "0.02",
            "--seed",
            "7",
            "--out-dir",
            s(&out),
        ]);
        (out, serde_json::from_str::<serde_json::Value>(&json).unwrap())
    };
    let (a, ja) = run("a");
    let (b, jb) = run("b");
    assert_eq!(ja, jb);
    let pct = ja["report"]["reachability_percent"].as_f64().unwrap();
    assert!(pct < 100.0, "reachability {pct}");
    for name in [
        "waypoints.txt",
        "path.txt",
        "run_log.txt",
        "report.txt",
        "trace.txt",
        "stages/skeleton.pgm",
    ] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    for v in ja["verdicts"].as_array().unwrap() {
        if v["reached"] == false {
            assert_eq!(v["goal_true_blocked"], true);
        }
    }
}

#[test]
fn bench_tables() {
    let one = ok(&["bench", "--only", "read", "--sizes", "60", "--read-iters", "2"]);
    assert!(one.contains("# read_map"));
    assert!(!one.contains("slope"));
    let two = ok(&["bench", "--only", "plan", "--counts", "10,100", "--plan-iters", "3"]);
    assert!(two.contains("slope ") && two.contains("ns/waypoint"));
    let json = ok(&[
        "--json",
        "bench",
        "--sizes",
        "60,80",
        "--counts",
        "10",
        "--read-iters",
        "1",
        "--plan-iters",
        "1",
    ]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["read_map"]["records"][1]["size"], 6400);
    assert!(v["read_map"]["fit"]["slope"].is_number());
    assert!(v["plan"]["fit"].is_null());
}

//! Coverage path over the waypoint graph.
//!
//! Starting from the leaf nearest the robot, the planner repeatedly walks the
//! graph shortest path to the nearest (straight-line) unvisited leaf, keeping
//! only first visits of each vertex. The resulting vertex sequence is then
//! subsampled every `round(D / R)` entries.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point2;
use crate::waypoint_graph::{DijkstraScratch, GraphError, WaypointGraph};

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("nearest-leaf search needs at least one candidate")]
    NoCandidates,
    #[error("waypoint spacing {spacing} m must be finite and at least the map resolution {resolution} m")]
    InvalidSpacing { spacing: f64, resolution: f64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("path file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerParams {
    /// Target distance between consecutive visited waypoints, in meters.
    pub waypoint_spacing: f64,
    pub start_position: Point2,
    /// Chain every component by nearest-leaf hops instead of planning only the
    /// component that holds the starting leaf.
    pub all_components: bool,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            waypoint_spacing: 1.0,
            start_position: Point2::default(),
            all_components: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSummary {
    pub label: usize,
    pub vertices: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub vertices_total: usize,
    pub vertices_planned: usize,
    pub leaves_total: usize,
    pub leaves_planned: usize,
    pub components_total: usize,
    pub unplanned_components: Vec<ComponentSummary>,
}

impl Coverage {
    pub fn vertex_percent(&self) -> f64 {
        if self.vertices_total == 0 {
            100.0
        } else {
            100.0 * self.vertices_planned as f64 / self.vertices_total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedPath {
    /// Distinct vertices in first-visit order.
    pub full_path: Vec<usize>,
    /// Positions in `full_path` kept by splicing.
    pub spliced_indices: Vec<usize>,
    pub spliced_path: Vec<Point2>,
    pub stride: usize,
    pub coverage: Coverage,
}

impl PlannedPath {
    pub fn metrics(&self) -> PathMetrics {
        path_metrics(&self.spliced_path)
    }
}

/// `max(1, round(D / R))`, rejecting `D < R`.
pub fn stride(spacing: f64, resolution: f64) -> Result<usize, PlanError> {
    let bad = PlanError::InvalidSpacing { spacing, resolution };
    if !spacing.is_finite() || !resolution.is_finite() || resolution <= 0.0 {
        return Err(bad);
    }
    // Allow for the rounding of values such as 0.1 typed in by hand.
    if spacing < resolution * (1.0 - 1e-9) {
        return Err(bad);
    }
    Ok(((spacing / resolution).round() as usize).max(1))
}

/// Candidate closest to `position` in straight-line distance; ties go to the
/// lowest vertex index regardless of candidate order.
pub fn find_nearest_leaf(graph: &WaypointGraph, position: Point2, candidates: &[usize]) -> Result<usize, PlanError> {
    candidates
        .iter()
        .map(|&v| (position.distance(graph.point(v)), v))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, v)| v)
        .ok_or(PlanError::NoCandidates)
}

/// Keeps elements at positions `0, s, 2s, ...`.
pub fn splice_indices(len: usize, stride: usize) -> Vec<usize> {
    (0..len).step_by(stride.max(1)).collect()
}

struct Walk<'g> {
    graph: &'g WaypointGraph,
    labels: Vec<usize>,
    path: Vec<usize>,
    in_path: Vec<bool>,
    scratch: DijkstraScratch,
}

impl<'g> Walk<'g> {
    fn push(&mut self, v: usize) {
        if !self.in_path[v] {
            self.in_path[v] = true;
            self.path.push(v);
        }
    }

    /// Nearest-unvisited-leaf loop over `leaves`, beginning at `start`.
    fn leaves(&mut self, start: usize, leaves: &[usize]) -> Result<(), PlanError> {
        let mut visited = vec![false; self.graph.len()];
        let mut remaining = leaves.len();
        let mut candidates: Vec<usize> = Vec::with_capacity(leaves.len());
        let mut current = start;
        loop {
            if !visited[current] {
                visited[current] = true;
                remaining -= 1;
            }
            if remaining == 0 {
                self.push(current);
                return Ok(());
            }
            candidates.clear();
            candidates.extend(leaves.iter().copied().filter(|&v| !visited[v]));
            let target = find_nearest_leaf(self.graph, self.graph.point(current), &candidates)?;
            if self.labels[current] == self.labels[target] {
                let leg = self.graph.shortest_path_with(&mut self.scratch, current, target)?;
                for v in leg {
                    self.push(v);
                }
            } else {
                self.push(current);
                self.push(target);
            }
            current = target;
        }
    }

    /// Depth-first preorder from `seed`, smallest neighbor first. On a
    /// simple cycle this goes once around.
    fn traverse(&mut self, seed: usize) {
        let mut seen = vec![false; self.graph.len()];
        let mut stack = vec![seed];
        while let Some(v) = stack.pop() {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            self.push(v);
            for e in self.graph.neighbors(v).iter().rev() {
                if !seen[e.to] {
                    stack.push(e.to);
                }
            }
        }
    }
}

pub fn plan(graph: &WaypointGraph, params: &PlannerParams) -> Result<PlannedPath, PlanError> {
    let stride = stride(params.waypoint_spacing, graph.resolution())?;
    let (labels, n_components) = graph.components();
    let all_leaves = graph.leaves();
    let mut walk = Walk {
        graph,
        labels,
        path: Vec::with_capacity(graph.len()),
        in_path: vec![false; graph.len()],
        scratch: DijkstraScratch::new(graph.len()),
    };

    if !graph.is_empty() {
        let all: Vec<usize> = (0..graph.len()).collect();
        if all_leaves.is_empty() {
            let seed = find_nearest_leaf(graph, params.start_position, &all)?;
            walk.traverse(seed);
        } else {
            let start = find_nearest_leaf(graph, params.start_position, &all_leaves)?;
            let leaves: Vec<usize> = if params.all_components {
                all_leaves.clone()
            } else {
                let label = walk.labels[start];
                all_leaves
                    .iter()
                    .copied()
                    .filter(|&v| walk.labels[v] == label)
                    .collect()
            };
            walk.leaves(start, &leaves)?;
        }
        if params.all_components {
            // Leafless components left over: hop to the closest one and go around it.
            loop {
                let mut planned = vec![false; n_components];
                for &v in &walk.path {
                    planned[walk.labels[v]] = true;
                }
                let rest: Vec<usize> = all.iter().copied().filter(|&v| !planned[walk.labels[v]]).collect();
                if rest.is_empty() {
                    break;
                }
                let here = graph.point(*walk.path.last().expect("path is nonempty"));
                let seed = find_nearest_leaf(graph, here, &rest)?;
                walk.traverse(seed);
            }
        }
    }

    let mut planned = vec![false; n_components];
    let mut sizes = vec![0usize; n_components];
    for v in 0..graph.len() {
        sizes[walk.labels[v]] += 1;
    }
    for &v in &walk.path {
        planned[walk.labels[v]] = true;
    }
    let coverage = Coverage {
        vertices_total: graph.len(),
        vertices_planned: walk.path.len(),
        leaves_total: all_leaves.len(),
        leaves_planned: all_leaves.iter().filter(|&&v| walk.in_path[v]).count(),
        components_total: n_components,
        unplanned_components: (0..n_components)
            .filter(|&c| !planned[c])
            .map(|label| ComponentSummary {
                label,
                vertices: sizes[label],
            })
            .collect(),
    };

    let full_path = walk.path;
    let spliced_indices = splice_indices(full_path.len(), stride);
    let spliced_path = spliced_indices.iter().map(|&i| graph.point(full_path[i])).collect();
    Ok(PlannedPath {
        full_path,
        spliced_indices,
        spliced_path,
        stride,
        coverage,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathMetrics {
    pub count: usize,
    pub total_length: f64,
    pub mean_spacing: Option<f64>,
    pub min_spacing: Option<f64>,
    pub max_spacing: Option<f64>,
}

pub fn path_metrics(points: &[Point2]) -> PathMetrics {
    let gaps: Vec<f64> = points.windows(2).map(|w| w[0].distance(w[1])).collect();
    let total_length = gaps.iter().fold(0.0, |acc, g| acc + g);
    PathMetrics {
        count: points.len(),
        total_length,
        mean_spacing: (!gaps.is_empty()).then(|| total_length / gaps.len() as f64),
        min_spacing: gaps.iter().copied().reduce(f64::min),
        max_spacing: gaps.iter().copied().reduce(f64::max),
    }
}

/// Contents of a path file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathFile {
    pub spacing: f64,
    pub resolution: f64,
    pub start: Point2,
    pub points: Vec<Point2>,
}

impl PathFile {
    pub fn new(path: &PlannedPath, params: &PlannerParams, resolution: f64) -> Self {
        Self {
            spacing: params.waypoint_spacing,
            resolution,
            start: params.start_position,
            points: path.spliced_path.clone(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# path count={} spacing={} resolution={} start={},{}\n",
            self.points.len(),
            self.spacing,
            self.resolution,
            self.start.x,
            self.start.y
        );
        for p in &self.points {
            let _ = writeln!(out, "{} {}", p.x, p.y);
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, PlanError> {
        let err = |m: String| PlanError::Format(m);
        let mut lines = text.lines();
        let header = lines
            .next()
            .and_then(|l| l.strip_prefix("# path"))
            .ok_or_else(|| err("missing '# path' header".into()))?;
        let mut count = None;
        let mut spacing = None;
        let mut resolution = None;
        let mut start = None;
        for token in header.split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| err(format!("bad header token {token:?}")))?;
            let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number {s:?} for {key}")));
            match key {
                "count" => {
                    count = Some(
                        value
                            .parse::<usize>()
                            .map_err(|_| err(format!("bad count {value:?}")))?,
                    )
                }
                "spacing" => spacing = Some(num(value)?),
                "resolution" => resolution = Some(num(value)?),
                "start" => {
                    let (x, y) = value
                        .split_once(',')
                        .ok_or_else(|| err(format!("bad start {value:?}")))?;
                    start = Some(Point2::new(num(x)?, num(y)?));
                }
                _ => {}
            }
        }
        let missing = |k: &str| err(format!("header lacks {k}"));
        let count = count.ok_or_else(|| missing("count"))?;
        let mut points = Vec::with_capacity(count);
        for (n, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace().map(str::parse::<f64>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(x)), Some(Ok(y)), None) => points.push(Point2::new(x, y)),
                _ => return Err(err(format!("line {}: expected 'x y', got {line:?}", n + 2))),
            }
        }
        if points.len() != count {
            return Err(err(format!("header count {count} but {} points", points.len())));
        }
        Ok(Self {
            spacing: spacing.ok_or_else(|| missing("spacing"))?,
            resolution: resolution.ok_or_else(|| missing("resolution"))?,
            start: start.ok_or_else(|| missing("start"))?,
            points,
        })
    }
}

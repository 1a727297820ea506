//! Graph over skeleton waypoints.
//!
//! Two waypoints are joined when their source pixels are 8-neighbors, so every
//! edge is either one orthogonal step (`R`) or one diagonal step (`R*sqrt(2)`).
//! Path lengths are therefore kept exactly as `(orthogonal steps, diagonal
//! steps)` pairs, which makes equal-length ties decidable and the
//! lexicographic tie-break reproducible.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point2;
use crate::map_reader::WaypointSet;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("waypoints {first} and {second} share source pixel {pixel:?}")]
    DuplicatePixel {
        first: usize,
        second: usize,
        pixel: (usize, usize),
    },
    #[error("waypoint set has {points} points but {pixels} source pixels")]
    PixelCountMismatch { points: usize, pixels: usize },
    #[error("vertex {0} is not in the graph")]
    UnknownVertex(usize),
    #[error("no path from vertex {from} (component {from_component}) to vertex {to} (component {to_component})")]
    NoPath {
        from: usize,
        to: usize,
        from_component: usize,
        to_component: usize,
    },
}

/// Exact length of a lattice path: `ortho * R + diag * R * sqrt(2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct StepCost {
    pub ortho: u32,
    pub diag: u32,
}

impl StepCost {
    pub const ZERO: StepCost = StepCost { ortho: 0, diag: 0 };

    pub fn step(diagonal: bool) -> Self {
        if diagonal {
            StepCost { ortho: 0, diag: 1 }
        } else {
            StepCost { ortho: 1, diag: 0 }
        }
    }

    pub fn length(self, resolution: f64) -> f64 {
        resolution * (f64::from(self.ortho) + f64::from(self.diag) * std::f64::consts::SQRT_2)
    }
}

impl std::ops::Add for StepCost {
    type Output = StepCost;

    fn add(self, rhs: StepCost) -> StepCost {
        StepCost {
            ortho: self.ortho + rhs.ortho,
            diag: self.diag + rhs.diag,
        }
    }
}

impl Ord for StepCost {
    /// Sign of `(a1 - a2) + (b1 - b2) * sqrt(2)`, decided in integers.
    fn cmp(&self, other: &Self) -> Ordering {
        let x = i64::from(self.ortho) - i64::from(other.ortho);
        let y = i64::from(self.diag) - i64::from(other.diag);
        match (x.signum(), y.signum()) {
            (0, 0) => Ordering::Equal,
            (sx, sy) if sx >= 0 && sy >= 0 => Ordering::Greater,
            (sx, sy) if sx <= 0 && sy <= 0 => Ordering::Less,
            // Opposite signs: compare x^2 with 2 y^2; equality is impossible.
            (1, _) => (x * x).cmp(&(2 * y * y)),
            _ => (2 * y * y).cmp(&(x * x)),
        }
    }
}

impl PartialOrd for StepCost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub to: usize,
    /// Euclidean distance between the two world points, in meters.
    pub weight: f64,
    pub diagonal: bool,
}

/// Undirected waypoint graph. Adjacency lists are sorted by neighbor index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaypointGraph {
    points: Vec<Point2>,
    pixels: Vec<(usize, usize)>,
    adjacency: Vec<Vec<Edge>>,
    resolution: f64,
}

impl WaypointGraph {
    /// Connects waypoints whose source pixels are within one step in both row and column.
    pub fn build(waypoints: &WaypointSet) -> Result<Self, GraphError> {
        if waypoints.points.len() != waypoints.pixels.len() {
            return Err(GraphError::PixelCountMismatch {
                points: waypoints.points.len(),
                pixels: waypoints.pixels.len(),
            });
        }
        let mut index: HashMap<(usize, usize), usize> = HashMap::with_capacity(waypoints.len());
        for (i, &px) in waypoints.pixels.iter().enumerate() {
            if let Some(first) = index.insert(px, i) {
                return Err(GraphError::DuplicatePixel {
                    first,
                    second: i,
                    pixel: px,
                });
            }
        }
        let mut adjacency = vec![Vec::new(); waypoints.len()];
        for (i, &(r, c)) in waypoints.pixels.iter().enumerate() {
            for dr in -1isize..=1 {
                for dc in -1isize..=1 {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let (rr, cc) = (r as isize + dr, c as isize + dc);
                    if rr < 0 || cc < 0 {
                        continue;
                    }
                    if let Some(&j) = index.get(&(rr as usize, cc as usize)) {
                        adjacency[i].push(Edge {
                            to: j,
                            weight: waypoints.points[i].distance(waypoints.points[j]),
                            diagonal: dr != 0 && dc != 0,
                        });
                    }
                }
            }
            adjacency[i].sort_by_key(|e| e.to);
        }
        Ok(Self {
            points: waypoints.points.clone(),
            pixels: waypoints.pixels.clone(),
            adjacency,
            resolution: waypoints.frame.resolution,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn point(&self, v: usize) -> Point2 {
        self.points[v]
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn pixel(&self, v: usize) -> (usize, usize) {
        self.pixels[v]
    }

    pub fn neighbors(&self, v: usize) -> &[Edge] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    fn edge(&self, a: usize, b: usize) -> Option<&Edge> {
        self.adjacency[a]
            .binary_search_by_key(&b, |e| e.to)
            .ok()
            .map(|k| &self.adjacency[a][k])
    }

    /// Vertices of degree at most one, ascending. Isolated vertices count as leaves.
    pub fn leaves(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.degree(v) <= 1).collect()
    }

    /// Connected-component label per vertex (labels in order of lowest member)
    /// and the number of components.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let mut label = vec![usize::MAX; self.len()];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..self.len() {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = count;
            stack.push(s);
            while let Some(v) = stack.pop() {
                for e in &self.adjacency[v] {
                    if label[e.to] == usize::MAX {
                        label[e.to] = count;
                        stack.push(e.to);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }

    /// Sum of edge weights along consecutive vertices of `path`.
    /// Non-adjacent consecutive vertices contribute their straight-line distance.
    pub fn path_length(&self, path: &[usize]) -> f64 {
        path.windows(2)
            .map(|w| match self.edge(w[0], w[1]) {
                Some(e) => e.weight,
                None => self.points[w[0]].distance(self.points[w[1]]),
            })
            .sum()
    }

    /// Exact cost of a walk whose consecutive vertices are adjacent.
    pub fn path_cost(&self, path: &[usize]) -> Option<StepCost> {
        path.windows(2).try_fold(StepCost::ZERO, |acc, w| {
            self.edge(w[0], w[1]).map(|e| acc + StepCost::step(e.diagonal))
        })
    }

    /// Minimum-length path from `source` to `target`, both included.
    ///
    /// Among equal-length paths the one whose vertex sequence, read from the
    /// lower-indexed endpoint, is lexicographically smallest is returned. This
    /// makes `shortest_path(t, s)` the exact reverse of `shortest_path(s, t)`.
    pub fn shortest_path(&self, source: usize, target: usize) -> Result<Vec<usize>, GraphError> {
        let mut scratch = DijkstraScratch::new(self.len());
        self.shortest_path_with(&mut scratch, source, target)
    }

    /// [`WaypointGraph::shortest_path`] reusing buffers across calls, so repeated
    /// queries cost time proportional to the explored region only.
    pub fn shortest_path_with(
        &self,
        scratch: &mut DijkstraScratch,
        source: usize,
        target: usize,
    ) -> Result<Vec<usize>, GraphError> {
        for v in [source, target] {
            if v >= self.len() {
                return Err(GraphError::UnknownVertex(v));
            }
        }
        if source == target {
            return Ok(vec![source]);
        }
        scratch.ensure(self.len());
        let (lo, hi) = (source.min(target), source.max(target));

        // Distances to `hi`, settled until `lo` is reached.
        scratch.begin();
        scratch.relax(hi, StepCost::ZERO);
        let mut reached = false;
        while let Some(Reverse((cost, v))) = scratch.heap.pop() {
            if scratch.is_settled(v) || cost != scratch.dist(v) {
                continue;
            }
            scratch.settle(v);
            if v == lo {
                reached = true;
                break;
            }
            for e in &self.adjacency[v] {
                if !scratch.is_settled(e.to) {
                    scratch.relax(e.to, cost + StepCost::step(e.diagonal));
                }
            }
        }
        if !reached {
            let (labels, _) = self.components();
            return Err(GraphError::NoPath {
                from: source,
                to: target,
                from_component: labels[source],
                to_component: labels[target],
            });
        }

        // Walk down from `lo`, always taking the smallest-index tight neighbor.
        let mut path = vec![lo];
        let mut cur = lo;
        while cur != hi {
            let here = scratch.dist(cur);
            let next = self.adjacency[cur]
                .iter()
                .find(|e| scratch.is_settled(e.to) && scratch.dist(e.to) + StepCost::step(e.diagonal) == here)
                .map(|e| e.to)
                .expect("settled vertex has a tight predecessor");
            path.push(next);
            cur = next;
        }
        if source != lo {
            path.reverse();
        }
        Ok(path)
    }

    /// Debug export: a vertex table followed by an `i j weight` edge list.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# vertices {} edges {} resolution {}",
            self.len(),
            self.edge_count(),
            self.resolution
        );
        for (v, (p, px)) in self.points.iter().zip(&self.pixels).enumerate() {
            let _ = writeln!(out, "v {v} {} {} {} {}", p.x, p.y, px.0, px.1);
        }
        for (i, edges) in self.adjacency.iter().enumerate() {
            for e in edges.iter().filter(|e| e.to > i) {
                let _ = writeln!(out, "{i} {} {}", e.to, e.weight);
            }
        }
        out
    }
}

/// Reusable Dijkstra buffers. Entries are invalidated by bumping a generation
/// counter instead of clearing.
#[derive(Debug, Default)]
pub struct DijkstraScratch {
    dist: Vec<StepCost>,
    seen_gen: Vec<u32>,
    settled_gen: Vec<u32>,
    generation: u32,
    heap: BinaryHeap<Reverse<(StepCost, usize)>>,
}

impl DijkstraScratch {
    pub fn new(n: usize) -> Self {
        let mut s = Self::default();
        s.ensure(n);
        s
    }

    fn ensure(&mut self, n: usize) {
        if self.dist.len() < n {
            self.dist.resize(n, StepCost::ZERO);
            self.seen_gen.resize(n, 0);
            self.settled_gen.resize(n, 0);
        }
    }

    fn begin(&mut self) {
        self.heap.clear();
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.seen_gen.iter_mut().for_each(|g| *g = 0);
            self.settled_gen.iter_mut().for_each(|g| *g = 0);
            self.generation = 1;
        }
    }

    fn dist(&self, v: usize) -> StepCost {
        debug_assert_eq!(self.seen_gen[v], self.generation);
        self.dist[v]
    }

    fn is_settled(&self, v: usize) -> bool {
        self.settled_gen[v] == self.generation
    }

    fn settle(&mut self, v: usize) {
        self.settled_gen[v] = self.generation;
    }

    fn relax(&mut self, v: usize, cost: StepCost) {
        if self.seen_gen[v] != self.generation || cost < self.dist[v] {
            self.seen_gen[v] = self.generation;
            self.dist[v] = cost;
            self.heap.push(Reverse((cost, v)));
        }
    }
}

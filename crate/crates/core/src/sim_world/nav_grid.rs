//! Traversability grid for the simulated robot: non-free cells inflated by the
//! robot radius, 8-connected A* without corner cutting, and line-of-sight
//! shortcutting of the resulting cell path.

use pathfinding::prelude::{astar, bfs_reach};

use crate::geometry::{Point2, WorldFrame};
use crate::map_io::OccupancyGrid;
use crate::FREE;

#[derive(Debug, Clone)]
pub(crate) struct NavGrid {
    width: usize,
    height: usize,
    frame: WorldFrame,
    /// Cells whose center is within the robot radius of a non-free cell or of the map edge.
    blocked: Vec<bool>,
    /// Same with one extra cell of margin, used when shortcutting paths.
    margin: Vec<bool>,
}

type Cell = (usize, usize);

fn inflate(grid: &OccupancyGrid, radius_cells: f64) -> Vec<bool> {
    let (w, h) = (grid.width as isize, grid.height as isize);
    let reach = radius_cells.floor() as isize;
    let offsets: Vec<(isize, isize)> = (-reach..=reach)
        .flat_map(|dr| (-reach..=reach).map(move |dc| (dr, dc)))
        .filter(|&(dr, dc)| ((dr * dr + dc * dc) as f64).sqrt() <= radius_cells + 1e-9)
        .collect();
    let obstacle = |r: isize, c: isize| r < 0 || c < 0 || r >= h || c >= w || grid.cells[(r * w + c) as usize] != FREE;
    let mut blocked = vec![false; grid.cells.len()];
    for r in 0..h {
        for c in 0..w {
            let i = (r * w + c) as usize;
            if obstacle(r, c) {
                blocked[i] = true;
                continue;
            }
            blocked[i] = offsets.iter().any(|&(dr, dc)| obstacle(r + dr, c + dc));
        }
    }
    blocked
}

impl NavGrid {
    pub(crate) fn new(grid: &OccupancyGrid, frame: WorldFrame, robot_radius: f64) -> Self {
        let radius_cells = robot_radius / frame.resolution;
        Self {
            width: grid.width,
            height: grid.height,
            frame,
            blocked: inflate(grid, radius_cells),
            margin: inflate(grid, radius_cells + 1.0),
        }
    }

    pub(crate) fn cell_of(&self, p: Point2) -> Option<Cell> {
        self.frame.world_to_cell(p, self.height, self.width)
    }

    fn center(&self, cell: Cell) -> Point2 {
        self.frame.cell_to_world(cell.0, cell.1)
    }

    fn is_blocked_cell(&self, cell: Cell) -> bool {
        self.blocked[cell.0 * self.width + cell.1]
    }

    /// Outside the map counts as blocked.
    pub(crate) fn is_blocked(&self, p: Point2) -> bool {
        self.cell_of(p).is_none_or(|c| self.is_blocked_cell(c))
    }

    fn successors(&self, cell: Cell) -> Vec<(Cell, u32)> {
        let (r, c) = (cell.0 as isize, cell.1 as isize);
        let free = |rr: isize, cc: isize| {
            rr >= 0
                && cc >= 0
                && (rr as usize) < self.height
                && (cc as usize) < self.width
                && !self.blocked[rr as usize * self.width + cc as usize]
        };
        let mut out = Vec::with_capacity(8);
        for dr in -1isize..=1 {
            for dc in -1isize..=1 {
                if (dr, dc) == (0, 0) || !free(r + dr, c + dc) {
                    continue;
                }
                let diagonal = dr != 0 && dc != 0;
                if diagonal && !(free(r + dr, c) && free(r, c + dc)) {
                    continue;
                }
                out.push((((r + dr) as usize, (c + dc) as usize), if diagonal { 14 } else { 10 }));
            }
        }
        out
    }

    /// Whether every point sampled along `a -> b` lies in a cell clear of the margin grid.
    fn line_clear(&self, a: Point2, b: Point2) -> bool {
        let samples = (a.distance(b) / (0.25 * self.frame.resolution)).ceil().max(1.0) as usize;
        (0..=samples).all(|k| {
            let t = k as f64 / samples as f64;
            let p = Point2::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
            self.cell_of(p).is_some_and(|c| !self.margin[c.0 * self.width + c.1])
        })
    }

    /// Collision-free polyline from `from` to `to`, both included, or `None`
    /// when `to` is blocked or unreachable.
    pub(crate) fn plan(&self, from: Point2, to: Point2) -> Option<Vec<Point2>> {
        let start = self.cell_of(from)?;
        let goal = self.cell_of(to)?;
        if self.is_blocked_cell(goal) {
            return None;
        }
        let octile = |c: &Cell| {
            let (dr, dc) = (c.0.abs_diff(goal.0) as u32, c.1.abs_diff(goal.1) as u32);
            10 * dr.max(dc) + 4 * dr.min(dc)
        };
        let (cells, _) = astar(&start, |&c| self.successors(c), octile, |&c| c == goal)?;
        Some(self.shortcut(from, &cells, to))
    }

    /// Reachable cell center closest to `to`, for goals that cannot be reached.
    pub(crate) fn nearest_reachable(&self, from: Point2, to: Point2) -> Option<Point2> {
        let start = self.cell_of(from)?;
        let (gr, gc) = self.frame.world_to_cell_f(to);
        let key = |c: &Cell| {
            let (dr, dc) = (c.0 as f64 - gr, c.1 as f64 - gc);
            dr * dr + dc * dc
        };
        bfs_reach(start, |&c| self.successors(c).into_iter().map(|(n, _)| n))
            .min_by(|a, b| key(a).total_cmp(&key(b)).then(a.cmp(b)))
            .map(|c| if c == start { from } else { self.center(c) })
    }

    fn shortcut(&self, from: Point2, cells: &[Cell], to: Point2) -> Vec<Point2> {
        let mut pts: Vec<Point2> = cells.iter().map(|&c| self.center(c)).collect();
        pts[0] = from;
        *pts.last_mut().expect("astar path is nonempty") = to;
        if pts.len() == 1 {
            // Same cell: drive straight to the goal inside it.
            return if from == to { vec![from] } else { vec![from, to] };
        }
        let mut out = vec![pts[0]];
        let mut i = 0;
        while i + 1 < pts.len() {
            let mut j = i + 1;
            for k in (i + 2..pts.len()).rev() {
                if self.line_clear(pts[i], pts[k]) {
                    j = k;
                    break;
                }
            }
            out.push(pts[j]);
            i = j;
        }
        out
    }
}

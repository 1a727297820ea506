//! Seeded tri-level test maps: free interior, a two-pixel occupied wall and an
//! unknown exterior with sparse stray returns.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::geometry::Point2;
use crate::map_io::OccupancyGrid;
use crate::{FREE, OCCUPIED, UNKNOWN};

pub const MIN_MAP_SIDE: usize = 20;
pub const MAX_MAP_SIDE: usize = 8192;
const WALL: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapShape {
    /// Rectangle with one quadrant removed.
    LRoom,
    /// Straight corridor of the given width in pixels.
    Corridor { width: usize },
    /// Corridor with perpendicular side corridors of the same width.
    Branching { width: usize },
    /// Ring between two concentric circles.
    Annulus,
    /// Overlapping random rectangles.
    Rooms,
}

impl std::str::FromStr for MapShape {
    type Err = String;

    /// `l-room`, `corridor[:W]`, `branching[:W]`, `annulus`, `rooms`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let width = || -> Result<usize, String> {
            arg.map_or(Ok(24), |a| a.parse().map_err(|_| format!("bad corridor width `{a}`")))
        };
        match name {
            "l-room" => Ok(MapShape::LRoom),
            "corridor" => Ok(MapShape::Corridor { width: width()? }),
            "branching" => Ok(MapShape::Branching { width: width()? }),
            "annulus" => Ok(MapShape::Annulus),
            "rooms" => Ok(MapShape::Rooms),
            other => Err(format!(
                "unknown map shape `{other}` (expected l-room, corridor[:W], branching[:W], annulus, rooms)"
            )),
        }
    }
}

struct Canvas {
    w: usize,
    h: usize,
    free: Vec<bool>,
}

impl Canvas {
    fn rect(&mut self, r0: usize, r1: usize, c0: usize, c1: usize, value: bool) {
        for r in r0.min(self.h)..r1.min(self.h) {
            for c in c0.min(self.w)..c1.min(self.w) {
                self.free[r * self.w + c] = value;
            }
        }
    }
}

/// Deterministic map of `width x height` pixels with origin at `(0, 0)`.
pub fn generate_synthetic_map(
    shape: MapShape,
    width: usize,
    height: usize,
    resolution: f64,
    seed: u64,
) -> Result<OccupancyGrid, SimError> {
    if !(MIN_MAP_SIDE..=MAX_MAP_SIDE).contains(&width) || !(MIN_MAP_SIDE..=MAX_MAP_SIDE).contains(&height) {
        return Err(SimError::Degenerate(format!(
            "map sides must be within {MIN_MAP_SIDE}..={MAX_MAP_SIDE} pixels, got {width}x{height}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut canvas = Canvas {
        w: width,
        h: height,
        free: vec![false; width * height],
    };
    // Interior bounds leave an unknown margin plus room for the wall.
    let (mr, mc) = ((height / 10).max(WALL + 1), (width / 10).max(WALL + 1));
    let (r0, r1, c0, c1) = (mr, height - mr, mc, width - mc);
    let (ih, iw) = (r1 - r0, c1 - c0);
    match shape {
        MapShape::LRoom => {
            canvas.rect(r0, r1, c0, c1, true);
            canvas.rect(r0, r0 + ih / 2, c0 + iw / 2, c1, false);
        }
        MapShape::Corridor { width: cw } | MapShape::Branching { width: cw } => {
            if cw == 0 || cw > ih {
                return Err(SimError::Degenerate(format!(
                    "corridor width {cw} does not fit in {ih} interior rows"
                )));
            }
            let branching = matches!(shape, MapShape::Branching { .. });
            let top = if branching { r1 - cw } else { r0 + (ih - cw) / 2 };
            canvas.rect(top, top + cw, c0, c1, true);
            if branching {
                let gap = 3 * cw;
                let mut c = c0 + cw;
                while c + cw <= c1 {
                    canvas.rect(r0, top, c, c + cw, true);
                    c += gap;
                }
            }
        }
        MapShape::Annulus => {
            let (cr, cc) = ((r0 + r1) as f64 / 2.0, (c0 + c1) as f64 / 2.0);
            let outer = ih.min(iw) as f64 / 2.0;
            let inner = outer * 0.45;
            if outer - inner < 2.0 {
                return Err(SimError::Degenerate("annulus too thin for the map size".into()));
            }
            for r in r0..r1 {
                for c in c0..c1 {
                    let d = (r as f64 + 0.5 - cr).hypot(c as f64 + 0.5 - cc);
                    canvas.free[r * width + c] = d >= inner && d < outer;
                }
            }
        }
        MapShape::Rooms => {
            // Each room is centered inside the previous one, so the union stays connected.
            let (mut cr, mut cc) = ((r0 + r1) / 2, (c0 + c1) / 2);
            for _ in 0..rng.random_range(3..=6) {
                let rh = rng.random_range(ih / 5..=ih / 2).max(2);
                let rw = rng.random_range(iw / 5..=iw / 2).max(2);
                let top = cr.saturating_sub(rh / 2).clamp(r0, r1 - rh);
                let left = cc.saturating_sub(rw / 2).clamp(c0, c1 - rw);
                canvas.rect(top, top + rh, left, left + rw, true);
                cr = rng.random_range(top..top + rh);
                cc = rng.random_range(left..left + rw);
            }
        }
    }

    let mut cells = vec![UNKNOWN; width * height];
    for (cell, &f) in cells.iter_mut().zip(&canvas.free) {
        if f {
            *cell = FREE;
        }
    }
    let near_free = |r: usize, c: usize, reach: usize| {
        let rs = r.saturating_sub(reach)..(r + reach + 1).min(height);
        rs.into_iter()
            .any(|rr| (c.saturating_sub(reach)..(c + reach + 1).min(width)).any(|cc| canvas.free[rr * width + cc]))
    };
    for r in 0..height {
        for c in 0..width {
            if canvas.free[r * width + c] {
                continue;
            }
            if near_free(r, c, WALL) {
                cells[r * width + c] = OCCUPIED;
            } else if !near_free(r, c, WALL + 2) && rng.random_bool(0.01) {
                // Stray sensor returns beyond the wall.
                cells[r * width + c] = if rng.random_bool(0.5) { FREE } else { OCCUPIED };
            }
        }
    }
    OccupancyGrid::new(width, height, resolution, Point2::default(), cells)
        .map_err(|e| SimError::Degenerate(e.to_string()))
}

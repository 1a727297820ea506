//! Zhang–Suen thinning.
//!
//! Each sub-iteration first collects deletion candidates against the image as
//! it stood at the start of the sub-iteration (the classic parallel rule), then
//! deletes them in raster order, skipping any candidate that is no longer a
//! simple point in the partially updated image. The re-check keeps components
//! from vanishing (2x2 blocks, two-pixel diagonals) and leaves the classic
//! result unchanged wherever simultaneous deletion was already safe.
//!
//! Only pixels touching the background can be deleted, so the candidate scan
//! is restricted to a running border list instead of the whole raster.
//!
//! A final pass removes redundant pixels from any remaining fully set 2x2
//! block when one of them is a simple point.

use std::sync::OnceLock;

use crate::map_io::OccupancyGrid;
use crate::par::{filter_copied, Exec};
use crate::{FREE, OCCUPIED};

/// Binary image with a one-pixel background border.
struct Padded {
    stride: usize,
    bits: Vec<u8>,
}

impl Padded {
    fn from_grid(grid: &OccupancyGrid) -> Self {
        let stride = grid.width + 2;
        let mut bits = vec![0u8; stride * (grid.height + 2)];
        for r in 0..grid.height {
            for c in 0..grid.width {
                bits[(r + 1) * stride + c + 1] = u8::from(grid.get(r, c) == FREE);
            }
        }
        Self { stride, bits }
    }

    /// Neighbors in Zhang–Suen order P2..P9: N, NE, E, SE, S, SW, W, NW.
    #[inline]
    fn ring(&self, p: usize) -> [u8; 8] {
        let s = self.stride;
        let b = &self.bits;
        [
            b[p - s],
            b[p - s + 1],
            b[p + 1],
            b[p + s + 1],
            b[p + s],
            b[p + s - 1],
            b[p - 1],
            b[p - s - 1],
        ]
    }

    #[inline]
    fn neighbor_offsets(&self) -> [isize; 8] {
        let s = self.stride as isize;
        [-s, -s + 1, 1, s + 1, s, s - 1, -1, -s - 1]
    }
}

/// `(B, A)`: number of set neighbors and number of 0 -> 1 transitions around the ring.
#[inline]
fn counts(n: &[u8; 8]) -> (u8, u8) {
    let b = n.iter().sum();
    let a = (0..8).filter(|&i| n[i] == 0 && n[(i + 1) % 8] == 1).count() as u8;
    (b, a)
}

#[inline]
fn is_candidate(n: &[u8; 8], first: bool) -> bool {
    let (b, a) = counts(n);
    if !(2..=6).contains(&b) || a != 1 {
        return false;
    }
    let [p2, _, p4, _, p6, _, p8, _] = *n;
    if first {
        p2 * p4 * p6 == 0 && p4 * p6 * p8 == 0
    } else {
        p2 * p4 * p8 == 0 && p2 * p6 * p8 == 0
    }
}

#[inline]
fn ring_code(n: &[u8; 8]) -> usize {
    n.iter().enumerate().fold(0, |acc, (i, &b)| acc | (usize::from(b) << i))
}

/// [`is_simple`] for all 256 neighborhoods.
fn simple_table() -> &'static [bool; 256] {
    static TABLE: OnceLock<[bool; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [false; 256];
        for (code, slot) in table.iter_mut().enumerate() {
            let n: [u8; 8] = std::array::from_fn(|i| ((code >> i) & 1) as u8);
            *slot = is_simple(&n);
        }
        table
    })
}

/// Simple-point test with 8-connected foreground and 4-connected background.
fn is_simple(n: &[u8; 8]) -> bool {
    // Ring positions: even = edge neighbors (N, E, S, W), odd = corners.
    let fg_adjacent = |i: usize, j: usize| {
        let d = (i + 8 - j) % 8;
        d == 1 || d == 7 || ((d == 2 || d == 6) && i.is_multiple_of(2) && j.is_multiple_of(2))
    };
    let bg_adjacent = |i: usize, j: usize| {
        let d = (i + 8 - j) % 8;
        d == 1 || d == 7
    };
    let components = |want: u8, adjacent: &dyn Fn(usize, usize) -> bool, need_edge: bool| {
        let mut seen = [false; 8];
        let mut count = 0;
        for start in 0..8 {
            if n[start] != want || seen[start] {
                continue;
            }
            let mut stack = vec![start];
            seen[start] = true;
            let mut touches_edge = false;
            while let Some(i) = stack.pop() {
                touches_edge |= i % 2 == 0;
                for j in 0..8 {
                    if !seen[j] && n[j] == want && adjacent(i, j) {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            if !need_edge || touches_edge {
                count += 1;
            }
        }
        count
    };
    components(1, &fg_adjacent, false) == 1 && components(0, &bg_adjacent, true) == 1
}

/// Thins the free space of a bi-level map to a one-pixel-wide skeleton.
pub fn zhang_suen(grid: &OccupancyGrid, exec: Exec) -> OccupancyGrid {
    let mut img = Padded::from_grid(grid);
    let offsets = img.neighbor_offsets();
    let stride = img.stride;
    let mut in_border = vec![false; img.bits.len()];
    let mut border: Vec<usize> = Vec::new();
    for r in 1..=grid.height {
        for c in 1..=grid.width {
            let p = r * stride + c;
            if img.bits[p] == 1 && img.ring(p).contains(&0) {
                in_border[p] = true;
                border.push(p);
            }
        }
    }

    let simple = simple_table();
    let mut deleted = Vec::new();
    loop {
        let mut changed = false;
        for first in [true, false] {
            let candidates = {
                let snapshot = &img;
                filter_copied(&border, exec, |p| is_candidate(&snapshot.ring(p), first))
            };
            deleted.clear();
            for p in candidates {
                if simple[ring_code(&img.ring(p))] {
                    img.bits[p] = 0;
                    deleted.push(p);
                }
            }
            if deleted.is_empty() {
                continue;
            }
            changed = true;
            let before = border.len();
            for &p in &deleted {
                for off in offsets {
                    let q = (p as isize + off) as usize;
                    if img.bits[q] == 1 && !in_border[q] {
                        in_border[q] = true;
                        border.push(q);
                    }
                }
            }
            border.retain(|&p| img.bits[p] == 1);
            if border.len() != before {
                border.sort_unstable();
            }
        }
        if !changed {
            break;
        }
    }

    // Clear leftover 2x2 blocks where a simple, non-end pixel can go.
    loop {
        let mut changed = false;
        for r in 1..grid.height {
            for c in 1..grid.width {
                let tl = r * stride + c;
                let block = [tl, tl + 1, tl + stride, tl + stride + 1];
                if block.iter().any(|&p| img.bits[p] == 0) {
                    continue;
                }
                for p in block {
                    let n = img.ring(p);
                    if n.iter().sum::<u8>() >= 2 && simple[ring_code(&n)] {
                        img.bits[p] = 0;
                        changed = true;
                        break;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut cells = vec![OCCUPIED; grid.cells.len()];
    for r in 0..grid.height {
        for c in 0..grid.width {
            if img.bits[(r + 1) * stride + c + 1] == 1 {
                cells[r * grid.width + c] = FREE;
            }
        }
    }
    grid.with_cells(cells)
}

//! Largest free region with its holes filled.
//!
//! Free pixels are grouped into 8-connected components. A component's filled
//! region is everything not reachable from outside its bounding box through
//! 4-connected non-component pixels, which is what filling its external
//! boundary produces. The component with the largest filled area wins; ties
//! go to the component found first in raster order.

use crate::map_io::OccupancyGrid;
use crate::{FREE, OCCUPIED};

const NO_LABEL: u32 = u32::MAX;

struct Component {
    label: u32,
    row0: usize,
    row1: usize,
    col0: usize,
    col1: usize,
}

fn label_free_components(grid: &OccupancyGrid) -> (Vec<u32>, Vec<Component>) {
    let (w, h) = (grid.width, grid.height);
    let mut labels = vec![NO_LABEL; w * h];
    let mut components = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if grid.cells[start] != FREE || labels[start] != NO_LABEL {
            continue;
        }
        let label = components.len() as u32;
        let (r, c) = (start / w, start % w);
        let mut comp = Component {
            label,
            row0: r,
            row1: r,
            col0: c,
            col1: c,
        };
        labels[start] = label;
        stack.push(start);
        while let Some(idx) = stack.pop() {
            let (r, c) = (idx / w, idx % w);
            comp.row0 = comp.row0.min(r);
            comp.row1 = comp.row1.max(r);
            comp.col0 = comp.col0.min(c);
            comp.col1 = comp.col1.max(c);
            for dr in -1isize..=1 {
                for dc in -1isize..=1 {
                    let (rr, cc) = (r as isize + dr, c as isize + dc);
                    if rr < 0 || cc < 0 || rr >= h as isize || cc >= w as isize {
                        continue;
                    }
                    let n = rr as usize * w + cc as usize;
                    if grid.cells[n] == FREE && labels[n] == NO_LABEL {
                        labels[n] = label;
                        stack.push(n);
                    }
                }
            }
        }
        components.push(comp);
    }
    (labels, components)
}

/// Marks cells of the padded bounding box reachable from its border without
/// crossing the component. Returns `(outside mask, box height, box width)`;
/// the box has one pixel of padding on each side.
fn outside_mask(comp: &Component, labels: &[u32], width: usize) -> (Vec<bool>, usize, usize) {
    let bh = comp.row1 - comp.row0 + 3;
    let bw = comp.col1 - comp.col0 + 3;
    let in_comp = |br: usize, bc: usize| {
        if br == 0 || bc == 0 || br == bh - 1 || bc == bw - 1 {
            return false;
        }
        let (r, c) = (comp.row0 + br - 1, comp.col0 + bc - 1);
        labels[r * width + c] == comp.label
    };
    let mut outside = vec![false; bh * bw];
    let mut stack = vec![0usize];
    outside[0] = true;
    while let Some(idx) = stack.pop() {
        let (br, bc) = (idx / bw, idx % bw);
        let mut visit = |nr: usize, nc: usize| {
            let n = nr * bw + nc;
            if !outside[n] && !in_comp(nr, nc) {
                outside[n] = true;
                stack.push(n);
            }
        };
        if br > 0 {
            visit(br - 1, bc);
        }
        if br + 1 < bh {
            visit(br + 1, bc);
        }
        if bc > 0 {
            visit(br, bc - 1);
        }
        if bc + 1 < bw {
            visit(br, bc + 1);
        }
    }
    (outside, bh, bw)
}

/// Returns a map whose only free space is the filled largest free region,
/// or `None` if the map has no free cell.
pub fn fill_largest_region(grid: &OccupancyGrid) -> Option<OccupancyGrid> {
    let (labels, components) = label_free_components(grid);
    let mut best: Option<(usize, usize)> = None;
    for (i, comp) in components.iter().enumerate() {
        let (outside, _, _) = outside_mask(comp, &labels, grid.width);
        let area = outside.iter().filter(|&&o| !o).count();
        if best.is_none_or(|(_, a)| area > a) {
            best = Some((i, area));
        }
    }
    let (winner, _) = best?;
    let comp = &components[winner];
    let (outside, bh, bw) = outside_mask(comp, &labels, grid.width);
    let mut cells = vec![OCCUPIED; grid.cells.len()];
    for br in 1..bh - 1 {
        for bc in 1..bw - 1 {
            if !outside[br * bw + bc] {
                let (r, c) = (comp.row0 + br - 1, comp.col0 + bc - 1);
                cells[r * grid.width + c] = FREE;
            }
        }
    }
    Some(grid.with_cells(cells))
}

use crate::map_io::OccupancyGrid;
use crate::par::{for_each_row_mut, Exec};
use crate::{FREE, OCCUPIED};

/// Unit-sum 1D Gaussian taps for offsets `-3σ..=3σ`.
pub fn gaussian_kernel(sigma: u32) -> Vec<f64> {
    let sigma = f64::from(sigma.max(1));
    let radius = (3.0 * sigma) as i64;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|w| w / sum).collect()
}

/// Separable Gaussian blur with edge replication, rounded back to 8 bits.
pub fn gaussian_smooth(grid: &OccupancyGrid, sigma: u32, exec: Exec) -> OccupancyGrid {
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as isize;
    let (w, h) = (grid.width, grid.height);
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;

    let mut horizontal = vec![0.0f64; w * h];
    for_each_row_mut(&mut horizontal, w, exec, |i, row| {
        let src = &grid.cells[i * w..(i + 1) * w];
        for (j, out) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (t, &weight) in kernel.iter().enumerate() {
                let jj = clamp(j as isize + t as isize - radius, w);
                acc += weight * f64::from(src[jj]);
            }
            *out = acc;
        }
    });

    let mut cells = vec![0u8; w * h];
    for_each_row_mut(&mut cells, w, exec, |i, row| {
        for (j, out) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (t, &weight) in kernel.iter().enumerate() {
                let ii = clamp(i as isize + t as isize - radius, h);
                acc += weight * horizontal[ii * w + j];
            }
            *out = acc.round().clamp(0.0, 255.0) as u8;
        }
    });
    grid.with_cells(cells)
}

/// Binary erosion of free space by a `k x k` square of ones.
///
/// The window covering pixel `(i, j)` spans rows `i - k/2 .. i - k/2 + k`
/// (same for columns), so for even `k` it reaches one pixel further towards
/// the top-left. Pixels outside the map count as occupied.
pub fn erode(grid: &OccupancyGrid, k: usize, exec: Exec) -> OccupancyGrid {
    let k = k.max(1);
    let (w, h) = (grid.width, grid.height);
    // Summed-area table of free cells, (h + 1) x (w + 1).
    let stride = w + 1;
    let mut table = vec![0u32; (h + 1) * stride];
    for i in 0..h {
        let mut run = 0u32;
        for j in 0..w {
            run += u32::from(grid.cells[i * w + j] == FREE);
            table[(i + 1) * stride + j + 1] = table[i * stride + j + 1] + run;
        }
    }
    let anchor = k / 2;
    let full = (k * k) as u32;
    let mut cells = vec![OCCUPIED; w * h];
    for_each_row_mut(&mut cells, w, exec, |i, row| {
        if i < anchor || i - anchor + k > h {
            return;
        }
        let (r0, r1) = (i - anchor, i - anchor + k);
        for (j, out) in row.iter_mut().enumerate() {
            if j < anchor || j - anchor + k > w {
                continue;
            }
            let (c0, c1) = (j - anchor, j - anchor + k);
            let count =
                table[r1 * stride + c1] + table[r0 * stride + c0] - table[r0 * stride + c1] - table[r1 * stride + c0];
            if count == full {
                *out = FREE;
            }
        }
    });
    grid.with_cells(cells)
}

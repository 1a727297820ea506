//! Occupancy maps on disk: binary PGM (P5) images plus a `key = value` sidecar.
//!
//! Row 0 of the image is the top row; cells are stored row-major and addressed
//! as `(row, col)`. Loading a navigation map enforces the tri-level encoding
//! (0 occupied, 128 unknown, 255 free). Stage dumps may carry any 8-bit value
//! and are read back with [`load_stage`].

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{AxisConvention, Point2, WorldFrame};
use crate::{FREE, OCCUPIED, UNKNOWN};

#[derive(Debug, Error)]
pub enum MapIoError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed PGM: {0}")]
    Format(String),
    #[error("cell ({row}, {col}) has value {value}, expected one of 0, 128, 255")]
    Validation { row: usize, col: usize, value: u8 },
    #[error("metadata: {0}")]
    Schema(String),
    #[error("invalid map geometry: {0}")]
    Geometry(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> MapIoError + '_ {
    move |source| MapIoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Resolution, origin and a free-text name of a map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapMetadata {
    /// Meters per pixel.
    pub resolution: f64,
    /// World position of pixel `(0, 0)`, in meters.
    pub origin: Point2,
    pub name: String,
}

impl MapMetadata {
    pub fn new(resolution: f64, origin: Point2, name: impl Into<String>) -> Result<Self, MapIoError> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(MapIoError::Schema(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        if !(origin.x.is_finite() && origin.y.is_finite()) {
            return Err(MapIoError::Schema("origin must be finite".into()));
        }
        Ok(Self {
            resolution,
            origin,
            name: name.into(),
        })
    }

    /// Parses the sidecar format: one `key = value` per line, `#` starts a comment.
    ///
    /// `resolution`, `origin_x` and `origin_y` are required; `name` is optional.
    /// Unrecognized keys are ignored.
    pub fn parse(text: &str) -> Result<Self, MapIoError> {
        let mut resolution = None;
        let mut origin_x = None;
        let mut origin_y = None;
        let mut name = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| MapIoError::Schema(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let number = || {
                value
                    .parse::<f64>()
                    .map_err(|_| MapIoError::Schema(format!("line {}: `{key}` is not a number", lineno + 1)))
            };
            match key {
                "resolution" => resolution = Some(number()?),
                "origin_x" => origin_x = Some(number()?),
                "origin_y" => origin_y = Some(number()?),
                "name" => name = value.to_string(),
                _ => {}
            }
        }
        let missing = |k: &str| MapIoError::Schema(format!("missing field `{k}`"));
        let resolution = resolution.ok_or_else(|| missing("resolution"))?;
        let origin = Point2::new(
            origin_x.ok_or_else(|| missing("origin_x"))?,
            origin_y.ok_or_else(|| missing("origin_y"))?,
        );
        Self::new(resolution, origin, name)
    }

    pub fn to_sidecar(&self) -> String {
        let mut out = String::new();
        if !self.name.is_empty() {
            let _ = writeln!(out, "name = {}", self.name.replace(['\n', '#'], " "));
        }
        let _ = writeln!(out, "resolution = {}", self.resolution);
        let _ = writeln!(out, "origin_x = {}", self.origin.x);
        let _ = writeln!(out, "origin_y = {}", self.origin.y);
        out
    }
}

/// A row-major 8-bit occupancy raster with its metric placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    pub width: usize,
    pub height: usize,
    /// Meters per pixel.
    pub resolution: f64,
    pub origin: Point2,
    pub cells: Vec<u8>,
}

impl OccupancyGrid {
    /// Builds a grid, checking dimensions and resolution. Cell values are not
    /// restricted; see [`OccupancyGrid::validate_tri_level`].
    pub fn new(
        width: usize,
        height: usize,
        resolution: f64,
        origin: Point2,
        cells: Vec<u8>,
    ) -> Result<Self, MapIoError> {
        if width == 0 || height == 0 {
            return Err(MapIoError::Geometry(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(MapIoError::Geometry(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        let expected = width
            .checked_mul(height)
            .ok_or_else(|| MapIoError::Geometry(format!("dimensions {width}x{height} overflow")))?;
        if cells.len() != expected {
            return Err(MapIoError::Geometry(format!(
                "{} cells for a {width}x{height} map",
                cells.len()
            )));
        }
        Ok(Self {
            width,
            height,
            resolution,
            origin,
            cells,
        })
    }

    /// A grid of identical cells.
    pub fn filled(width: usize, height: usize, meta: &MapMetadata, value: u8) -> Result<Self, MapIoError> {
        Self::new(
            width,
            height,
            meta.resolution,
            meta.origin,
            vec![value; width.saturating_mul(height)],
        )
    }

    /// Same geometry, new cells. `cells` must have the same length.
    pub fn with_cells(&self, cells: Vec<u8>) -> Self {
        assert_eq!(cells.len(), self.cells.len(), "cell buffer size mismatch");
        Self { cells, ..self.clone() }
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.cells[self.index(row, col)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        let idx = self.index(row, col);
        self.cells[idx] = value;
    }

    /// Number of pixels, `H * W`.
    pub fn pixel_count(&self) -> usize {
        self.cells.len()
    }

    pub fn count_value(&self, value: u8) -> usize {
        self.cells.iter().filter(|&&c| c == value).count()
    }

    pub fn metadata(&self, name: impl Into<String>) -> MapMetadata {
        MapMetadata {
            resolution: self.resolution,
            origin: self.origin,
            name: name.into(),
        }
    }

    pub fn frame(&self, axis: AxisConvention) -> WorldFrame {
        WorldFrame::new(self.resolution, self.origin, axis)
    }

    /// Checks that every cell is 0, 128 or 255, reporting the first offender.
    pub fn validate_tri_level(&self) -> Result<(), MapIoError> {
        match self.cells.iter().position(|&c| !matches!(c, OCCUPIED | UNKNOWN | FREE)) {
            Some(idx) => Err(MapIoError::Validation {
                row: idx / self.width,
                col: idx % self.width,
                value: self.cells[idx],
            }),
            None => Ok(()),
        }
    }
}

fn skip_whitespace_and_comments(bytes: &[u8], pos: &mut usize) {
    while *pos < bytes.len() {
        match bytes[*pos] {
            b'#' => {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            }
            b if b.is_ascii_whitespace() => *pos += 1,
            _ => break,
        }
    }
}

fn read_header_uint(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize, MapIoError> {
    skip_whitespace_and_comments(bytes, pos);
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if start == *pos {
        return Err(MapIoError::Format(format!("expected {what}")));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| MapIoError::Format(format!("{what} out of range")))
}

/// Decodes a binary PGM with maxval 255 into `(width, height, cells)`.
///
/// The payload must hold exactly `width * height` bytes.
pub fn decode_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>), MapIoError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(MapIoError::Format("missing P5 magic number".into()));
    }
    let mut pos = 2;
    let width = read_header_uint(bytes, &mut pos, "width")?;
    let height = read_header_uint(bytes, &mut pos, "height")?;
    let maxval = read_header_uint(bytes, &mut pos, "maxval")?;
    if maxval != 255 {
        return Err(MapIoError::Format(format!("maxval must be 255, got {maxval}")));
    }
    if width == 0 || height == 0 {
        return Err(MapIoError::Format(format!(
            "dimensions must be positive, got {width}x{height}"
        )));
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(MapIoError::Format("missing whitespace after maxval".into())),
    }
    let payload = &bytes[pos..];
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| MapIoError::Format("dimensions overflow".into()))?;
    if payload.len() != expected {
        return Err(MapIoError::Format(format!(
            "header declares {width}x{height} = {expected} bytes, payload has {}",
            payload.len()
        )));
    }
    Ok((width, height, payload.to_vec()))
}

pub fn encode_pgm(width: usize, height: usize, cells: &[u8]) -> Vec<u8> {
    let header = format!("P5\n{width} {height}\n255\n");
    let mut out = Vec::with_capacity(header.len() + cells.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(cells);
    out
}

pub fn load_metadata(path: &Path) -> Result<MapMetadata, MapIoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    MapMetadata::parse(&text)
}

fn load_unvalidated(image_path: &Path, metadata_path: &Path) -> Result<(OccupancyGrid, MapMetadata), MapIoError> {
    let bytes = fs::read(image_path).map_err(io_err(image_path))?;
    let (width, height, cells) = decode_pgm(&bytes)?;
    let meta = load_metadata(metadata_path)?;
    let grid = OccupancyGrid::new(width, height, meta.resolution, meta.origin, cells)?;
    Ok((grid, meta))
}

/// Loads a navigation map, requiring tri-level cells.
pub fn load_map(image_path: &Path, metadata_path: &Path) -> Result<(OccupancyGrid, MapMetadata), MapIoError> {
    let (grid, meta) = load_unvalidated(image_path, metadata_path)?;
    grid.validate_tri_level()?;
    Ok((grid, meta))
}

/// Loads a stage dump; any 8-bit cell value is accepted.
pub fn load_stage(image_path: &Path, metadata_path: &Path) -> Result<(OccupancyGrid, MapMetadata), MapIoError> {
    load_unvalidated(image_path, metadata_path)
}

/// Writes `grid` to `image_path` and its metadata to `metadata_path`.
pub fn save_map(grid: &OccupancyGrid, name: &str, image_path: &Path, metadata_path: &Path) -> Result<(), MapIoError> {
    fs::write(image_path, encode_pgm(grid.width, grid.height, &grid.cells)).map_err(io_err(image_path))?;
    fs::write(metadata_path, grid.metadata(name).to_sidecar()).map_err(io_err(metadata_path))?;
    Ok(())
}

/// Sidecar path written next to a stage image: `<stage>.meta`.
pub fn stage_metadata_path(out_dir: &Path, stage_name: &str) -> PathBuf {
    out_dir.join(format!("{stage_name}.meta"))
}

/// Writes `<out_dir>/<stage_name>.pgm` plus its sidecar and returns the image path.
/// `out_dir` is created if missing.
pub fn save_stage(grid: &OccupancyGrid, stage_name: &str, out_dir: &Path) -> Result<PathBuf, MapIoError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let image = out_dir.join(format!("{stage_name}.pgm"));
    save_map(grid, stage_name, &image, &stage_metadata_path(out_dir, stage_name))?;
    Ok(image)
}

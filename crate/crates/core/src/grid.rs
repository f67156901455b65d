//! BEV grid geometry, semantic grids and their on-disk forms.
//!
//! Cell `(row, col)` covers ego-frame `x ∈ [h - (row+1)·res, h - row·res]`,
//! `y ∈ [h - (col+1)·res, h - col·res]` with `h = extent / 2`: row 0 is the
//! far front edge, column 0 the far left edge (forward is "up" when the grid
//! is viewed as an image).
//!
//! `BEVG` layout (little endian):
//!
//! ```text
//! magic      4 bytes  "BEVG"
//! side       u16      cells per side
//! n_classes  u8
//! names      n_classes × (u8 length, UTF-8 bytes)
//! planes     n_classes × ceil(side²/8) bytes, row-major bits, MSB first
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::annotation::SemanticClass;
use crate::error::{read_file, write_file, Error, Result};

pub const BEVG_MAGIC: &[u8; 4] = b"BEVG";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpecRecord", into = "GridSpecRecord")]
pub struct GridSpec {
    extent: f64,
    resolution: f64,
    cells: usize,
}

#[derive(Serialize, Deserialize)]
struct GridSpecRecord {
    extent: f64,
    resolution: f64,
    #[serde(default)]
    cells_per_side: Option<usize>,
}

impl TryFrom<GridSpecRecord> for GridSpec {
    type Error = Error;

    fn try_from(r: GridSpecRecord) -> Result<Self> {
        let spec = GridSpec::new(r.extent, r.resolution)?;
        match r.cells_per_side {
            Some(n) if n != spec.cells => Err(Error::Validation(format!(
                "cells_per_side {n} disagrees with extent/resolution = {}",
                spec.cells
            ))),
            _ => Ok(spec),
        }
    }
}

impl From<GridSpec> for GridSpecRecord {
    fn from(s: GridSpec) -> Self {
        GridSpecRecord {
            extent: s.extent,
            resolution: s.resolution,
            cells_per_side: Some(s.cells),
        }
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            extent: 100.0,
            resolution: 0.5,
            cells: 200,
        }
    }
}

impl GridSpec {
    pub fn new(extent: f64, resolution: f64) -> Result<Self> {
        if !(extent.is_finite() && resolution.is_finite() && extent > 0.0 && resolution > 0.0) {
            return Err(Error::Validation(format!(
                "grid extent {extent} and resolution {resolution} must be positive"
            )));
        }
        let ratio = extent / resolution;
        let cells = ratio.round();
        if (ratio - cells).abs() > 1e-9 * ratio.max(1.0) || cells < 1.0 {
            return Err(Error::Validation(format!(
                "extent {extent} is not an integer multiple of resolution {resolution}"
            )));
        }
        if cells > u16::MAX as f64 {
            return Err(Error::Validation(format!("{cells} cells per side is too large")));
        }
        Ok(GridSpec {
            extent,
            resolution,
            cells: cells as usize,
        })
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn cells_per_side(&self) -> usize {
        self.cells
    }

    pub fn total_cells(&self) -> usize {
        self.cells * self.cells
    }

    /// Ego-frame `(x, y)` of a cell center.
    pub fn cell_center(&self, row: usize, col: usize) -> [f64; 2] {
        let h = 0.5 * self.extent;
        [
            h - (row as f64 + 0.5) * self.resolution,
            h - (col as f64 + 0.5) * self.resolution,
        ]
    }

    /// Inclusive row range whose centers can satisfy `x ∈ [lo, hi]`,
    /// clamped to the grid; `None` when empty.
    pub fn rows_covering(&self, lo: f64, hi: f64) -> Option<(usize, usize)> {
        self.index_span(lo, hi)
    }

    /// Same as [`GridSpec::rows_covering`] for the y axis.
    pub fn cols_covering(&self, lo: f64, hi: f64) -> Option<(usize, usize)> {
        self.index_span(lo, hi)
    }

    fn index_span(&self, lo: f64, hi: f64) -> Option<(usize, usize)> {
        // center(i) = h - (i + 0.5) res is decreasing in i; pad by one cell
        // so callers can apply the exact predicate at the edges.
        let h = 0.5 * self.extent;
        let first = ((h - hi) / self.resolution - 0.5).floor() - 1.0;
        let last = ((h - lo) / self.resolution - 0.5).ceil() + 1.0;
        let n = self.cells as f64;
        if last < 0.0 || first > n - 1.0 || !first.is_finite() || !last.is_finite() {
            return None;
        }
        Some((first.max(0.0) as usize, last.min(n - 1.0) as usize))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Binary,
    Probability,
}

/// Per-class BEV raster, stored as class-major planes of row-major cells.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticGrid {
    spec: GridSpec,
    classes: Vec<SemanticClass>,
    kind: GridKind,
    data: Vec<f32>,
}

impl SemanticGrid {
    pub fn zeros(spec: GridSpec, classes: Vec<SemanticClass>) -> Result<Self> {
        check_classes(&classes)?;
        let len = spec.total_cells() * classes.len();
        Ok(SemanticGrid {
            spec,
            classes,
            kind: GridKind::Binary,
            data: vec![0.0; len],
        })
    }

    pub fn from_data(
        spec: GridSpec,
        classes: Vec<SemanticClass>,
        kind: GridKind,
        data: Vec<f32>,
    ) -> Result<Self> {
        check_classes(&classes)?;
        let expected = spec.total_cells() * classes.len();
        if data.len() != expected {
            return Err(Error::Validation(format!(
                "grid data has {} values, expected {expected}",
                data.len()
            )));
        }
        let ok = match kind {
            GridKind::Binary => data.iter().all(|&v| v == 0.0 || v == 1.0),
            GridKind::Probability => data.iter().all(|v| (0.0..=1.0).contains(v)),
        };
        if !ok {
            return Err(Error::Validation(format!("grid values out of range for {kind:?} grid")));
        }
        Ok(SemanticGrid {
            spec,
            classes,
            kind,
            data,
        })
    }

    /// Stacks single-class binary grids with matching specs.
    pub fn stack(grids: Vec<SemanticGrid>) -> Result<Self> {
        let first = grids.first().ok_or(Error::EmptyInput("no grids to stack"))?;
        let spec = first.spec;
        let kind = first.kind;
        let mut classes = Vec::new();
        let mut data = Vec::new();
        for g in grids {
            if g.spec != spec || g.kind != kind {
                return Err(Error::Mismatch("stacked grids differ in spec or kind".into()));
            }
            classes.extend(g.classes);
            data.extend(g.data);
        }
        SemanticGrid::from_data(spec, classes, kind, data)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn classes(&self) -> &[SemanticClass] {
        &self.classes
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn class_index(&self, class: SemanticClass) -> Option<usize> {
        self.classes.iter().position(|&c| c == class)
    }

    pub fn plane(&self, index: usize) -> &[f32] {
        let n = self.spec.total_cells();
        &self.data[index * n..(index + 1) * n]
    }

    pub fn plane_of(&self, class: SemanticClass) -> Option<&[f32]> {
        self.class_index(class).map(|i| self.plane(i))
    }

    pub fn get(&self, class_index: usize, row: usize, col: usize) -> f32 {
        let side = self.spec.cells;
        self.data[class_index * side * side + row * side + col]
    }

    pub(crate) fn plane_mut(&mut self, index: usize) -> &mut [f32] {
        let n = self.spec.total_cells();
        &mut self.data[index * n..(index + 1) * n]
    }

    pub fn count_ones(&self, class_index: usize) -> usize {
        self.plane(class_index).iter().filter(|&&v| v == 1.0).count()
    }

    /// Grid restricted to `classes`, in that order.
    pub fn select(&self, classes: &[SemanticClass]) -> Result<SemanticGrid> {
        let mut data = Vec::with_capacity(self.spec.total_cells() * classes.len());
        for &c in classes {
            let plane = self
                .plane_of(c)
                .ok_or_else(|| Error::Mismatch(format!("grid has no `{c}` plane")))?;
            data.extend_from_slice(plane);
        }
        SemanticGrid::from_data(self.spec, classes.to_vec(), self.kind, data)
    }

    pub fn encode_bevg(&self) -> Result<Vec<u8>> {
        if self.kind != GridKind::Binary {
            return Err(Error::Validation("BEVG stores binary grids only".into()));
        }
        let side = self.spec.cells;
        let mut out = Vec::with_capacity(8 + self.data.len() / 8);
        out.extend_from_slice(BEVG_MAGIC);
        out.extend_from_slice(&(side as u16).to_le_bytes());
        out.push(self.classes.len() as u8);
        for c in &self.classes {
            let name = c.name().as_bytes();
            out.push(name.len() as u8);
            out.extend_from_slice(name);
        }
        let plane_bytes = (side * side).div_ceil(8);
        for i in 0..self.classes.len() {
            let mut packed = vec![0u8; plane_bytes];
            for (k, &v) in self.plane(i).iter().enumerate() {
                if v == 1.0 {
                    packed[k / 8] |= 0x80 >> (k % 8);
                }
            }
            out.extend_from_slice(&packed);
        }
        Ok(out)
    }

    /// Decodes a `BEVG` buffer; `spec` supplies the metric size the container
    /// does not store and must agree with its side length.
    pub fn decode_bevg(bytes: &[u8], spec: GridSpec) -> Result<SemanticGrid> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(4)? != BEVG_MAGIC {
            return Err(Error::Format("bad BEVG magic".into()));
        }
        let side = u16::from_le_bytes(cur.take(2)?.try_into().unwrap()) as usize;
        if side != spec.cells {
            return Err(Error::Mismatch(format!(
                "BEVG side {side} does not match grid spec ({} cells)",
                spec.cells
            )));
        }
        let n = cur.take(1)?[0] as usize;
        let mut classes = Vec::with_capacity(n);
        for _ in 0..n {
            let len = cur.take(1)?[0] as usize;
            let name = std::str::from_utf8(cur.take(len)?)
                .map_err(|_| Error::Format("class name is not UTF-8".into()))?;
            classes.push(name.parse()?);
        }
        let plane_bytes = (side * side).div_ceil(8);
        let mut data = Vec::with_capacity(n * side * side);
        for _ in 0..n {
            let packed = cur.take(plane_bytes)?;
            data.extend((0..side * side).map(|k| {
                if packed[k / 8] & (0x80 >> (k % 8)) != 0 {
                    1.0
                } else {
                    0.0
                }
            }));
        }
        if cur.pos != bytes.len() {
            return Err(Error::Format(format!("{} trailing bytes after BEVG planes", bytes.len() - cur.pos)));
        }
        SemanticGrid::from_data(spec, classes, GridKind::Binary, data)
    }

    pub fn write_bevg(&self, path: &Path) -> Result<()> {
        write_file(path, &self.encode_bevg()?)
    }

    pub fn read_bevg(path: &Path, spec: GridSpec) -> Result<SemanticGrid> {
        let bytes = read_file(path)?;
        SemanticGrid::decode_bevg(&bytes, spec).map_err(|e| match e {
            Error::Format(m) => Error::parse(path, m),
            other => other,
        })
    }

    /// One 8-bit grayscale image per plane: `round(255·v)`.
    pub fn plane_png(&self, class_index: usize) -> image::GrayImage {
        let side = self.spec.cells as u32;
        let pixels = self
            .plane(class_index)
            .iter()
            .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect();
        image::GrayImage::from_raw(side, side, pixels).expect("plane size matches spec")
    }

    pub fn write_pngs(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (i, c) in self.classes.iter().enumerate() {
            let path = dir.join(format!("{}.png", c.name()));
            self.plane_png(i)
                .save(&path)
                .map_err(|e| Error::Image {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
        }
        Ok(())
    }

    /// Reads `<dir>/<class>.png` for every class; pixels ≥ 128 become 1.
    pub fn read_pngs(dir: &Path, classes: &[SemanticClass], spec: GridSpec) -> Result<SemanticGrid> {
        let side = spec.cells as u32;
        let mut data = Vec::with_capacity(spec.total_cells() * classes.len());
        for c in classes {
            let path = dir.join(format!("{}.png", c.name()));
            if !path.exists() {
                return Err(Error::MissingFile(path));
            }
            let img = image::open(&path)
                .map_err(|e| Error::Image {
                    path: path.clone(),
                    message: e.to_string(),
                })?
                .into_luma8();
            if img.width() != side || img.height() != side {
                return Err(Error::Mismatch(format!(
                    "{} is {}x{}, expected {side}x{side}",
                    path.display(),
                    img.width(),
                    img.height()
                )));
            }
            data.extend(img.into_raw().into_iter().map(|v| if v >= 128 { 1.0 } else { 0.0 }));
        }
        SemanticGrid::from_data(spec, classes.to_vec(), GridKind::Binary, data)
    }
}

fn check_classes(classes: &[SemanticClass]) -> Result<()> {
    for (i, c) in classes.iter().enumerate() {
        if classes[..i].contains(c) {
            return Err(Error::Validation(format!("class `{c}` appears twice")));
        }
    }
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        let s = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Format("truncated BEVG data".into()))?;
        self.pos = end;
        Ok(s)
    }
}

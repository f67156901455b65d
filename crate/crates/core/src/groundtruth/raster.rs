use std::path::Path;

use log::warn;
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::morphology::{close, BinaryMask, StructuringElement};
use crate::annotation::SemanticClass;
use crate::error::{read_file, write_file, Error, Result};
use crate::geometry::Pose;
use crate::grid::{GridSpec, SemanticGrid};
use crate::imaging::RgbImage;

/// Order in which the raster pipeline is applied.
pub const RASTER_PIPELINE: [&str; 4] = ["crop", "color_filter", "closing", "downscale"];

/// Georeferencing of a raster map. Pixel `(col, row)` covers map
/// `x ∈ [ox + col·res, ox + (col+1)·res)` and `y ∈ (oy − (row+1)·res, oy − row·res]`,
/// so `origin` is the top-left corner of the image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RasterMeta {
    pub origin: [f64; 2],
    pub resolution: f64,
}

impl RasterMeta {
    pub fn validate(&self) -> Result<()> {
        if !(self.resolution > 0.0 && self.resolution.is_finite()) || !self.origin.iter().all(|v| v.is_finite()) {
            return Err(Error::Validation(format!("invalid raster map meta {self:?}")));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        let meta: RasterMeta = serde_json::from_slice(&bytes).map_err(|e| Error::parse(path, e))?;
        meta.validate()?;
        Ok(meta)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self).expect("meta serializes");
        s.push('\n');
        write_file(path, s.as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColorTarget {
    pub name: String,
    pub rgb: [u8; 3],
    /// Per-channel absolute tolerance.
    #[serde(default)]
    pub tolerance: [u8; 3],
}

impl ColorTarget {
    pub fn matches(&self, px: [u8; 3]) -> bool {
        (0..3).all(|c| px[c].abs_diff(self.rgb[c]) <= self.tolerance[c])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosingConfig {
    #[serde(default)]
    pub size: StructuringElement,
}

/// Color filter and closing element for raster maps, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColorFilterSpec {
    pub targets: Vec<ColorTarget>,
    #[serde(default = "default_closing")]
    pub closing: ClosingConfig,
}

fn default_closing() -> ClosingConfig {
    ClosingConfig {
        size: StructuringElement::default(),
    }
}

impl ColorFilterSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ColorFilterSpec =
            toml::from_str(text).map_err(|e| Error::Validation(format!("color filter config: {e}")))?;
        if spec.targets.is_empty() {
            return Err(Error::Validation("color filter config lists no targets".into()));
        }
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("filter serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        let text = std::str::from_utf8(&bytes).map_err(|e| Error::parse(path, e))?;
        Self::from_toml(text).map_err(|e| Error::parse(path, e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_toml().as_bytes())
    }

    pub fn matches(&self, px: [u8; 3]) -> bool {
        self.targets.iter().any(|t| t.matches(px))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RasterMap {
    pub image: RgbImage,
    pub meta: RasterMeta,
}

impl RasterMap {
    pub fn new(image: RgbImage, meta: RasterMeta) -> Result<Self> {
        meta.validate()?;
        Ok(RasterMap { image, meta })
    }

    pub fn load(image: &Path, meta: &Path) -> Result<Self> {
        Self::new(RgbImage::read_png(image)?, RasterMeta::load(meta)?)
    }

    /// Pixel covering map point `(x, y)`, if inside the image.
    pub fn pixel_at(&self, x: f64, y: f64) -> Option<(u32, u32)> {
        let col = ((x - self.meta.origin[0]) / self.meta.resolution).floor();
        let row = ((self.meta.origin[1] - y) / self.meta.resolution).floor();
        if col < 0.0 || row < 0.0 || col >= self.image.width() as f64 || row >= self.image.height() as f64 {
            return None;
        }
        Some((col as u32, row as u32))
    }
}

/// Ego-aligned crop of the map at its native resolution (nearest
/// neighbor). Row 0 is the front edge, column 0 the left edge, like the
/// BEV grid. Pixels off the map are reported as `None`.
pub fn crop_ego_window(map: &RasterMap, ego_pose: &Pose, extent: f64) -> Result<(usize, Vec<Option<[u8; 3]>>)> {
    let res = map.meta.resolution;
    let n = integer_ratio(extent, res).ok_or_else(|| {
        Error::Validation(format!("grid extent {extent} m is not a whole number of map pixels ({res} m)"))
    })?;
    let h = 0.5 * extent;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        let x = h - (i as f64 + 0.5) * res;
        for j in 0..n {
            let y = h - (j as f64 + 0.5) * res;
            let p = ego_pose.apply(&Vector3::new(x, y, 0.0));
            out.push(map.pixel_at(p.x, p.y).map(|(c, r)| map.image.pixel(c, r)));
        }
    }
    Ok((n, out))
}

/// Majority vote over `block × block` tiles; ties go to foreground.
pub fn downscale_majority(mask: &BinaryMask, block: usize) -> Result<BinaryMask> {
    if block == 0 || mask.width() % block != 0 || mask.height() % block != 0 {
        return Err(Error::Validation(format!(
            "mask {}x{} is not divisible into {block}-pixel blocks",
            mask.width(),
            mask.height()
        )));
    }
    let (w, h) = (mask.width() / block, mask.height() / block);
    let mut out = BinaryMask::zeros(w, h);
    for by in 0..h {
        for bx in 0..w {
            let mut ones = 0;
            for y in by * block..(by + 1) * block {
                for x in bx * block..(bx + 1) * block {
                    ones += mask.get(x, y) as usize;
                }
            }
            out.set(bx, by, 2 * ones >= block * block);
        }
    }
    Ok(out)
}

/// Drivable grid from a raster map: crop, color filter, closing, then
/// block-majority downscale to the grid resolution. A window entirely off
/// the map gives an empty grid and a warning.
pub fn drivable_from_raster(
    map: &RasterMap,
    ego_pose: &Pose,
    spec: &GridSpec,
    filter: &ColorFilterSpec,
) -> Result<SemanticGrid> {
    let block = integer_ratio(spec.resolution(), map.meta.resolution).ok_or_else(|| {
        Error::Validation(format!(
            "grid resolution {} m is not a whole multiple of map resolution {} m",
            spec.resolution(),
            map.meta.resolution
        ))
    })?;
    let (n, crop) = crop_ego_window(map, ego_pose, spec.extent())?;
    let mut grid = SemanticGrid::zeros(*spec, vec![SemanticClass::DrivableArea])?;
    if crop.iter().all(Option::is_none) {
        let t = ego_pose.translation();
        warn!("BEV window at ({:.1}, {:.1}) lies entirely outside the raster map", t.x, t.y);
        return Ok(grid);
    }
    let data = crop
        .iter()
        .map(|px| px.is_some_and(|p| filter.matches(p)) as u8)
        .collect();
    let mask = BinaryMask::from_data(n, n, data)?;
    let closed = close(&mask, &filter.closing.size);
    let small = downscale_majority(&closed, block)?;
    if small.width() != spec.cells_per_side() {
        return Err(Error::Invariant(format!(
            "downscaled mask has side {}, grid expects {}",
            small.width(),
            spec.cells_per_side()
        )));
    }
    let plane = grid.plane_mut(0);
    for (dst, &v) in plane.iter_mut().zip(small.data()) {
        *dst = v as f32;
    }
    Ok(grid)
}

fn integer_ratio(a: f64, b: f64) -> Option<usize> {
    let r = a / b;
    let k = r.round();
    ((r - k).abs() < 1e-6 && k >= 1.0).then_some(k as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROAD: [u8; 3] = [128, 64, 128];
    const GRASS: [u8; 3] = [40, 160, 40];

    fn filter() -> ColorFilterSpec {
        ColorFilterSpec {
            targets: vec![ColorTarget {
                name: "drivable_area".into(),
                rgb: ROAD,
                tolerance: [4, 4, 4],
            }],
            closing: default_closing(),
        }
    }

    fn small_spec() -> GridSpec {
        GridSpec::new(10.0, 0.5).unwrap()
    }

    #[test]
    fn filter_toml_round_trip() {
        let text = "[[targets]]\nname = \"drivable_area\"\nrgb = [128, 64, 128]\ntolerance = [4, 4, 4]\n\n[closing]\nsize = [5, 3]\n";
        let f = ColorFilterSpec::from_toml(text).unwrap();
        assert_eq!(f.closing.size, StructuringElement::new(5, 3).unwrap());
        assert_eq!(ColorFilterSpec::from_toml(&f.to_toml()).unwrap(), f);
        assert!(ColorFilterSpec::from_toml("targets = []").is_err());
        assert!(ColorFilterSpec::from_toml(&text.replace("[5, 3]", "[4, 3]")).is_err());
    }

    #[test]
    fn tolerance_is_per_channel() {
        let f = filter();
        assert!(f.matches([132, 60, 128]));
        assert!(!f.matches([133, 64, 128]));
    }

    #[test]
    fn pixel_lookup_convention() {
        let map = RasterMap::new(
            RgbImage::filled(10, 5, GRASS),
            RasterMeta {
                origin: [100.0, 200.0],
                resolution: 0.5,
            },
        )
        .unwrap();
        assert_eq!(map.pixel_at(100.0, 200.0), Some((0, 0)));
        assert_eq!(map.pixel_at(104.9, 197.6), Some((9, 4)));
        assert_eq!(map.pixel_at(105.0, 199.0), None);
        assert_eq!(map.pixel_at(101.0, 200.1), None);
    }

    #[test]
    fn road_half_of_window() {
        // map covers [0, 40] x [0, 40] at 0.1 m; road where map y > 20
        let mut img = RgbImage::filled(400, 400, GRASS);
        img.fill_rect(0, 0, 400, 200, ROAD);
        let map = RasterMap::new(
            img,
            RasterMeta {
                origin: [0.0, 40.0],
                resolution: 0.1,
            },
        )
        .unwrap();
        // ego at (20, 20) facing +x: ego y > 0 is road, i.e. columns 0..10
        let g = drivable_from_raster(&map, &Pose::from_translation([20.0, 20.0, 0.0]), &small_spec(), &filter()).unwrap();
        for r in 0..20 {
            for c in 0..20 {
                assert_eq!(g.get(0, r, c), (c < 10) as u8 as f32, "cell ({r}, {c})");
            }
        }
    }

    #[test]
    fn closing_fills_painted_line() {
        let mut img = RgbImage::filled(400, 400, ROAD);
        img.fill_rect(0, 199, 400, 201, [255, 255, 255]);
        let map = RasterMap::new(
            img,
            RasterMeta {
                origin: [0.0, 40.0],
                resolution: 0.1,
            },
        )
        .unwrap();
        let g = drivable_from_raster(&map, &Pose::from_translation([20.0, 20.0, 0.0]), &small_spec(), &filter()).unwrap();
        assert_eq!(g.count_ones(0), 400);
    }

    #[test]
    fn window_outside_map_is_empty() {
        let map = RasterMap::new(
            RgbImage::filled(100, 100, ROAD),
            RasterMeta {
                origin: [0.0, 10.0],
                resolution: 0.1,
            },
        )
        .unwrap();
        let g = drivable_from_raster(&map, &Pose::from_translation([500.0, 500.0, 0.0]), &small_spec(), &filter()).unwrap();
        assert_eq!(g.count_ones(0), 0);
    }

    #[test]
    fn non_integer_ratio_rejected() {
        let map = RasterMap::new(
            RgbImage::filled(10, 10, ROAD),
            RasterMeta {
                origin: [0.0, 10.0],
                resolution: 0.3,
            },
        )
        .unwrap();
        assert!(matches!(
            drivable_from_raster(&map, &Pose::identity(), &small_spec(), &filter()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn majority_ties_go_to_foreground() {
        let m = BinaryMask::from_data(2, 2, vec![1, 0, 0, 1]).unwrap();
        assert!(downscale_majority(&m, 2).unwrap().get(0, 0));
        let m = BinaryMask::from_data(2, 2, vec![1, 0, 0, 0]).unwrap();
        assert!(!downscale_majority(&m, 2).unwrap().get(0, 0));
        assert!(downscale_majority(&m, 3).is_err());
    }
}

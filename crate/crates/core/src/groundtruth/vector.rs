use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::annotation::SemanticClass;
use crate::error::{read_file, write_file, Error, Result};
use crate::geometry::Pose;
use crate::grid::{GridSpec, SemanticGrid};

/// Polygon label treated as drivable surface.
pub const DRIVABLE_LABEL: &str = "drivable_area";

/// Labeled polygon in map coordinates. The first ring is the outline, any
/// further rings are holes; membership is even-odd over all rings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapPolygon {
    pub class: String,
    pub rings: Vec<Vec<[f64; 2]>>,
}

impl MapPolygon {
    pub fn new(class: impl Into<String>, rings: Vec<Vec<[f64; 2]>>) -> Result<Self> {
        let class = class.into();
        if rings.is_empty() {
            return Err(Error::Validation(format!("polygon '{class}' has no rings")));
        }
        let mut clean = Vec::with_capacity(rings.len());
        for mut ring in rings {
            if ring.len() > 1 && ring.first() == ring.last() {
                ring.pop();
            }
            if ring.len() < 3 {
                return Err(Error::Validation(format!("polygon '{class}' has a ring with fewer than 3 vertices")));
            }
            if ring.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("polygon '{class}' has non-finite vertices")));
            }
            clean.push(ring);
        }
        Ok(MapPolygon { class, rings: clean })
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let mut inside = false;
        for ring in &self.rings {
            let n = ring.len();
            let mut j = n - 1;
            for i in 0..n {
                let [xi, yi] = ring[i];
                let [xj, yj] = ring[j];
                if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
                    inside = !inside;
                }
                j = i;
            }
        }
        inside
    }

    fn bounds(&self) -> [f64; 4] {
        let mut b = [f64::MAX, f64::MAX, f64::MIN, f64::MIN];
        for &[x, y] in self.rings.iter().flatten() {
            b[0] = b[0].min(x);
            b[1] = b[1].min(y);
            b[2] = b[2].max(x);
            b[3] = b[3].max(y);
        }
        b
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VectorMap {
    pub polygons: Vec<MapPolygon>,
}

impl VectorMap {
    /// Parses a GeoJSON FeatureCollection of `Polygon` features whose
    /// `properties.class` carries the label.
    pub fn from_geojson(text: &str) -> Result<Self> {
        let bad = |m: String| Error::Format(format!("vector map: {m}"));
        let root: Value = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        if root.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
            return Err(bad("expected a FeatureCollection".into()));
        }
        let features = root
            .get("features")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing features array".into()))?;
        let mut polygons = Vec::with_capacity(features.len());
        for (i, f) in features.iter().enumerate() {
            let class = f
                .pointer("/properties/class")
                .and_then(Value::as_str)
                .ok_or_else(|| bad(format!("feature {i} has no properties.class")))?;
            let geom = f.get("geometry").ok_or_else(|| bad(format!("feature {i} has no geometry")))?;
            if geom.get("type").and_then(Value::as_str) != Some("Polygon") {
                return Err(bad(format!("feature {i}: only Polygon geometry is supported")));
            }
            let rings: Vec<Vec<[f64; 2]>> = serde_json::from_value(geom.get("coordinates").cloned().unwrap_or(Value::Null))
                .map_err(|e| bad(format!("feature {i} coordinates: {e}")))?;
            polygons.push(MapPolygon::new(class, rings)?);
        }
        Ok(VectorMap { polygons })
    }

    pub fn to_geojson(&self) -> String {
        let features: Vec<Value> = self
            .polygons
            .iter()
            .map(|p| {
                let rings: Vec<Vec<[f64; 2]>> = p
                    .rings
                    .iter()
                    .map(|r| {
                        let mut closed = r.clone();
                        closed.push(r[0]);
                        closed
                    })
                    .collect();
                json!({
                    "type": "Feature",
                    "properties": {"class": p.class},
                    "geometry": {"type": "Polygon", "coordinates": rings},
                })
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&json!({"type": "FeatureCollection", "features": features}))
            .expect("geojson serializes");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        let text = std::str::from_utf8(&bytes).map_err(|e| Error::parse(path, e))?;
        Self::from_geojson(text).map_err(|e| Error::parse(path, e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_geojson().as_bytes())
    }
}

/// Drivable grid: a cell is set when its center, mapped through `ego_pose`
/// (ego to map) on the ground plane, lies in a drivable polygon.
pub fn drivable_from_vector(map: &VectorMap, ego_pose: &Pose, spec: &GridSpec) -> SemanticGrid {
    let mut grid = SemanticGrid::zeros(*spec, vec![SemanticClass::DrivableArea]).expect("single class");
    let side = spec.cells_per_side();
    let h = 0.5 * spec.extent();
    // map-frame bounding box of the grid window
    let mut win = [f64::MAX, f64::MAX, f64::MIN, f64::MIN];
    for (x, y) in [(h, h), (h, -h), (-h, h), (-h, -h)] {
        let p = ego_pose.apply(&Vector3::new(x, y, 0.0));
        win[0] = win[0].min(p.x);
        win[1] = win[1].min(p.y);
        win[2] = win[2].max(p.x);
        win[3] = win[3].max(p.y);
    }
    let relevant: Vec<&MapPolygon> = map
        .polygons
        .iter()
        .filter(|p| p.class == DRIVABLE_LABEL)
        .filter(|p| {
            let b = p.bounds();
            b[0] <= win[2] && b[2] >= win[0] && b[1] <= win[3] && b[3] >= win[1]
        })
        .collect();
    if relevant.is_empty() {
        return grid;
    }
    let plane = grid.plane_mut(0);
    for r in 0..side {
        for c in 0..side {
            let [x, y] = spec.cell_center(r, c);
            let p = ego_pose.apply(&Vector3::new(x, y, 0.0));
            if relevant.iter().any(|poly| poly.contains(p.x, p.y)) {
                plane[r * side + c] = 1.0;
            }
        }
    }
    grid
}

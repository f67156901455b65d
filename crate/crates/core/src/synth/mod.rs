//! Synthetic dataset generator emulating two sensor setups: a 32-layer
//! LiDAR with a vector map and a 64-layer LiDAR with a raster map.
//!
//! Every sample draws from its own ChaCha8 stream seeded with
//! `seed ^ sample_index`, so output bytes do not depend on scheduling.

mod layout;
mod lidar;
mod render;
mod scene;

use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use layout::{DrivableLayout, DrivableShape, Lane, MapLayout, Rect, MAP_HALF_SIZE};
pub use lidar::{azimuths, cast_lidar, layer_elevations, LidarConfig};
pub use render::{
    camera_intrinsics, camera_pose, raster_filter, raster_meta, render_camera, render_raster_map, BACKGROUND_RGB,
    CAMERA_RIG, CENTERLINE_RGB, CROSSING_RGB, RASTER_RESOLUTION, ROAD_RGB, SIDEWALK_RGB,
};
pub use scene::{sample_id, sample_rng, scene_for_sample, SceneBox, SynthScene};

use crate::annotation::{write_boxes, ObjectClass, SemanticClass};
use crate::error::{write_file, Error, Result};
use crate::geometry::PoseRecord;
use crate::grid::{GridSpec, SemanticGrid};
use crate::groundtruth::{MapPolygon, VectorMap, DRIVABLE_LABEL};
use crate::manifest::{CameraRecord, DatasetManifest, MapRef, SampleRecord};
use crate::pointcloud::write_cloud;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    Vector,
    Raster,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImageGeometry {
    W1600x900,
    W1920x1080,
    W1124x1024,
}

impl ImageGeometry {
    pub fn size(self) -> (u32, u32) {
        match self {
            ImageGeometry::W1600x900 => (1600, 900),
            ImageGeometry::W1920x1080 => (1920, 1080),
            ImageGeometry::W1124x1024 => (1124, 1024),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthProfile {
    NuscenesLike,
    WovenplanetLike,
}

impl FromStr for SynthProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nuscenes-like" => Ok(SynthProfile::NuscenesLike),
            "wovenplanet-like" => Ok(SynthProfile::WovenplanetLike),
            _ => Err(Error::Validation(format!(
                "unknown profile `{s}` (expected nuscenes-like or wovenplanet-like)"
            ))),
        }
    }
}

impl SynthProfile {
    pub fn name(self) -> &'static str {
        match self {
            SynthProfile::NuscenesLike => "nuscenes-like",
            SynthProfile::WovenplanetLike => "wovenplanet-like",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub dataset_id: String,
    pub seed: u64,
    pub n_samples: usize,
    pub lidar: LidarConfig,
    /// LiDAR height above the ground; the ego origin sits at the LiDAR.
    pub mount_height: f64,
    /// Cycled over the cameras of the rig.
    pub image_geometries: Vec<ImageGeometry>,
    pub cameras: usize,
    pub map_kind: MapKind,
    /// Inclusive range of boxes per sample.
    pub boxes_per_sample: [usize; 2],
    /// Box centers are drawn from `[-box_extent, box_extent]²` in the ego frame.
    pub box_extent: f64,
    pub layout: DrivableLayout,
}

impl SynthConfig {
    pub fn profile(profile: SynthProfile, seed: u64, n_samples: usize) -> Self {
        match profile {
            SynthProfile::NuscenesLike => SynthConfig {
                dataset_id: profile.name().into(),
                seed,
                n_samples,
                lidar: LidarConfig {
                    layers: 32,
                    fov_deg: [-30.67, 10.67],
                    azimuth_steps: 1085,
                    max_range: 100.0,
                },
                mount_height: 1.84,
                image_geometries: vec![ImageGeometry::W1600x900],
                cameras: CAMERA_RIG.len(),
                map_kind: MapKind::Vector,
                boxes_per_sample: [4, 16],
                box_extent: 45.0,
                layout: DrivableLayout::Grid,
            },
            SynthProfile::WovenplanetLike => SynthConfig {
                dataset_id: profile.name().into(),
                seed,
                n_samples,
                lidar: LidarConfig {
                    layers: 64,
                    fov_deg: [-24.9, 2.0],
                    azimuth_steps: 780,
                    max_range: 120.0,
                },
                mount_height: 1.84,
                image_geometries: vec![ImageGeometry::W1920x1080, ImageGeometry::W1124x1024],
                cameras: CAMERA_RIG.len(),
                map_kind: MapKind::Raster,
                boxes_per_sample: [4, 16],
                box_extent: 45.0,
                layout: DrivableLayout::Cross,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if self.n_samples == 0 {
            return bad("n_samples must be at least 1".into());
        }
        if self.lidar.layers == 0 || self.lidar.azimuth_steps == 0 {
            return bad("lidar needs at least one layer and one azimuth step".into());
        }
        if !(self.lidar.fov_deg[0] <= self.lidar.fov_deg[1] && self.lidar.fov_deg.iter().all(|v| v.abs() < 90.0)) {
            return bad(format!("lidar fov {:?} is invalid", self.lidar.fov_deg));
        }
        if !(self.lidar.max_range > 0.0 && self.mount_height > 0.0) {
            return bad("lidar range and mount height must be positive".into());
        }
        if self.boxes_per_sample[0] > self.boxes_per_sample[1] {
            return bad(format!("box range {:?} is empty", self.boxes_per_sample));
        }
        if !(self.box_extent > 5.0) {
            return bad("box_extent must exceed 5 m".into());
        }
        if self.cameras > CAMERA_RIG.len() || (self.cameras > 0 && self.image_geometries.is_empty()) {
            return bad(format!("camera count {} needs geometries and at most {} cameras", self.cameras, CAMERA_RIG.len()));
        }
        if self.dataset_id.is_empty() {
            return bad("dataset_id must not be empty".into());
        }
        Ok(())
    }

    pub fn map_layout(&self) -> MapLayout {
        MapLayout::build(self.layout)
    }
}

/// Vector map with drivable polygons plus non-drivable context layers.
pub fn vector_map(layout: &MapLayout) -> VectorMap {
    let mut polygons = Vec::new();
    for s in &layout.drivable {
        let rings = match s {
            DrivableShape::Rect(r) => vec![r.corners()],
            DrivableShape::Annulus { outer, inner } => vec![outer.corners(), inner.corners()],
        };
        polygons.push(MapPolygon::new(DRIVABLE_LABEL, rings).expect("layout polygons are valid"));
    }
    for r in &layout.crossings {
        polygons.push(MapPolygon::new("ped_crossing", vec![r.corners()]).expect("valid"));
    }
    for r in &layout.sidewalks {
        polygons.push(MapPolygon::new("walkway", vec![r.corners()]).expect("valid"));
    }
    VectorMap { polygons }
}

/// Writes a full dataset under `out` and returns its manifest (also saved
/// as `manifest.json`).
pub fn generate(config: &SynthConfig, out: &Path) -> Result<DatasetManifest> {
    config.validate()?;
    let layout = config.map_layout();
    let mut manifest = DatasetManifest::new(config.dataset_id.clone(), out);
    match config.map_kind {
        MapKind::Vector => {
            vector_map(&layout).save(&out.join("map.geojson"))?;
            manifest.map = Some(MapRef::Vector {
                path: "map.geojson".into(),
            });
        }
        MapKind::Raster => {
            render_raster_map(&layout).write_png(&out.join("map.png"))?;
            raster_meta(&layout).save(&out.join("map_meta.json"))?;
            raster_filter().save(&out.join("map_filter.toml"))?;
            manifest.map = Some(MapRef::Raster {
                image: "map.png".into(),
                meta: "map_meta.json".into(),
                filter: "map_filter.toml".into(),
            });
        }
    }
    let samples: Vec<SampleRecord> = (0..config.n_samples)
        .into_par_iter()
        .map(|i| write_sample(config, out, i))
        .collect::<Result<_>>()?;
    manifest.samples = samples;
    manifest.save(&out.join("manifest.json"))?;
    write_file(
        &out.join("synth_config.json"),
        format!("{}\n", serde_json::to_string_pretty(config).expect("config serializes")).as_bytes(),
    )?;
    Ok(manifest)
}

fn write_sample(config: &SynthConfig, out: &Path, index: usize) -> Result<SampleRecord> {
    let scene = scene_for_sample(config, index);
    let id = &scene.sample_id;
    let lidar = format!("lidar/{id}.bin");
    let boxes = format!("boxes/{id}.json");
    write_cloud(&out.join(&lidar), &cast_lidar(&config.lidar, config.mount_height, &scene))?;
    let annotations: Vec<_> = scene.boxes.iter().map(SceneBox::annotation).collect();
    write_boxes(&out.join(&boxes), &annotations)?;
    let mut cameras = Vec::with_capacity(config.cameras);
    for (k, &(name, yaw)) in CAMERA_RIG.iter().take(config.cameras).enumerate() {
        let (w, h) = config.image_geometries[k % config.image_geometries.len()].size();
        let intr = camera_intrinsics(w, h);
        let pose = camera_pose(yaw, config.mount_height);
        let image = format!("cams/{id}_{name}.png");
        render_camera(&scene, &intr, &pose).write_png(&out.join(&image))?;
        cameras.push(CameraRecord {
            name: name.into(),
            image,
            intrinsics: intr,
            pose: PoseRecord::from_pose(&pose),
        });
    }
    Ok(SampleRecord {
        sample_id: id.clone(),
        lidar,
        boxes,
        ego_pose: scene.ego_pose_record(config.mount_height),
        cameras,
    })
}

/// Ground truth straight from the scene description: boxes by signed-area
/// tests against their corner polygons, drivable area by the layout's
/// analytic shapes.
pub fn ground_truth_oracle(
    config: &SynthConfig,
    scene: &SynthScene,
    spec: &GridSpec,
    classes: &[SemanticClass],
) -> SemanticGrid {
    let layout = config.map_layout();
    let side = spec.cells_per_side();
    let h = 0.5 * spec.extent();
    let res = spec.resolution();
    let mut data = Vec::with_capacity(side * side * classes.len());
    for &class in classes {
        for r in 0..side {
            let x = h - (r as f64 + 0.5) * res;
            for c in 0..side {
                let y = h - (c as f64 + 0.5) * res;
                let on = match class {
                    SemanticClass::DrivableArea => {
                        let [mx, my] = scene.ego_to_map(x, y);
                        layout.is_drivable(mx, my)
                    }
                    SemanticClass::Vehicle => covered(scene, ObjectClass::Vehicle, x, y),
                    SemanticClass::Human => covered(scene, ObjectClass::Human, x, y),
                };
                data.push(on as u8 as f32);
            }
        }
    }
    SemanticGrid::from_data(*spec, classes.to_vec(), crate::grid::GridKind::Binary, data)
        .expect("oracle grid matches spec")
}

fn covered(scene: &SynthScene, class: ObjectClass, x: f64, y: f64) -> bool {
    scene.boxes.iter().filter(|b| b.class == class).any(|b| {
        let (s, c) = b.yaw.sin_cos();
        let (hl, hw) = (0.5 * b.size[0], 0.5 * b.size[1]);
        let corner = |u: f64, v: f64| [b.center[0] + u * c - v * s, b.center[1] + u * s + v * c];
        let poly = [corner(hl, hw), corner(-hl, hw), corner(-hl, -hw), corner(hl, -hw)];
        // counter-clockwise polygon: inside iff left of (or on) every edge
        (0..4).all(|k| {
            let [ax, ay] = poly[k];
            let [bx, by] = poly[(k + 1) % 4];
            (bx - ax) * (y - ay) - (by - ay) * (x - ax) >= -1e-12
        })
    })
}

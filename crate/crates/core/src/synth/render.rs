use nalgebra::{Matrix3, Vector3};

use super::layout::{DrivableShape, MapLayout, Rect};
use super::scene::SynthScene;
use crate::annotation::ObjectClass;
use crate::camera::Intrinsics;
use crate::geometry::Pose;
use crate::groundtruth::{ColorFilterSpec, RasterMeta};
use crate::imaging::RgbImage;

/// Raster map palette.
pub const ROAD_RGB: [u8; 3] = [128, 64, 128];
pub const CROSSING_RGB: [u8; 3] = [255, 200, 0];
pub const CENTERLINE_RGB: [u8; 3] = [255, 255, 255];
pub const SIDEWALK_RGB: [u8; 3] = [170, 170, 170];
pub const BACKGROUND_RGB: [u8; 3] = [60, 140, 60];

pub const RASTER_RESOLUTION: f64 = 0.1;

const SKY_RGB: [u8; 3] = [150, 190, 235];
const GROUND_RGB: [u8; 3] = [90, 90, 90];
const VEHICLE_RGB: [u8; 3] = [200, 40, 40];
const HUMAN_RGB: [u8; 3] = [40, 40, 220];

/// Camera names and mounting yaws in degrees.
pub const CAMERA_RIG: [(&str, f64); 6] = [
    ("CAM_FRONT", 0.0),
    ("CAM_FRONT_LEFT", 55.0),
    ("CAM_FRONT_RIGHT", -55.0),
    ("CAM_BACK", 180.0),
    ("CAM_BACK_LEFT", 110.0),
    ("CAM_BACK_RIGHT", -110.0),
];

const CAMERA_HFOV_DEG: f64 = 70.0;
/// Camera height above the ground.
const CAMERA_HEIGHT: f64 = 1.5;

/// Camera-to-ego pose for a level camera at `yaw_deg` (camera axes: z
/// forward, x right, y down).
pub fn camera_pose(yaw_deg: f64, mount_height: f64) -> Pose {
    let (s, c) = yaw_deg.to_radians().sin_cos();
    let rot = Matrix3::from_columns(&[
        Vector3::new(s, -c, 0.0),
        Vector3::new(0.0, 0.0, -1.0),
        Vector3::new(c, s, 0.0),
    ]);
    let t = Vector3::new(0.5 * c, 0.5 * s, CAMERA_HEIGHT - mount_height);
    Pose::new(rot, t).expect("rig rotation is orthonormal")
}

pub fn camera_intrinsics(width: u32, height: u32) -> Intrinsics {
    Intrinsics::from_fov(CAMERA_HFOV_DEG.to_radians(), width, height).expect("rig intrinsics are valid")
}

/// Flat-shaded view: sky above the horizon, ground below, and each box
/// drawn far to near as the bounding rectangle of its projected corners.
pub fn render_camera(scene: &SynthScene, intr: &Intrinsics, cam_to_ego: &Pose) -> RgbImage {
    let (w, h) = (intr.width(), intr.height());
    let mut img = RgbImage::filled(w, h, GROUND_RGB);
    img.fill_rect(0, 0, w as i64, intr.cy().round() as i64, SKY_RGB);
    let ego_to_cam = cam_to_ego.inverse();
    let mut visible: Vec<(f64, [i64; 4], [u8; 3])> = Vec::new();
    for b in &scene.boxes {
        let (s, c) = b.yaw.sin_cos();
        let mut uv = Vec::with_capacity(8);
        let mut depth = 0.0;
        for (du, dv, dz) in corner_signs() {
            let (u, v) = (du * 0.5 * b.size[0], dv * 0.5 * b.size[1]);
            let p = Vector3::new(
                b.center[0] + u * c - v * s,
                b.center[1] + u * s + v * c,
                b.center[2] + dz * 0.5 * b.size[2],
            );
            let pc = ego_to_cam.apply(&p);
            match intr.project([pc.x, pc.y, pc.z]) {
                Some(q) if pc.z > 0.5 => {
                    uv.push(q);
                    depth += pc.z;
                }
                _ => break,
            }
        }
        if uv.len() < 8 {
            continue;
        }
        let x0 = uv.iter().map(|q| q[0]).fold(f64::MAX, f64::min).floor() as i64;
        let x1 = uv.iter().map(|q| q[0]).fold(f64::MIN, f64::max).ceil() as i64;
        let y0 = uv.iter().map(|q| q[1]).fold(f64::MAX, f64::min).floor() as i64;
        let y1 = uv.iter().map(|q| q[1]).fold(f64::MIN, f64::max).ceil() as i64;
        let color = match b.class {
            ObjectClass::Vehicle => VEHICLE_RGB,
            ObjectClass::Human => HUMAN_RGB,
        };
        visible.push((depth / 8.0, [x0, y0, x1, y1], color));
    }
    visible.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (_, [x0, y0, x1, y1], color) in visible {
        img.fill_rect(x0, y0, x1, y1, color);
    }
    img
}

fn corner_signs() -> impl Iterator<Item = (f64, f64, f64)> {
    [-1.0, 1.0]
        .into_iter()
        .flat_map(|a| [-1.0, 1.0].into_iter().flat_map(move |b| [-1.0, 1.0].into_iter().map(move |c| (a, b, c))))
}

pub fn raster_meta(layout: &MapLayout) -> RasterMeta {
    RasterMeta {
        origin: [layout.bounds.min[0], layout.bounds.max[1]],
        resolution: RASTER_RESOLUTION,
    }
}

/// Filter matching road and crossing pixels exactly, with the default 5×5
/// closing.
pub fn raster_filter() -> ColorFilterSpec {
    ColorFilterSpec::from_toml(&format!(
        "[[targets]]\nname = \"drivable_area\"\nrgb = {ROAD_RGB:?}\ntolerance = [6, 6, 6]\n\n\
         [[targets]]\nname = \"crossing\"\nrgb = {CROSSING_RGB:?}\ntolerance = [6, 6, 6]\n\n\
         [closing]\nsize = [5, 5]\n"
    ))
    .expect("built-in filter is valid")
}

pub fn render_raster_map(layout: &MapLayout) -> RgbImage {
    let meta = raster_meta(layout);
    let px = |v: f64| (v / meta.resolution).round() as i64;
    let w = px(layout.bounds.max[0] - layout.bounds.min[0]) as u32;
    let h = px(layout.bounds.max[1] - layout.bounds.min[1]) as u32;
    let mut img = RgbImage::filled(w, h, BACKGROUND_RGB);
    let paint = |img: &mut RgbImage, r: &Rect, rgb: [u8; 3]| {
        img.fill_rect(
            px(r.min[0] - meta.origin[0]),
            px(meta.origin[1] - r.max[1]),
            px(r.max[0] - meta.origin[0]),
            px(meta.origin[1] - r.min[1]),
            rgb,
        );
    };
    for r in &layout.sidewalks {
        paint(&mut img, r, SIDEWALK_RGB);
    }
    for s in &layout.drivable {
        match s {
            DrivableShape::Rect(r) => paint(&mut img, r, ROAD_RGB),
            DrivableShape::Annulus { outer, inner } => {
                paint(&mut img, outer, ROAD_RGB);
                paint(&mut img, inner, BACKGROUND_RGB);
            }
        }
    }
    for r in &layout.crossings {
        paint(&mut img, r, CROSSING_RGB);
    }
    for r in layout.centerlines() {
        paint(&mut img, &r, CENTERLINE_RGB);
    }
    img
}

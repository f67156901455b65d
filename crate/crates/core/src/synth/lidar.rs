use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::scene::{SceneBox, SynthScene};
use crate::annotation::ObjectClass;
use crate::geometry::{Frame, Point3, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LidarConfig {
    pub layers: u32,
    /// Lowest and highest beam elevation in degrees.
    pub fov_deg: [f64; 2],
    pub azimuth_steps: u32,
    pub max_range: f64,
}

const GROUND_INTENSITY: f64 = 0.2;

/// Beam elevations, evenly spaced and inclusive of both FOV limits.
pub fn layer_elevations(cfg: &LidarConfig) -> Vec<f64> {
    let [lo, hi] = cfg.fov_deg;
    if cfg.layers == 1 {
        return vec![lo.to_radians()];
    }
    (0..cfg.layers)
        .map(|l| (lo + (hi - lo) * l as f64 / (cfg.layers - 1) as f64).to_radians())
        .collect()
}

/// Ray azimuths at half-step offsets so none falls on the ±π seam.
pub fn azimuths(cfg: &LidarConfig) -> Vec<f64> {
    let n = cfg.azimuth_steps as f64;
    (0..cfg.azimuth_steps).map(|k| -PI + 2.0 * PI * (k as f64 + 0.5) / n).collect()
}

/// Casts every beam from the ego origin against the ground plane
/// `z = -mount_height` and the scene boxes, keeping the nearest hit within
/// range. Points are in the ego frame.
pub fn cast_lidar(cfg: &LidarConfig, mount_height: f64, scene: &SynthScene) -> PointCloud {
    let elevations = layer_elevations(cfg);
    let az: Vec<(f64, f64)> = azimuths(cfg).iter().map(|a| a.sin_cos()).collect();
    let mut points = Vec::with_capacity(elevations.len() * az.len() / 2);
    for &theta in &elevations {
        let (st, ct) = theta.sin_cos();
        for &(sp, cp) in &az {
            let d = [ct * cp, ct * sp, st];
            let mut best = (f64::INFINITY, GROUND_INTENSITY);
            if d[2] < 0.0 {
                best.0 = -mount_height / d[2];
            }
            for b in &scene.boxes {
                if let Some(t) = ray_box(d, b) {
                    if t < best.0 {
                        best = (t, intensity(b.class));
                    }
                }
            }
            let (t, i) = best;
            if t <= cfg.max_range {
                points.push(Point3::with_intensity(t * d[0], t * d[1], t * d[2], i));
            }
        }
    }
    PointCloud::new(points, Frame::Ego).expect("ray hits are finite")
}

fn intensity(class: ObjectClass) -> f64 {
    match class {
        ObjectClass::Vehicle => 0.7,
        ObjectClass::Human => 0.5,
    }
}

/// Slab test of a ray from the origin against an oriented box.
fn ray_box(d: [f64; 3], b: &SceneBox) -> Option<f64> {
    let (s, c) = b.yaw.sin_cos();
    let o = [-b.center[0], -b.center[1], -b.center[2]];
    let lo = [c * o[0] + s * o[1], -s * o[0] + c * o[1], o[2]];
    let ld = [c * d[0] + s * d[1], -s * d[0] + c * d[1], d[2]];
    let half = [0.5 * b.size[0], 0.5 * b.size[1], 0.5 * b.size[2]];
    let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
    for k in 0..3 {
        if ld[k].abs() < 1e-12 {
            if lo[k].abs() > half[k] {
                return None;
            }
            continue;
        }
        let a = (-half[k] - lo[k]) / ld[k];
        let z = (half[k] - lo[k]) / ld[k];
        t0 = t0.max(a.min(z));
        t1 = t1.min(a.max(z));
    }
    (t0 <= t1 && t0 > 0.0).then_some(t0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(layers: u32, steps: u32) -> LidarConfig {
        LidarConfig {
            layers,
            fov_deg: [-30.0, 10.0],
            azimuth_steps: steps,
            max_range: 100.0,
        }
    }

    fn empty_scene() -> SynthScene {
        SynthScene {
            index: 0,
            sample_id: "s".into(),
            ego_yaw: 0.0,
            ego_position: [0.0, 0.0],
            boxes: vec![],
        }
    }

    #[test]
    fn ground_ring_radius() {
        let c = LidarConfig {
            layers: 1,
            fov_deg: [-45.0, -45.0],
            azimuth_steps: 8,
            max_range: 100.0,
        };
        let cloud = cast_lidar(&c, 2.0, &empty_scene());
        assert_eq!(cloud.len(), 8);
        for p in cloud.points() {
            assert!((p.x.hypot(p.y) - 2.0).abs() < 1e-9);
            assert!((p.z + 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn upward_beams_miss() {
        let cloud = cast_lidar(&cfg(5, 10), 1.8, &empty_scene());
        // elevations -30, -20, -10, 0, 10: only the first three reach the ground
        assert_eq!(cloud.len(), 30);
    }

    #[test]
    fn box_occludes_ground() {
        let mut scene = empty_scene();
        scene.boxes.push(SceneBox {
            center: [10.0, 0.0, -1.0],
            size: [2.0, 40.0, 2.0],
            yaw: 0.0,
            class: ObjectClass::Vehicle,
        });
        let c = LidarConfig {
            layers: 1,
            fov_deg: [-2.0, -2.0],
            azimuth_steps: 4,
            max_range: 200.0,
        };
        let cloud = cast_lidar(&c, 2.0, &scene);
        // the beams near +x hit the box face at x = 9
        let hits: Vec<_> = cloud.points().iter().filter(|p| p.intensity == 0.7).collect();
        assert!(!hits.is_empty());
        for p in hits {
            assert!((p.x - 9.0).abs() < 1e-9);
        }
    }
}

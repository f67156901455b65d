use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layout::MapLayout;
use super::{MapKind, SynthConfig};
use crate::annotation::{BoxAnnotation, ObjectClass};
use crate::geometry::{wrap_angle, PoseRecord};

/// Box in the ego frame as the generator sees it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneBox {
    pub center: [f64; 3],
    /// length, width, height
    pub size: [f64; 3],
    pub yaw: f64,
    pub class: ObjectClass,
}

impl SceneBox {
    pub fn annotation(&self) -> BoxAnnotation {
        BoxAnnotation::new(self.center, self.size, self.yaw, self.class).expect("generated boxes are valid")
    }

    fn radius(&self) -> f64 {
        0.5 * self.size[0].hypot(self.size[1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthScene {
    pub index: usize,
    pub sample_id: String,
    /// Ego heading and position in the map frame; the ego origin sits at
    /// LiDAR height above the ground.
    pub ego_yaw: f64,
    pub ego_position: [f64; 2],
    pub boxes: Vec<SceneBox>,
}

impl SynthScene {
    pub fn ego_pose_record(&self, mount_height: f64) -> PoseRecord {
        PoseRecord::from_yaw(self.ego_yaw, [self.ego_position[0], self.ego_position[1], mount_height])
    }

    /// Ego-frame ground point to map coordinates.
    pub fn ego_to_map(&self, x: f64, y: f64) -> [f64; 2] {
        let (s, c) = self.ego_yaw.sin_cos();
        [self.ego_position[0] + c * x - s * y, self.ego_position[1] + s * x + c * y]
    }
}

pub fn sample_id(index: usize) -> String {
    format!("s{index:05}")
}

/// Per-sample generator seeded with `seed ^ index`.
pub fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ index as u64)
}

pub fn scene_for_sample(config: &SynthConfig, index: usize) -> SynthScene {
    let mut rng = sample_rng(config.seed, index);
    let layout = MapLayout::build(config.layout);
    let lane = layout.lanes[rng.random_range(0..layout.lanes.len())];
    let r = lane.rect;
    let (along_lo, along_hi, cross_lo, cross_hi) = if lane.along_x {
        (r.min[0], r.max[0], r.min[1], r.max[1])
    } else {
        (r.min[1], r.max[1], r.min[0], r.max[0])
    };
    let along = rng.random_range(along_lo + 15.0..along_hi - 15.0);
    let cross_mid = 0.5 * (cross_lo + cross_hi);
    let cross_half = 0.5 * (cross_hi - cross_lo) - 1.5;
    let cross = cross_mid + rng.random_range(-cross_half..cross_half);
    let forward = rng.random_bool(0.5);
    let base = match (lane.along_x, forward) {
        (true, true) => 0.0,
        (true, false) => -PI,
        (false, true) => FRAC_PI_2,
        (false, false) => -FRAC_PI_2,
    };
    let jitter = rng.random_range(-0.15..0.15);
    let (mut pos, yaw) = if lane.along_x {
        ([along, cross], base)
    } else {
        ([cross, along], base)
    };
    let yaw = match config.map_kind {
        // axis-aligned ego on a 0.5 m lattice keeps map pixels and grid
        // cells aligned
        MapKind::Raster => {
            pos = [(pos[0] * 2.0).round() / 2.0, (pos[1] * 2.0).round() / 2.0];
            yaw
        }
        MapKind::Vector => wrap_angle(yaw + jitter),
    };

    let n_boxes = rng.random_range(config.boxes_per_sample[0]..=config.boxes_per_sample[1]);
    let mut boxes: Vec<SceneBox> = Vec::with_capacity(n_boxes);
    let h = config.mount_height;
    let reach = config.box_extent;
    for _ in 0..n_boxes {
        let class = if rng.random_bool(0.75) { ObjectClass::Vehicle } else { ObjectClass::Human };
        let size = match class {
            ObjectClass::Vehicle => [
                rng.random_range(3.8..5.2),
                rng.random_range(1.7..2.1),
                rng.random_range(1.4..1.8),
            ],
            ObjectClass::Human => [
                rng.random_range(0.5..0.8),
                rng.random_range(0.5..0.8),
                rng.random_range(1.5..1.8),
            ],
        };
        for _attempt in 0..100 {
            let x = rng.random_range(-reach..reach);
            let y = rng.random_range(-reach..reach);
            let yaw = rng.random_range(-PI..PI);
            let cand = SceneBox {
                center: [x, y, -h + 0.5 * size[2]],
                size,
                yaw,
                class,
            };
            let clear_of_ego = x.hypot(y) > cand.radius() + 3.0;
            let clear_of_others = boxes
                .iter()
                .all(|b| (b.center[0] - x).hypot(b.center[1] - y) > b.radius() + cand.radius() + 0.2);
            if clear_of_ego && clear_of_others {
                boxes.push(cand);
                break;
            }
        }
    }
    SynthScene {
        index,
        sample_id: sample_id(index),
        ego_yaw: yaw,
        ego_position: pos,
        boxes,
    }
}

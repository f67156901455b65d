//! Points, clouds and rigid transforms.
//!
//! Ego frame: x forward, y left, z up, origin at the ego center. Every
//! pipeline stage works in this frame.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ORTHONORMAL_TOL: f64 = 1e-9;
const QUATERNION_NORM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Reflectance in [0, 1]. Carried through every stage, never interpreted.
    pub intensity: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 {
            x,
            y,
            z,
            intensity: 0.0,
        }
    }

    pub const fn with_intensity(x: f64, y: f64, z: f64, intensity: f64) -> Self {
        Point3 { x, y, z, intensity }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite() && self.intensity.is_finite()
    }

    pub fn xyz(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        (self.xyz() - other.xyz()).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Sensor,
    Ego,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3>,
    frame: Frame,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>, frame: Frame) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::Validation(format!("point {i} is not finite")));
        }
        Ok(PointCloud { points, frame })
    }

    pub fn empty(frame: Frame) -> Self {
        PointCloud {
            points: Vec::new(),
            frame,
        }
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point3> {
        self.points
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Rigid transform `p -> R p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Pose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if !rotation.iter().chain(translation.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidPose("non-finite entry".into()));
        }
        let gram_err = (rotation.transpose() * rotation - Matrix3::identity()).amax();
        if gram_err > ORTHONORMAL_TOL {
            return Err(Error::InvalidPose(format!(
                "rotation is not orthonormal (max |RᵀR - I| = {gram_err:e})"
            )));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::InvalidPose(format!("rotation determinant is {det}, expected +1")));
        }
        Ok(Pose {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Pose {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(t: [f64; 3]) -> Self {
        Pose {
            rotation: Matrix3::identity(),
            translation: Vector3::from(t),
        }
    }

    /// Rotation about +z by `yaw` radians, then translation.
    pub fn from_yaw(yaw: f64, t: [f64; 3]) -> Self {
        let (s, c) = yaw.sin_cos();
        Pose {
            rotation: Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
            translation: Vector3::from(t),
        }
    }

    /// Quaternion in `[w, x, y, z]` order. Must be unit length within 1e-6;
    /// it is renormalized before expansion.
    pub fn from_quaternion(q: [f64; 4], t: [f64; 3]) -> Result<Self> {
        if !q.iter().chain(t.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidPose("non-finite entry".into()));
        }
        let quat = Quaternion::new(q[0], q[1], q[2], q[3]);
        let norm = quat.norm();
        if (norm - 1.0).abs() > QUATERNION_NORM_TOL {
            return Err(Error::InvalidPose(format!("quaternion norm {norm} is not 1")));
        }
        let unit = UnitQuaternion::from_quaternion(quat);
        Pose::new(unit.to_rotation_matrix().into_inner(), Vector3::from(t))
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v + self.translation
    }

    pub fn apply_point(&self, p: &Point3) -> Point3 {
        let v = self.apply(&p.xyz());
        Point3::with_intensity(v.x, v.y, v.z, p.intensity)
    }

    /// Heading of the rotated x axis projected on the ground plane.
    pub fn yaw(&self) -> f64 {
        self.rotation[(1, 0)].atan2(self.rotation[(0, 0)])
    }
}

/// Maps every point through `pose` and tags the result with `target`.
pub fn transform_cloud(cloud: &PointCloud, pose: &Pose, target: Frame) -> PointCloud {
    PointCloud {
        points: cloud.points.iter().map(|p| pose.apply_point(p)).collect(),
        frame: target,
    }
}

/// Serialized pose: unit quaternion `[w, x, y, z]` plus translation in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub rotation: [f64; 4],
    pub translation: [f64; 3],
}

impl PoseRecord {
    pub fn identity() -> Self {
        PoseRecord {
            rotation: [1.0, 0.0, 0.0, 0.0],
            translation: [0.0; 3],
        }
    }

    pub fn from_yaw(yaw: f64, translation: [f64; 3]) -> Self {
        let half = 0.5 * yaw;
        PoseRecord {
            rotation: [half.cos(), 0.0, 0.0, half.sin()],
            translation,
        }
    }

    pub fn from_pose(pose: &Pose) -> Self {
        let q = UnitQuaternion::from_matrix(pose.rotation());
        PoseRecord {
            rotation: [q.w, q.i, q.j, q.k],
            translation: [pose.translation.x, pose.translation.y, pose.translation.z],
        }
    }

    pub fn to_pose(&self) -> Result<Pose> {
        Pose::from_quaternion(self.rotation, self.translation)
    }
}

/// Wraps an angle into `[-π, π)`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let w = (a + PI).rem_euclid(TAU) - PI;
    if w >= PI {
        w - TAU
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn cloud(pts: &[[f64; 3]]) -> PointCloud {
        PointCloud::new(
            pts.iter().map(|p| Point3::new(p[0], p[1], p[2])).collect(),
            Frame::Sensor,
        )
        .unwrap()
    }

    #[test]
    fn identity_pose_is_noop() {
        let c = cloud(&[[1.0, 2.0, 3.0], [-4.0, 0.5, 9.0]]);
        let out = transform_cloud(&c, &Pose::identity(), Frame::Sensor);
        assert_eq!(out, c);
    }

    #[test]
    fn pure_translation() {
        let c = cloud(&[[0.0, 0.0, 0.0]]);
        let out = transform_cloud(&c, &Pose::from_translation([1.0, 0.0, 0.0]), Frame::Ego);
        assert_eq!(out.points()[0].xyz(), Vector3::new(1.0, 0.0, 0.0));
        assert_eq!(out.frame(), Frame::Ego);
    }

    #[test]
    fn yaw_ninety_degrees() {
        // [[0,-1,0],[1,0,0],[0,0,1]] · (1,0,0) = (0,1,0)
        let c = cloud(&[[1.0, 0.0, 0.0]]);
        let out = transform_cloud(&c, &Pose::from_yaw(FRAC_PI_2, [0.0; 3]), Frame::Ego);
        let p = out.points()[0];
        assert!(p.x.abs() < 1e-12 && (p.y - 1.0).abs() < 1e-12 && p.z.abs() < 1e-12);
    }

    #[test]
    fn intensity_preserved() {
        let c = PointCloud::new(vec![Point3::with_intensity(1.0, 1.0, 1.0, 0.37)], Frame::Sensor).unwrap();
        let out = transform_cloud(&c, &Pose::from_yaw(0.3, [1.0, 2.0, 3.0]), Frame::Ego);
        assert_eq!(out.points()[0].intensity, 0.37);
    }

    #[test]
    fn rejects_non_orthonormal_rotation() {
        let r = Matrix3::new(1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(matches!(Pose::new(r, Vector3::zeros()), Err(Error::InvalidPose(_))));
        let reflection = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0);
        assert!(matches!(Pose::new(reflection, Vector3::zeros()), Err(Error::InvalidPose(_))));
        assert!(Pose::from_quaternion([2.0, 0.0, 0.0, 0.0], [0.0; 3]).is_err());
    }

    #[test]
    fn rejects_non_finite_points() {
        assert!(PointCloud::new(vec![Point3::new(f64::NAN, 0.0, 0.0)], Frame::Ego).is_err());
        assert!(PointCloud::new(vec![Point3::new(0.0, f64::INFINITY, 0.0)], Frame::Ego).is_err());
    }

    #[test]
    fn quaternion_record_matches_yaw_pose() {
        let rec = PoseRecord::from_yaw(0.7, [1.0, 2.0, 0.0]);
        let a = rec.to_pose().unwrap();
        let b = Pose::from_yaw(0.7, [1.0, 2.0, 0.0]);
        assert!((a.rotation() - b.rotation()).amax() < 1e-12);
        assert!((a.yaw() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn wrap_angle_range() {
        use std::f64::consts::PI;
        assert_eq!(wrap_angle(PI), -PI);
        assert_eq!(wrap_angle(-PI), -PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(wrap_angle(0.25), 0.25);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_pose() -> impl Strategy<Value = Pose> {
            (
                prop::array::uniform4(-1.0f64..1.0),
                prop::array::uniform3(-100.0f64..100.0),
            )
                .prop_filter("non-degenerate quaternion", |(q, _)| {
                    q.iter().map(|v| v * v).sum::<f64>() > 1e-3
                })
                .prop_map(|(q, t)| {
                    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
                    Pose::from_quaternion([q[0] / n, q[1] / n, q[2] / n, q[3] / n], t).unwrap()
                })
        }

        fn arb_cloud() -> impl Strategy<Value = PointCloud> {
            prop::collection::vec(prop::array::uniform3(-80.0f64..80.0), 0..40).prop_map(|pts| {
                PointCloud::new(
                    pts.into_iter().map(|p| Point3::new(p[0], p[1], p[2])).collect(),
                    Frame::Sensor,
                )
                .unwrap()
            })
        }

        proptest! {
            #[test]
            fn inverse_round_trip(c in arb_cloud(), pose in arb_pose()) {
                let there = transform_cloud(&c, &pose, Frame::Ego);
                let back = transform_cloud(&there, &pose.inverse(), Frame::Sensor);
                for (a, b) in c.points().iter().zip(back.points()) {
                    prop_assert!((a.x - b.x).abs() < 1e-9);
                    prop_assert!((a.y - b.y).abs() < 1e-9);
                    prop_assert!((a.z - b.z).abs() < 1e-9);
                }
            }

            #[test]
            fn preserves_pairwise_distances(c in arb_cloud(), pose in arb_pose()) {
                let out = transform_cloud(&c, &pose, Frame::Ego);
                let (a, b) = (c.points(), out.points());
                for i in 0..a.len() {
                    for j in (i + 1)..a.len() {
                        prop_assert!((a[i].distance(&a[j]) - b[i].distance(&b[j])).abs() < 1e-9);
                    }
                }
            }
        }
    }
}

//! LiDAR density harmonization: spherical coordinates, sector subsampling,
//! point-count statistics and the `BEVL` cloud file format.

mod io;
mod stats;
mod subsample;

pub use io::{decode_cloud, encode_cloud, read_cloud, write_cloud, BEVL_MAGIC, BEVL_VERSION};
pub use stats::{compute_stats, compute_stats_with_bin, CloudStats, Histogram, DEFAULT_HIST_BIN};
pub use subsample::{
    subsample, subsample_with_meta, SectorAxis, SectorGridSpec, SubsampleMeta, ThetaRange,
};

use crate::geometry::Point3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalPoint {
    pub rho: f64,
    /// Elevation above the xy plane, in `[-π/2, π/2]`.
    pub theta: f64,
    /// Azimuth from +x toward +y, in `[-π, π)`.
    pub phi: f64,
}

pub fn to_spherical(p: &Point3) -> SphericalPoint {
    let planar = p.x.hypot(p.y);
    let rho = planar.hypot(p.z);
    if rho == 0.0 {
        return SphericalPoint {
            rho: 0.0,
            theta: 0.0,
            phi: 0.0,
        };
    }
    let mut phi = p.y.atan2(p.x);
    if phi >= std::f64::consts::PI {
        phi = -std::f64::consts::PI;
    }
    SphericalPoint {
        rho,
        theta: p.z.atan2(planar),
        phi,
    }
}

pub fn to_cartesian(s: &SphericalPoint) -> Point3 {
    let (st, ct) = s.theta.sin_cos();
    let (sp, cp) = s.phi.sin_cos();
    Point3::new(s.rho * ct * cp, s.rho * ct * sp, s.rho * st)
}

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{to_spherical, SphericalPoint};
use crate::error::{Error, Result};
use crate::geometry::{Frame, Point3, PointCloud};

/// How the elevation axis is bounded before it is cut into sectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ThetaRange {
    /// `[min θ, max θ]` of the cloud being subsampled.
    Observed,
    /// A fixed interval; points outside it are dropped.
    Fixed { min: f64, max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorGridSpec {
    pub theta_sectors: u32,
    pub phi_sectors: u32,
    pub theta_range: ThetaRange,
}

impl Default for SectorGridSpec {
    fn default() -> Self {
        SectorGridSpec {
            theta_sectors: 32,
            phi_sectors: 1500,
            theta_range: ThetaRange::Observed,
        }
    }
}

impl SectorGridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.theta_sectors == 0 || self.phi_sectors == 0 {
            return Err(Error::Validation("sector counts must be at least 1".into()));
        }
        if let ThetaRange::Fixed { min, max } = self.theta_range {
            if !(min.is_finite() && max.is_finite() && min < max) {
                return Err(Error::Validation(format!("theta range [{min}, {max}] is empty")));
            }
        }
        Ok(())
    }

    pub fn max_cells(&self) -> u64 {
        self.theta_sectors as u64 * self.phi_sectors as u64
    }
}

/// One axis cut into `n` half-open sectors `[b_k, b_{k+1})`, the last one
/// closed, with `b_k = lo + (hi - lo)·k / n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorAxis {
    lo: f64,
    hi: f64,
    n: u32,
}

impl SectorAxis {
    pub fn new(lo: f64, hi: f64, n: u32) -> Self {
        debug_assert!(n >= 1 && lo <= hi);
        SectorAxis { lo, hi, n }
    }

    pub fn boundary(&self, k: u32) -> f64 {
        if k == self.n {
            return self.hi;
        }
        self.lo + (self.hi - self.lo) * (k as f64) / (self.n as f64)
    }

    pub fn center(&self, k: u32) -> f64 {
        0.5 * (self.boundary(k) + self.boundary(k + 1))
    }

    pub fn index(&self, v: f64) -> Option<u32> {
        if !(v >= self.lo && v <= self.hi) {
            return None;
        }
        let width = self.hi - self.lo;
        if width == 0.0 {
            return Some(0);
        }
        let last = self.n - 1;
        let mut k = (((v - self.lo) / width) * self.n as f64).floor().clamp(0.0, last as f64) as u32;
        // The division above can land one sector off near a boundary; settle
        // against the boundaries themselves.
        while k > 0 && v < self.boundary(k) {
            k -= 1;
        }
        while k < last && v >= self.boundary(k + 1) {
            k += 1;
        }
        Some(k)
    }
}

/// Provenance of one subsampling run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsampleMeta {
    pub theta_sectors: u32,
    pub phi_sectors: u32,
    pub theta_mode: String,
    pub theta_min: Option<f64>,
    pub theta_max: Option<f64>,
    pub input_points: usize,
    pub output_points: usize,
    pub dropped_outside_range: usize,
}

/// Keeps at most one point per (elevation, azimuth) sector. See
/// [`subsample_with_meta`].
pub fn subsample(cloud: &PointCloud, spec: &SectorGridSpec) -> Result<PointCloud> {
    subsample_with_meta(cloud, spec).map(|(c, _)| c)
}

/// Keeps at most one point per (elevation, azimuth) sector.
///
/// The azimuth axis spans `[-π, π)`. The representative of a sector is the
/// point closest to the sector center in elevation, then in azimuth, then by
/// range, then by `(x, y, z, intensity)`; the choice does not depend on input
/// order. Output points are ordered by sector (elevation-major).
pub fn subsample_with_meta(cloud: &PointCloud, spec: &SectorGridSpec) -> Result<(PointCloud, SubsampleMeta)> {
    subsample_impl(cloud, spec, DENSE_CELL_LIMIT)
}

fn subsample_impl(
    cloud: &PointCloud,
    spec: &SectorGridSpec,
    dense_limit: u64,
) -> Result<(PointCloud, SubsampleMeta)> {
    spec.validate()?;
    if cloud.frame() != Frame::Ego {
        return Err(Error::Validation("subsampling expects an ego-frame cloud".into()));
    }
    let points = cloud.points();
    let sph: Vec<SphericalPoint> = points.iter().map(to_spherical).collect();

    let (theta_mode, range) = match spec.theta_range {
        ThetaRange::Observed => {
            let range = sph.iter().fold(None, |acc: Option<(f64, f64)>, s| match acc {
                None => Some((s.theta, s.theta)),
                Some((lo, hi)) => Some((lo.min(s.theta), hi.max(s.theta))),
            });
            ("observed", range)
        }
        ThetaRange::Fixed { min, max } => ("fixed", Some((min, max))),
    };
    let mut meta = SubsampleMeta {
        theta_sectors: spec.theta_sectors,
        phi_sectors: spec.phi_sectors,
        theta_mode: theta_mode.to_string(),
        theta_min: range.map(|r| r.0),
        theta_max: range.map(|r| r.1),
        input_points: points.len(),
        output_points: 0,
        dropped_outside_range: 0,
    };
    let Some((lo, hi)) = range else {
        return Ok((PointCloud::empty(Frame::Ego), meta));
    };

    let theta_axis = SectorAxis::new(lo, hi, spec.theta_sectors);
    let phi_axis = SectorAxis::new(-PI, PI, spec.phi_sectors);

    let mut assigned: Vec<(u64, usize)> = Vec::with_capacity(points.len());
    for (i, s) in sph.iter().enumerate() {
        let Some(t) = theta_axis.index(s.theta) else {
            meta.dropped_outside_range += 1;
            continue;
        };
        let p = phi_axis.index(s.phi).expect("azimuth lies in [-π, π)");
        assigned.push((t as u64 * spec.phi_sectors as u64 + p as u64, i));
    }

    let better = |a: usize, b: usize, cell: u64| -> bool {
        let t = (cell / spec.phi_sectors as u64) as u32;
        let p = (cell % spec.phi_sectors as u64) as u32;
        compare_candidates(
            (&points[a], &sph[a]),
            (&points[b], &sph[b]),
            theta_axis.center(t),
            phi_axis.center(p),
        ) == Ordering::Less
    };

    let mut chosen: Vec<usize> = Vec::new();
    if spec.max_cells() <= dense_limit {
        let mut best: Vec<Option<usize>> = vec![None; spec.max_cells() as usize];
        for &(cell, i) in &assigned {
            let slot = &mut best[cell as usize];
            match *slot {
                Some(j) if !better(i, j, cell) => {}
                _ => *slot = Some(i),
            }
        }
        chosen.extend(best.into_iter().flatten());
    } else {
        assigned.sort_unstable_by_key(|&(cell, _)| cell);
        for group in assigned.chunk_by(|a, b| a.0 == b.0) {
            let cell = group[0].0;
            let mut winner = group[0].1;
            for &(_, i) in &group[1..] {
                if better(i, winner, cell) {
                    winner = i;
                }
            }
            chosen.push(winner);
        }
    }

    let out: Vec<Point3> = chosen.into_iter().map(|i| points[i]).collect();
    meta.output_points = out.len();
    Ok((PointCloud::new(out, Frame::Ego)?, meta))
}

const DENSE_CELL_LIMIT: u64 = 1 << 22;

fn compare_candidates(
    a: (&Point3, &SphericalPoint),
    b: (&Point3, &SphericalPoint),
    theta_center: f64,
    phi_center: f64,
) -> Ordering {
    let (pa, sa) = a;
    let (pb, sb) = b;
    (sa.theta - theta_center)
        .abs()
        .total_cmp(&(sb.theta - theta_center).abs())
        .then_with(|| (sa.phi - phi_center).abs().total_cmp(&(sb.phi - phi_center).abs()))
        .then_with(|| sa.rho.total_cmp(&sb.rho))
        .then_with(|| pa.x.total_cmp(&pb.x))
        .then_with(|| pa.y.total_cmp(&pb.y))
        .then_with(|| pa.z.total_cmp(&pb.z))
        .then_with(|| pa.intensity.total_cmp(&pb.intensity))
}

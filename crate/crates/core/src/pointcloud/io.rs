//! `BEVL` point cloud files: magic, u32 version, u64 count, then `count`
//! little-endian f32 quadruples `(x, y, z, intensity)`. Ego frame.

use std::path::Path;

use crate::error::{read_file, write_file, Error, Result};
use crate::geometry::{Frame, Point3, PointCloud};

pub const BEVL_MAGIC: &[u8; 4] = b"BEVL";
pub const BEVL_VERSION: u32 = 1;
const HEADER_LEN: usize = 16;
const POINT_LEN: usize = 16;

pub fn encode_cloud(cloud: &PointCloud) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + cloud.len() * POINT_LEN);
    out.extend_from_slice(BEVL_MAGIC);
    out.extend_from_slice(&BEVL_VERSION.to_le_bytes());
    out.extend_from_slice(&(cloud.len() as u64).to_le_bytes());
    for p in cloud.points() {
        for v in [p.x, p.y, p.z, p.intensity] {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_cloud(bytes: &[u8]) -> Result<PointCloud> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format("point cloud shorter than header".into()));
    }
    if &bytes[..4] != BEVL_MAGIC {
        return Err(Error::Format("bad BEVL magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != BEVL_VERSION {
        return Err(Error::Format(format!("unsupported BEVL version {version}")));
    }
    let count = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let body = &bytes[HEADER_LEN..];
    if (body.len() as u64) != count.saturating_mul(POINT_LEN as u64) {
        return Err(Error::Format(format!(
            "header declares {count} points but body holds {} bytes",
            body.len()
        )));
    }
    let points = body
        .chunks_exact(POINT_LEN)
        .map(|c| {
            let f = |i: usize| f32::from_le_bytes(c[4 * i..4 * i + 4].try_into().unwrap()) as f64;
            Point3::with_intensity(f(0), f(1), f(2), f(3))
        })
        .collect();
    PointCloud::new(points, Frame::Ego)
}

pub fn read_cloud(path: &Path) -> Result<PointCloud> {
    let bytes = read_file(path)?;
    decode_cloud(&bytes).map_err(|e| match e {
        Error::Format(m) | Error::Validation(m) => Error::parse(path, m),
        other => other,
    })
}

pub fn write_cloud(path: &Path, cloud: &PointCloud) -> Result<()> {
    write_file(path, &encode_cloud(cloud))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let c = PointCloud::new(vec![Point3::with_intensity(1.0, -2.0, 0.5, 0.25)], Frame::Ego).unwrap();
        let b = encode_cloud(&c);
        assert_eq!(&b[..4], b"BEVL");
        assert_eq!(&b[4..8], &[1, 0, 0, 0]);
        assert_eq!(&b[8..16], &[1, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(&b[16..20], &1.0f32.to_le_bytes());
        assert_eq!(b.len(), 32);
    }

    #[test]
    fn rejects_truncation_and_bad_magic() {
        let c = PointCloud::new(vec![Point3::new(1.0, 2.0, 3.0)], Frame::Ego).unwrap();
        let b = encode_cloud(&c);
        assert!(decode_cloud(&b[..b.len() - 1]).is_err());
        assert!(decode_cloud(&b[..10]).is_err());
        let mut bad = b.clone();
        bad[3] = b'X';
        assert!(decode_cloud(&bad).is_err());
        let mut bad = b;
        bad[4] = 2;
        assert!(decode_cloud(&bad).is_err());
    }

    proptest! {
        #[test]
        fn f32_points_round_trip(pts in prop::collection::vec(prop::array::uniform4(-1e4f32..1e4), 0..64)) {
            let cloud = PointCloud::new(
                pts.iter().map(|p| Point3::with_intensity(p[0] as f64, p[1] as f64, p[2] as f64, p[3] as f64)).collect(),
                Frame::Ego,
            ).unwrap();
            let back = decode_cloud(&encode_cloud(&cloud)).unwrap();
            prop_assert_eq!(back, cloud);
        }
    }
}

//! Canonical dataset manifest.
//!
//! A manifest is UTF-8 JSON (schema in `schema/manifest.schema.json`).
//! Relative paths resolve against the manifest's directory. LiDAR files are
//! stored in the ego frame.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::camera::Intrinsics;
use crate::error::{read_file, write_file, Error, Result};
use crate::geometry::{Pose, PoseRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub dataset_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapRef>,
    pub samples: Vec<SampleRecord>,
    #[serde(skip)]
    base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MapRef {
    /// GeoJSON-style polygon file.
    Vector { path: String },
    /// RGB raster, `map_meta.json` (origin, resolution) and the color filter
    /// configuration used to extract drivable pixels.
    Raster {
        image: String,
        meta: String,
        filter: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub sample_id: String,
    pub lidar: String,
    pub boxes: String,
    /// Ego pose in the map frame.
    pub ego_pose: PoseRecord,
    #[serde(default)]
    pub cameras: Vec<CameraRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraRecord {
    pub name: String,
    pub image: String,
    pub intrinsics: Intrinsics,
    /// Camera-to-ego pose; camera axes are z forward, x right, y down.
    pub pose: PoseRecord,
}

impl DatasetManifest {
    pub fn new(dataset_id: impl Into<String>, base_dir: impl Into<PathBuf>) -> Self {
        DatasetManifest {
            dataset_id: dataset_id.into(),
            map: None,
            samples: Vec::new(),
            base_dir: base_dir.into(),
        }
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn set_base_dir(&mut self, dir: impl Into<PathBuf>) {
        self.base_dir = dir.into();
    }

    pub fn resolve(&self, rel: &str) -> PathBuf {
        self.base_dir.join(rel)
    }

    pub fn sample(&self, id: &str) -> Option<&SampleRecord> {
        self.samples.iter().find(|s| s.sample_id == id)
    }

    /// Pretty JSON with a trailing newline. Field order is fixed by the
    /// struct layout, so save → load → save is byte-stable.
    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn content_hash(&self) -> String {
        sha256_hex(self.to_canonical_json().as_bytes())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_canonical_json().as_bytes())
    }

    /// Structural checks that need no file system access.
    pub fn validate_structure(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for s in &self.samples {
            if s.sample_id.is_empty() {
                return Err(Error::Validation("empty sample_id".into()));
            }
            if !seen.insert(s.sample_id.as_str()) {
                return Err(Error::DuplicateSample(s.sample_id.clone()));
            }
            s.ego_pose.to_pose().map_err(|e| {
                Error::Validation(format!("sample `{}` ego_pose: {e}", s.sample_id))
            })?;
            for cam in &s.cameras {
                cam.pose.to_pose().map_err(|e| {
                    Error::Validation(format!("sample `{}` camera `{}` pose: {e}", s.sample_id, cam.name))
                })?;
            }
        }
        Ok(())
    }

    /// Every file the manifest references, resolved.
    pub fn referenced_files(&self) -> Vec<PathBuf> {
        let mut out = Vec::new();
        match &self.map {
            Some(MapRef::Vector { path }) => out.push(self.resolve(path)),
            Some(MapRef::Raster { image, meta, filter }) => {
                out.extend([self.resolve(image), self.resolve(meta), self.resolve(filter)])
            }
            None => {}
        }
        for s in &self.samples {
            out.push(self.resolve(&s.lidar));
            out.push(self.resolve(&s.boxes));
            out.extend(s.cameras.iter().map(|c| self.resolve(&c.image)));
        }
        out
    }
}

impl SampleRecord {
    pub fn ego_pose(&self) -> Result<Pose> {
        self.ego_pose.to_pose()
    }
}

/// Parses and fully validates a manifest, including that every referenced
/// file exists.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let bytes = read_file(path)?;
    let mut manifest: DatasetManifest =
        serde_json::from_slice(&bytes).map_err(|e| Error::parse(path, e))?;
    manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    manifest.validate_structure()?;
    if let Some(missing) = manifest.referenced_files().into_iter().find(|p| !p.is_file()) {
        return Err(Error::MissingFile(missing));
    }
    Ok(manifest)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, rel: &str, contents: &str) {
        let p = dir.join(rel);
        std::fs::create_dir_all(p.parent().unwrap()).unwrap();
        std::fs::write(p, contents).unwrap();
    }

    fn sample(id: &str) -> SampleRecord {
        SampleRecord {
            sample_id: id.into(),
            lidar: format!("lidar/{id}.bin"),
            boxes: format!("boxes/{id}.json"),
            ego_pose: PoseRecord::identity(),
            cameras: vec![],
        }
    }

    #[test]
    fn empty_manifest_loads() {
        let dir = tempfile::tempdir().unwrap();
        let m = DatasetManifest::new("empty", dir.path());
        let path = dir.path().join("manifest.json");
        m.save(&path).unwrap();
        let loaded = load_manifest(&path).unwrap();
        assert_eq!(loaded.samples.len(), 0);
        assert_eq!(loaded.dataset_id, "empty");
    }

    #[test]
    fn missing_lidar_is_reported_by_path() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = DatasetManifest::new("ds", dir.path());
        m.samples.push(sample("s0"));
        write(dir.path(), "boxes/s0.json", "[]");
        let path = dir.path().join("manifest.json");
        m.save(&path).unwrap();
        match load_manifest(&path) {
            Err(Error::MissingFile(p)) => assert!(p.ends_with("lidar/s0.bin")),
            other => panic!("expected missing-file error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = DatasetManifest::new("ds", dir.path());
        m.samples.push(sample("a"));
        m.samples.push(sample("a"));
        for rel in ["lidar/a.bin", "boxes/a.json"] {
            write(dir.path(), rel, "");
        }
        let path = dir.path().join("manifest.json");
        m.save(&path).unwrap();
        assert!(matches!(load_manifest(&path), Err(Error::DuplicateSample(id)) if id == "a"));
    }

    #[test]
    fn parse_errors_and_bad_poses() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        std::fs::write(&path, "{not json").unwrap();
        assert!(matches!(load_manifest(&path), Err(Error::Parse { .. })));

        let mut m = DatasetManifest::new("ds", dir.path());
        let mut s = sample("a");
        s.ego_pose.rotation = [0.5, 0.0, 0.0, 0.0];
        m.samples.push(s);
        assert!(m.validate_structure().is_err());

        std::fs::write(&path, r#"{"dataset_id":"x","samples":[],"extra":1}"#).unwrap();
        assert!(matches!(load_manifest(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = DatasetManifest::new("ds", dir.path());
        m.map = Some(MapRef::Vector { path: "map.geojson".into() });
        let mut s = sample("a");
        s.ego_pose = PoseRecord::from_yaw(0.123456789, [10.1, -3.3, 0.0]);
        s.cameras.push(CameraRecord {
            name: "CAM_FRONT".into(),
            image: "cams/a_front.png".into(),
            intrinsics: Intrinsics::new(1266.4, 1266.4, 816.3, 491.5, 1600, 900).unwrap(),
            pose: PoseRecord::from_yaw(-0.3, [1.5, 0.0, 1.6]),
        });
        m.samples.push(s);
        for rel in ["map.geojson", "lidar/a.bin", "boxes/a.json", "cams/a_front.png"] {
            write(dir.path(), rel, "");
        }
        let path = dir.path().join("manifest.json");
        m.save(&path).unwrap();
        let first = std::fs::read(&path).unwrap();
        let loaded = load_manifest(&path).unwrap();
        let path2 = dir.path().join("manifest2.json");
        loaded.save(&path2).unwrap();
        assert_eq!(first, std::fs::read(&path2).unwrap());
        assert_eq!(loaded.content_hash(), m.content_hash());
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}

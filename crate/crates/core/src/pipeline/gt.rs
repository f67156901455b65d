use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotation::{read_boxes, SemanticClass};
use crate::error::{read_file, write_file, Error, Result};
use crate::grid::{GridSpec, SemanticGrid};
use crate::groundtruth::{
    drivable_from_raster, drivable_from_vector, rasterize_boxes, ColorFilterSpec, RasterMap, VectorMap,
    RASTER_PIPELINE,
};
use crate::manifest::{sha256_hex, DatasetManifest, MapRef, SampleRecord};

pub const GT_META_FILE: &str = "gt_meta.json";
pub const GRID_FILE: &str = "grid.bevg";

pub enum LoadedMap {
    None,
    Vector(VectorMap),
    Raster(RasterMap, ColorFilterSpec),
}

pub fn load_map(manifest: &DatasetManifest) -> Result<LoadedMap> {
    Ok(match &manifest.map {
        None => LoadedMap::None,
        Some(MapRef::Vector { path }) => LoadedMap::Vector(VectorMap::load(&manifest.resolve(path))?),
        Some(MapRef::Raster { image, meta, filter }) => LoadedMap::Raster(
            RasterMap::load(&manifest.resolve(image), &manifest.resolve(meta))?,
            ColorFilterSpec::load(&manifest.resolve(filter))?,
        ),
    })
}

/// Ground truth for one sample, planes in `classes` order.
pub fn sample_ground_truth(
    manifest: &DatasetManifest,
    sample: &SampleRecord,
    map: &LoadedMap,
    spec: &GridSpec,
    classes: &[SemanticClass],
) -> Result<SemanticGrid> {
    let boxes = if classes.iter().any(|c| c.object_class().is_some()) {
        read_boxes(&manifest.resolve(&sample.boxes))?
    } else {
        Vec::new()
    };
    let mut planes = Vec::with_capacity(classes.len());
    for &class in classes {
        let grid = match class.object_class() {
            Some(obj) => rasterize_boxes(&boxes, obj, spec),
            None => {
                let pose = sample.ego_pose()?;
                match map {
                    LoadedMap::Vector(v) => drivable_from_vector(v, &pose, spec),
                    LoadedMap::Raster(r, f) => drivable_from_raster(r, &pose, spec, f)?,
                    LoadedMap::None => {
                        return Err(Error::Validation(format!(
                            "dataset `{}` has no map; cannot build drivable ground truth",
                            manifest.dataset_id
                        )))
                    }
                }
            }
        };
        planes.push(grid);
    }
    SemanticGrid::stack(planes)
}

/// Written next to generated grids; also the GT cache record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GtMeta {
    pub dataset_id: String,
    pub cache_key: String,
    pub manifest_sha256: String,
    pub grid: GridSpec,
    pub classes: Vec<SemanticClass>,
    pub pipeline_version: String,
    pub raster_pipeline: Vec<String>,
    pub samples: Vec<String>,
}

impl GtMeta {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(GT_META_FILE);
        serde_json::from_slice(&read_file(&path)?).map_err(|e| Error::parse(&path, e))
    }
}

/// Key over the manifest content, grid spec, class list and pipeline
/// version.
pub fn gt_cache_key(manifest: &DatasetManifest, spec: &GridSpec, classes: &[SemanticClass]) -> String {
    let names: Vec<&str> = classes.iter().map(|c| c.name()).collect();
    let material = format!(
        "{}\n{}\n{}\n{}",
        manifest.content_hash(),
        serde_json::to_string(spec).expect("spec serializes"),
        names.join(","),
        crate::PIPELINE_VERSION
    );
    sha256_hex(material.as_bytes())
}

/// In-memory ground truth for a whole dataset, in manifest order.
pub struct DatasetGt {
    pub meta: GtMeta,
    pub grids: Vec<(String, SemanticGrid)>,
}

pub fn build_dataset_gt(manifest: &DatasetManifest, spec: &GridSpec, classes: &[SemanticClass]) -> Result<DatasetGt> {
    let map = load_map(manifest)?;
    let grids = manifest
        .samples
        .par_iter()
        .map(|s| Ok((s.sample_id.clone(), sample_ground_truth(manifest, s, &map, spec, classes)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DatasetGt {
        meta: GtMeta {
            dataset_id: manifest.dataset_id.clone(),
            cache_key: gt_cache_key(manifest, spec, classes),
            manifest_sha256: manifest.content_hash(),
            grid: *spec,
            classes: classes.to_vec(),
            pipeline_version: crate::PIPELINE_VERSION.to_string(),
            raster_pipeline: RASTER_PIPELINE.iter().map(|s| s.to_string()).collect(),
            samples: manifest.samples.iter().map(|s| s.sample_id.clone()).collect(),
        },
        grids,
    })
}

impl DatasetGt {
    /// `<dir>/<sample_id>/grid.bevg`, one `<class>.png` per class, and
    /// `gt_meta.json` written last so a partial directory is never taken
    /// for a complete one.
    pub fn write(&self, dir: &Path) -> Result<()> {
        self.grids.par_iter().try_for_each(|(id, grid)| {
            let sample_dir = dir.join(id);
            grid.write_bevg(&sample_dir.join(GRID_FILE))?;
            grid.write_pngs(&sample_dir)
        })?;
        let mut s = serde_json::to_string_pretty(&self.meta).expect("meta serializes");
        s.push('\n');
        write_file(&dir.join(GT_META_FILE), s.as_bytes())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let meta = GtMeta::load(dir)?;
        let grids = meta
            .samples
            .par_iter()
            .map(|id| {
                let g = SemanticGrid::read_bevg(&dir.join(id).join(GRID_FILE), meta.grid)?;
                if g.classes() != meta.classes.as_slice() {
                    return Err(Error::Mismatch(format!("grid for `{id}` lists classes {:?}", g.classes())));
                }
                Ok((id.clone(), g))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DatasetGt { meta, grids })
    }
}

/// Ground truth from `cache_root/<key>` when present, otherwise built and
/// stored there.
pub fn cached_dataset_gt(
    manifest: &DatasetManifest,
    spec: &GridSpec,
    classes: &[SemanticClass],
    cache_root: &Path,
) -> Result<(DatasetGt, PathBuf)> {
    let key = gt_cache_key(manifest, spec, classes);
    let dir = cache_root.join(&key);
    if let Ok(meta) = GtMeta::load(&dir) {
        if meta.cache_key == key {
            info!("ground truth for `{}` loaded from cache {}", manifest.dataset_id, dir.display());
            return Ok((DatasetGt::read(&dir)?, dir));
        }
    }
    let gt = build_dataset_gt(manifest, spec, classes)?;
    gt.write(&dir)?;
    Ok((gt, dir))
}

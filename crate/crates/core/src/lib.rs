//! Cross-dataset BEV semantic segmentation toolkit.
//!
//! Harmonizes LiDAR density and camera geometry across datasets, builds BEV
//! ground-truth grids from boxes and maps, and evaluates prediction grids
//! with IoU over train × test dataset matrices.

pub mod annotation;
pub mod camera;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod groundtruth;
pub mod imaging;
pub mod manifest;
pub mod metrics;
pub mod pipeline;
pub mod pointcloud;
pub mod synth;

pub use annotation::{read_boxes, write_boxes, BoxAnnotation, ObjectClass, SemanticClass};
pub use camera::Intrinsics;
pub use error::{Error, Result};
pub use geometry::{transform_cloud, Frame, Point3, PointCloud, Pose, PoseRecord};
pub use grid::{GridKind, GridSpec, SemanticGrid};
pub use manifest::{load_manifest, DatasetManifest};

/// Tag recorded in reports and GT cache keys; bump when GT or metric
/// semantics change.
pub const PIPELINE_VERSION: &str = concat!("beval-", env!("CARGO_PKG_VERSION"), "+gt1");

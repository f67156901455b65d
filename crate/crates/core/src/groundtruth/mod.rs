//! BEV ground-truth grids from box annotations and map data.

mod boxes;
mod morphology;
mod raster;
mod vector;

pub use boxes::{footprint_contains, rasterize_boxes};
pub use morphology::{close, dilate, erode, BinaryMask, StructuringElement};
pub use raster::{
    crop_ego_window, downscale_majority, drivable_from_raster, ClosingConfig, ColorFilterSpec, ColorTarget,
    RasterMap, RasterMeta, RASTER_PIPELINE,
};
pub use vector::{drivable_from_vector, MapPolygon, VectorMap, DRIVABLE_LABEL};

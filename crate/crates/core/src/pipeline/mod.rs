//! Dataset-level orchestration: ground-truth generation and caching,
//! prediction loading and evaluation runs.

mod eval;
mod gt;
mod predict;
mod run;

pub use eval::{evaluate, task_label, EvalOptions, EvalOutcome, MissingPolicy};
pub use gt::{
    build_dataset_gt, cached_dataset_gt, gt_cache_key, load_map, sample_ground_truth, DatasetGt, GtMeta, LoadedMap,
    GRID_FILE, GT_META_FILE,
};
pub use predict::{load_prediction, noise_rng, PredictionSource};
pub use run::{merge_reports, run_pipeline, DatasetEntry, PredictionEntry, RunConfig};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::predict::PredictionSource;
use crate::annotation::SemanticClass;
use crate::error::{Error, Result};
use crate::grid::SemanticGrid;
use crate::metrics::{binarize, Aggregation, ClassIou, IouAccumulator, IouMeasurement, DEFAULT_THRESHOLD};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MissingPolicy {
    /// A sample without a prediction is an error.
    #[default]
    Fail,
    /// Missing samples are left out and listed.
    Skip,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub threshold: f32,
    pub missing: MissingPolicy,
    /// Worker threads; results do not depend on it.
    pub jobs: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            threshold: DEFAULT_THRESHOLD,
            missing: MissingPolicy::Fail,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub accumulator: IouAccumulator,
    pub skipped: Vec<String>,
}

impl EvalOutcome {
    pub fn class_ious(&self) -> Vec<ClassIou> {
        self.accumulator.finalize()
    }

    pub fn measurements(&self, model: &str, task: &str, train: &str, test: &str, agg: Aggregation) -> Vec<IouMeasurement> {
        self.class_ious()
            .into_iter()
            .map(|c| IouMeasurement {
                model: model.to_string(),
                task: task.to_string(),
                train: train.to_string(),
                test: test.to_string(),
                class: c.class,
                iou: match agg {
                    Aggregation::Dataset => c.iou,
                    Aggregation::PerSampleMean => c.per_sample_mean,
                },
            })
            .collect()
    }
}

/// Default task label: class names joined with `+`.
pub fn task_label(classes: &[SemanticClass]) -> String {
    classes.iter().map(|c| c.name()).collect::<Vec<_>>().join("+")
}

/// Scores `source` against ground-truth grids (in manifest order) over
/// `classes`. Samples are processed in parallel and merged in order.
pub fn evaluate(
    gt: &[(String, SemanticGrid)],
    source: &PredictionSource,
    classes: &[SemanticClass],
    opts: &EvalOptions,
) -> Result<EvalOutcome> {
    if gt.is_empty() {
        return Err(Error::EmptyInput("ground-truth samples"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| Error::Invariant(format!("thread pool: {e}")))?;
    let per_sample: Vec<Result<Option<IouAccumulator>>> = pool.install(|| {
        gt.par_iter()
            .enumerate()
            .map(|(index, (id, g))| {
                let g = g.select(classes)?;
                let Some(pred) = source.predict(id, index, &g)? else {
                    return Ok(None);
                };
                let mut acc = IouAccumulator::new(classes.to_vec());
                acc.accumulate(&binarize(&pred, opts.threshold)?, &binarize(&g, opts.threshold)?)?;
                Ok(Some(acc))
            })
            .collect()
    });
    let mut accumulator = IouAccumulator::new(classes.to_vec());
    let mut skipped = Vec::new();
    for ((id, _), r) in gt.iter().zip(per_sample) {
        match r? {
            Some(acc) => accumulator.merge(&acc)?,
            None if opts.missing == MissingPolicy::Skip => skipped.push(id.clone()),
            None => return Err(Error::MissingFile(missing_path(source, id))),
        }
    }
    if !skipped.is_empty() {
        warn!("{} samples had no prediction and were skipped", skipped.len());
    }
    if accumulator.samples() == 0 {
        return Err(Error::EmptyInput("predictions"));
    }
    Ok(EvalOutcome { accumulator, skipped })
}

fn missing_path(source: &PredictionSource, id: &str) -> std::path::PathBuf {
    match source {
        PredictionSource::Dir(d) => d.join(id),
        _ => id.into(),
    }
}

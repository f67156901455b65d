//! IoU accumulation, baseline-relative deltas and report emission.

mod report;

use log::info;
use serde::{Deserialize, Serialize};

pub use report::{
    assemble_report, format_cell, format_pct, Aggregation, CrossEvalCell, EvalReport, IouMeasurement,
    ReportMetadata, POOLED_TRAIN,
};

use crate::annotation::SemanticClass;
use crate::error::{Error, Result};
use crate::grid::{GridKind, SemanticGrid};

pub const DEFAULT_THRESHOLD: f32 = 0.5;

/// Thresholds a probability grid (`value >= threshold` is foreground).
/// Binary grids pass through unchanged.
pub fn binarize(grid: &SemanticGrid, threshold: f32) -> Result<SemanticGrid> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Validation(format!("threshold {threshold} must lie in (0, 1)")));
    }
    if grid.kind() == GridKind::Binary {
        info!("grid is already binary; threshold not applied");
        return Ok(grid.clone());
    }
    let data = grid.data().iter().map(|&v| (v >= threshold) as u8 as f32).collect();
    SemanticGrid::from_data(*grid.spec(), grid.classes().to_vec(), GridKind::Binary, data)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub intersection: u64,
    pub union: u64,
}

impl ClassCounts {
    /// `None` when the union is empty.
    pub fn iou(&self) -> Option<f64> {
        (self.union > 0).then(|| self.intersection as f64 / self.union as f64)
    }
}

/// Per-class intersection and union cell counts summed over samples.
#[derive(Debug, Clone, PartialEq)]
pub struct IouAccumulator {
    classes: Vec<SemanticClass>,
    counts: Vec<ClassCounts>,
    // defined per-sample IoUs, for the per-sample-mean variant
    per_sample: Vec<Vec<f64>>,
    samples: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassIou {
    pub class: SemanticClass,
    pub counts: ClassCounts,
    /// Σ∩ / Σ∪; `None` when nothing was ever predicted or labeled.
    pub iou: Option<f64>,
    /// Mean over samples whose own union is nonempty.
    pub per_sample_mean: Option<f64>,
}

impl IouAccumulator {
    pub fn new(classes: Vec<SemanticClass>) -> Self {
        let n = classes.len();
        IouAccumulator {
            classes,
            counts: vec![ClassCounts::default(); n],
            per_sample: vec![Vec::new(); n],
            samples: 0,
        }
    }

    pub fn classes(&self) -> &[SemanticClass] {
        &self.classes
    }

    pub fn counts(&self) -> &[ClassCounts] {
        &self.counts
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    /// Both grids must be binary, share a spec and list exactly the
    /// accumulator's classes in order.
    pub fn accumulate(&mut self, pred: &SemanticGrid, gt: &SemanticGrid) -> Result<()> {
        if pred.spec() != gt.spec() {
            return Err(Error::Mismatch(format!(
                "prediction grid {:?} differs from ground truth {:?}",
                pred.spec(),
                gt.spec()
            )));
        }
        if pred.classes() != self.classes.as_slice() || gt.classes() != self.classes.as_slice() {
            return Err(Error::Mismatch(format!(
                "class lists differ: accumulator {:?}, prediction {:?}, ground truth {:?}",
                self.classes,
                pred.classes(),
                gt.classes()
            )));
        }
        if pred.kind() != GridKind::Binary || gt.kind() != GridKind::Binary {
            return Err(Error::Mismatch("accumulate expects binary grids; binarize first".into()));
        }
        for k in 0..self.classes.len() {
            let (mut inter, mut union) = (0u64, 0u64);
            for (&p, &g) in pred.plane(k).iter().zip(gt.plane(k)) {
                let (p, g) = (p == 1.0, g == 1.0);
                inter += (p && g) as u64;
                union += (p || g) as u64;
            }
            self.counts[k].intersection += inter;
            self.counts[k].union += union;
            if union > 0 {
                self.per_sample[k].push(inter as f64 / union as f64);
            }
        }
        self.samples += 1;
        Ok(())
    }

    /// Adds another accumulator's counts; associative and commutative.
    pub fn merge(&mut self, other: &IouAccumulator) -> Result<()> {
        if other.classes != self.classes {
            return Err(Error::Mismatch("cannot merge accumulators over different classes".into()));
        }
        for k in 0..self.classes.len() {
            self.counts[k].intersection += other.counts[k].intersection;
            self.counts[k].union += other.counts[k].union;
            self.per_sample[k].extend_from_slice(&other.per_sample[k]);
        }
        self.samples += other.samples;
        Ok(())
    }

    pub fn finalize(&self) -> Vec<ClassIou> {
        self.classes
            .iter()
            .enumerate()
            .map(|(k, &class)| {
                let mut v = self.per_sample[k].clone();
                // sorted summation keeps the mean independent of merge order
                v.sort_by(f64::total_cmp);
                let per_sample_mean = (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
                ClassIou {
                    class,
                    counts: self.counts[k],
                    iou: self.counts[k].iou(),
                    per_sample_mean,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Drop,
    Increase,
    Flat,
}

impl Direction {
    pub fn arrow(self) -> &'static str {
        match self {
            Direction::Drop => "↓",
            Direction::Increase => "↑",
            Direction::Flat => "→",
        }
    }
}

/// `(cross − baseline) / baseline × 100`. `None` when the baseline is not
/// positive.
pub fn delta_pct(baseline: f64, cross: f64) -> Option<(f64, Direction)> {
    if !(baseline > 0.0 && baseline.is_finite() && cross.is_finite()) {
        return None;
    }
    let v = (cross - baseline) / baseline * 100.0;
    let dir = if cross < baseline {
        Direction::Drop
    } else if cross > baseline {
        Direction::Increase
    } else {
        Direction::Flat
    };
    Some((v, dir))
}

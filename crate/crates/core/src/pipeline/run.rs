use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::eval::{evaluate, task_label, EvalOptions, MissingPolicy};
use super::gt::{cached_dataset_gt, DatasetGt};
use super::predict::PredictionSource;
use crate::annotation::SemanticClass;
use crate::error::{read_file, Error, Result};
use crate::grid::GridSpec;
use crate::manifest::load_manifest;
use crate::metrics::{assemble_report, Aggregation, EvalReport, ReportMetadata};
use crate::metrics::DEFAULT_THRESHOLD;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub id: String,
    pub manifest: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionEntry {
    pub model: String,
    /// Defaults to the class names joined with `+`.
    #[serde(default)]
    pub task: Option<String>,
    pub train: String,
    /// When absent the entry is evaluated on every dataset, and directory
    /// sources are read from `<source>/<test id>`.
    #[serde(default)]
    pub test: Option<String>,
    /// Prediction directory or `builtin:<name>`.
    pub source: String,
    /// Defaults to the run's class list.
    #[serde(default)]
    pub classes: Option<Vec<SemanticClass>>,
}

fn default_threshold() -> f32 {
    DEFAULT_THRESHOLD
}

fn all_classes() -> Vec<SemanticClass> {
    SemanticClass::ALL.to_vec()
}

fn default_jobs() -> usize {
    1
}

/// One full evaluation: datasets, prediction sets and report settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub datasets: Vec<DatasetEntry>,
    pub predictions: Vec<PredictionEntry>,
    #[serde(default = "all_classes")]
    pub classes: Vec<SemanticClass>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_threshold")]
    pub threshold: f32,
    #[serde(default)]
    pub aggregation: Aggregation,
    #[serde(default)]
    pub missing: MissingPolicy,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    /// Markdown report path; CSV and JSON siblings share its stem.
    pub output: PathBuf,
    /// Defaults to `gt_cache` next to the report.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::parse("<run config>", e))
    }

    /// Relative paths are taken relative to the config file.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        let text = String::from_utf8(bytes).map_err(|e| Error::parse(path, e))?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| Error::parse(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for d in &mut cfg.datasets {
            rebase(&mut d.manifest);
        }
        for p in &mut cfg.predictions {
            if !p.source.starts_with("builtin:") && Path::new(&p.source).is_relative() {
                p.source = base.join(&p.source).to_string_lossy().into_owned();
            }
        }
        rebase(&mut cfg.output);
        if let Some(c) = &mut cfg.cache_dir {
            rebase(c);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::Validation("run config lists no datasets".into()));
        }
        if self.predictions.is_empty() {
            return Err(Error::Validation("run config lists no predictions".into()));
        }
        if self.jobs == 0 {
            return Err(Error::Validation("jobs must be at least 1".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Validation(format!("threshold {} outside (0, 1)", self.threshold)));
        }
        let ids: Vec<&str> = self.datasets.iter().map(|d| d.id.as_str()).collect();
        for (i, id) in ids.iter().enumerate() {
            if ids[..i].contains(id) {
                return Err(Error::Validation(format!("dataset `{id}` listed twice")));
            }
        }
        for p in &self.predictions {
            if let Some(t) = &p.test {
                if !ids.contains(&t.as_str()) {
                    return Err(Error::Validation(format!("prediction test set `{t}` is not a configured dataset")));
                }
            }
            p.source.parse::<PredictionSource>()?;
            if p.classes.as_ref().is_some_and(|c| c.is_empty()) {
                return Err(Error::Validation(format!("prediction `{}` has an empty class list", p.model)));
            }
        }
        Ok(())
    }

    fn cache_root(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| {
            self.output.parent().unwrap_or(Path::new("")).join("gt_cache")
        })
    }

    /// Classes needed from each dataset's ground truth.
    fn gt_classes(&self) -> Vec<SemanticClass> {
        let mut out: Vec<SemanticClass> = Vec::new();
        for p in &self.predictions {
            for c in p.classes.as_deref().unwrap_or(&self.classes) {
                if !out.contains(c) {
                    out.push(*c);
                }
            }
        }
        out.sort();
        out
    }
}


/// Builds (or reuses cached) ground truth, evaluates every prediction
/// entry and assembles the report. Nothing is written except the GT cache.
pub fn run_pipeline(cfg: &RunConfig) -> Result<EvalReport> {
    cfg.validate()?;
    let gt_classes = cfg.gt_classes();
    let cache = cfg.cache_root();
    let mut gts: BTreeMap<&str, DatasetGt> = BTreeMap::new();
    for d in &cfg.datasets {
        let manifest = load_manifest(&d.manifest)?;
        if manifest.dataset_id != d.id {
            warn!("manifest {} declares dataset `{}`, configured as `{}`", d.manifest.display(), manifest.dataset_id, d.id);
        }
        let (gt, dir) = cached_dataset_gt(&manifest, &cfg.grid, &gt_classes, &cache)?;
        info!("ground truth for `{}` at {}", d.id, dir.display());
        gts.insert(&d.id, gt);
    }

    let opts = EvalOptions {
        threshold: cfg.threshold,
        missing: cfg.missing,
        jobs: cfg.jobs,
    };
    let mut metadata = ReportMetadata::new(cfg.grid, cfg.threshold, cfg.aggregation, gt_classes);
    let mut measurements = Vec::new();
    let mut warnings = Vec::new();
    for p in &cfg.predictions {
        let classes = p.classes.clone().unwrap_or_else(|| cfg.classes.clone());
        let task = p.task.clone().unwrap_or_else(|| task_label(&classes));
        let source: PredictionSource = p.source.parse()?;
        let tests: Vec<&str> = match &p.test {
            Some(t) => vec![t.as_str()],
            None => cfg.datasets.iter().map(|d| d.id.as_str()).collect(),
        };
        for test in tests {
            let src = if p.test.is_some() { source.clone() } else { source.join(test) };
            let outcome = evaluate(&gts[test].grids, &src, &classes, &opts)?;
            if !outcome.skipped.is_empty() {
                warnings.push(format!(
                    "model {} train {} test {}: {} samples without predictions skipped",
                    p.model,
                    p.train,
                    test,
                    outcome.skipped.len()
                ));
            }
            let n = outcome.accumulator.samples();
            let entry = metadata.sample_counts.entry(test.to_string()).or_insert(n);
            *entry = (*entry).max(n);
            measurements.extend(outcome.measurements(&p.model, &task, &p.train, test, cfg.aggregation));
        }
    }
    let mut report = assemble_report(measurements, metadata)?;
    warnings.append(&mut report.warnings);
    report.warnings = warnings;
    Ok(report)
}

/// Combines separately produced reports (for example baselines and
/// cross-dataset runs) into one. Grid, threshold and aggregation must agree.
pub fn merge_reports(reports: &[EvalReport]) -> Result<EvalReport> {
    let first = reports.first().ok_or(Error::EmptyInput("reports"))?;
    let mut metadata = first.metadata.clone();
    let mut measurements = Vec::new();
    let mut warnings = Vec::new();
    for r in reports {
        let m = &r.metadata;
        if m.grid != metadata.grid || m.threshold != metadata.threshold || m.aggregation != metadata.aggregation {
            return Err(Error::Mismatch("reports differ in grid, threshold or aggregation".into()));
        }
        if m.pipeline_version != metadata.pipeline_version {
            warn!("merging reports from pipeline versions {} and {}", metadata.pipeline_version, m.pipeline_version);
        }
        for c in &m.classes {
            if !metadata.classes.contains(c) {
                metadata.classes.push(*c);
            }
        }
        for (k, &v) in &m.sample_counts {
            let e = metadata.sample_counts.entry(k.clone()).or_insert(v);
            *e = (*e).max(v);
        }
        metadata.classes.sort();
        measurements.extend(r.measurements());
        // baseline pairing is redone below, so its old warnings are stale
        warnings.extend(
            r.warnings
                .iter()
                .filter(|w| !w.starts_with("no baseline for") && !w.starts_with("baseline IoU is zero for"))
                .cloned(),
        );
    }
    let mut report = assemble_report(measurements, metadata)?;
    warnings.append(&mut report.warnings);
    report.warnings = warnings;
    Ok(report)
}

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};

use super::{delta_pct, Direction};
use crate::annotation::SemanticClass;
use crate::error::{read_file, write_file, Error, Result};
use crate::grid::GridSpec;

/// Train-set label for models trained on the union of all datasets.
pub const POOLED_TRAIN: &str = "both";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Σ∩ / Σ∪ over all samples.
    #[default]
    Dataset,
    PerSampleMean,
}

/// One finalized IoU before baselines are attached.
#[derive(Debug, Clone, PartialEq)]
pub struct IouMeasurement {
    pub model: String,
    /// Prediction task; joint multi-class models share one task across
    /// several classes.
    pub task: String,
    pub train: String,
    pub test: String,
    pub class: SemanticClass,
    pub iou: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossEvalCell {
    pub model: String,
    pub task: String,
    pub train: String,
    pub test: String,
    pub class: SemanticClass,
    /// Fraction in `[0, 1]`.
    pub iou: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_iou: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_pct: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
}

impl CrossEvalCell {
    pub fn is_baseline(&self) -> bool {
        self.train == self.test
    }

    pub fn is_pooled(&self) -> bool {
        self.train == POOLED_TRAIN
    }

    fn key(&self) -> (&str, &str, &str, &str, SemanticClass) {
        (&self.model, &self.task, &self.train, &self.test, self.class)
    }

    fn delta(&self) -> Option<(f64, Direction)> {
        self.delta_pct.zip(self.direction)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportMetadata {
    pub grid: GridSpec,
    pub threshold: f32,
    pub aggregation: Aggregation,
    pub classes: Vec<SemanticClass>,
    /// Evaluated samples per test dataset.
    pub sample_counts: BTreeMap<String, u64>,
    pub pipeline_version: String,
}

impl ReportMetadata {
    pub fn new(grid: GridSpec, threshold: f32, aggregation: Aggregation, classes: Vec<SemanticClass>) -> Self {
        ReportMetadata {
            grid,
            threshold,
            aggregation,
            classes,
            sample_counts: BTreeMap::new(),
            pipeline_version: crate::PIPELINE_VERSION.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalReport {
    pub metadata: ReportMetadata,
    pub cells: Vec<CrossEvalCell>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// Builds report cells, attaching to every non-baseline cell the
/// same-model, same-task IoU trained and tested on its test set.
pub fn assemble_report(measurements: Vec<IouMeasurement>, metadata: ReportMetadata) -> Result<EvalReport> {
    let mut warnings = Vec::new();
    let mut cells = Vec::with_capacity(measurements.len());
    for m in measurements {
        match m.iou {
            Some(iou) if (0.0..=1.0).contains(&iou) => cells.push(CrossEvalCell {
                model: m.model,
                task: m.task,
                train: m.train,
                test: m.test,
                class: m.class,
                iou,
                baseline_iou: None,
                delta_pct: None,
                direction: None,
            }),
            Some(iou) => return Err(Error::Invariant(format!("IoU {iou} outside [0, 1]"))),
            None => warnings.push(format!(
                "IoU undefined (empty union) for model {} task {} train {} test {} class {}; excluded",
                m.model, m.task, m.train, m.test, m.class
            )),
        }
    }
    cells.sort_by(|a, b| a.key().cmp(&b.key()));
    for w in cells.windows(2) {
        if w[0].key() == w[1].key() {
            return Err(Error::Validation(format!(
                "duplicate cell for model {} task {} train {} test {} class {}",
                w[0].model, w[0].task, w[0].train, w[0].test, w[0].class
            )));
        }
    }
    let baselines: HashMap<(String, String, String, SemanticClass), f64> = cells
        .iter()
        .filter(|c| c.is_baseline())
        .map(|c| ((c.model.clone(), c.task.clone(), c.test.clone(), c.class), c.iou))
        .collect();
    for c in cells.iter_mut().filter(|c| !c.is_baseline()) {
        match baselines.get(&(c.model.clone(), c.task.clone(), c.test.clone(), c.class)) {
            Some(&b) => match delta_pct(b, c.iou) {
                Some((d, dir)) => {
                    c.baseline_iou = Some(b);
                    c.delta_pct = Some(d);
                    c.direction = Some(dir);
                }
                None => warnings.push(format!(
                    "baseline IoU is zero for model {} task {} test {} class {}; no delta",
                    c.model, c.task, c.test, c.class
                )),
            },
            None => warnings.push(format!(
                "no baseline for model {} task {} test {} class {}",
                c.model, c.task, c.test, c.class
            )),
        }
    }
    for w in &warnings {
        warn!("{w}");
    }
    Ok(EvalReport {
        metadata,
        cells,
        warnings,
    })
}

/// Percentage with at most two decimals, trailing zeros trimmed.
pub fn format_pct(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// Markdown cell such as `10.5 (68.13% ↓)`; `iou` is a fraction.
pub fn format_cell(iou: f64, delta: Option<(f64, Direction)>) -> String {
    match delta {
        Some((d, dir)) => format!("{} ({}% {})", format_pct(iou * 100.0), format_pct(d.abs()), dir.arrow()),
        None => format_pct(iou * 100.0),
    }
}

struct TaskInfo {
    title: String,
    classes: Vec<SemanticClass>,
}

impl EvalReport {
    pub fn empty(metadata: ReportMetadata) -> Self {
        EvalReport {
            metadata,
            cells: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(format!("report json: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        let text = std::str::from_utf8(&bytes).map_err(|e| Error::parse(path, e))?;
        Self::from_json(text).map_err(|e| Error::parse(path, e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_json().as_bytes())
    }

    /// Cells back to measurements, for re-assembly after merging reports.
    pub fn measurements(&self) -> Vec<IouMeasurement> {
        self.cells
            .iter()
            .map(|c| IouMeasurement {
                model: c.model.clone(),
                task: c.task.clone(),
                train: c.train.clone(),
                test: c.test.clone(),
                class: c.class,
                iou: Some(c.iou),
            })
            .collect()
    }

    /// Display-precision CSV, one row per cell.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("model,task,train,test,class,iou_pct,baseline_pct,delta_pct,direction\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_default();
        for c in &self.cells {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{:.2},{},{},{}",
                csv_field(&c.model),
                csv_field(&c.task),
                csv_field(&c.train),
                csv_field(&c.test),
                c.class,
                c.iou * 100.0,
                opt(c.baseline_iou.map(|b| b * 100.0)),
                opt(c.delta_pct),
                c.direction.map(|d| format!("{d:?}").to_lowercase()).unwrap_or_default()
            );
        }
        s
    }

    /// Long-format CSV for grouped bar charts of IoU per setting.
    pub fn to_bars_csv(&self) -> String {
        let mut s = String::from("model,task,class,test,train,setting,iou_pct\n");
        for c in &self.cells {
            let setting = if c.is_baseline() {
                "baseline"
            } else if c.is_pooled() {
                "pooled"
            } else {
                "cross"
            };
            let _ = writeln!(
                s,
                "{},{},{},{},{},{setting},{:.4}",
                csv_field(&c.model),
                csv_field(&c.task),
                c.class,
                csv_field(&c.test),
                csv_field(&c.train),
                c.iou * 100.0
            );
        }
        s
    }

    fn tasks(&self) -> Vec<(String, TaskInfo)> {
        let mut by_task: BTreeMap<&str, BTreeSet<SemanticClass>> = BTreeMap::new();
        for c in &self.cells {
            by_task.entry(&c.task).or_default().insert(c.class);
        }
        let mut tasks: Vec<(String, TaskInfo)> = by_task
            .into_iter()
            .map(|(t, set)| {
                let classes: Vec<SemanticClass> = set.into_iter().collect();
                let title = classes.iter().map(|c| c.title()).collect::<Vec<_>>().join(" / ");
                (t.to_string(), TaskInfo { title, classes })
            })
            .collect();
        tasks.sort_by(|a, b| (a.1.classes.len(), &a.1.classes, &a.0).cmp(&(b.1.classes.len(), &b.1.classes, &b.0)));
        tasks
    }

    fn lookup(&self, model: &str, task: &str, train: &str, test: &str, class: SemanticClass) -> Option<&CrossEvalCell> {
        self.cells
            .binary_search_by(|c| c.key().cmp(&(model, task, train, test, class)))
            .ok()
            .map(|i| &self.cells[i])
    }

    /// One sub-table per task: rows are models, and each test set gets a
    /// baseline column followed by starred columns for models trained
    /// elsewhere, annotated with the relative change. Pooled-training
    /// results follow in a separate table with direction arrows only.
    pub fn to_markdown(&self) -> String {
        let mut s = String::from("# Cross-dataset IoU [%]\n");
        let tests: BTreeSet<&str> = self.cells.iter().map(|c| c.test.as_str()).collect();
        let models: BTreeSet<&str> = self.cells.iter().map(|c| c.model.as_str()).collect();
        let tasks = self.tasks();

        for (task, info) in &tasks {
            let task_cells = || self.cells.iter().filter(move |c| &c.task == task);
            if !task_cells().any(|c| !c.is_pooled()) {
                continue;
            }
            // (test, train) column pairs in display order
            let mut columns: Vec<(&str, &str, String)> = Vec::new();
            for &t in &tests {
                columns.push((t, t, t.to_string()));
                let others: BTreeSet<&str> = task_cells()
                    .filter(|c| c.test == t && !c.is_baseline() && !c.is_pooled())
                    .map(|c| c.train.as_str())
                    .collect();
                for &o in &others {
                    let header = if others.len() == 1 { format!("{t}*") } else { format!("{t}* ({o})") };
                    columns.push((t, o, header));
                }
            }
            let _ = write!(s, "\n## {}\n\n|", info.title);
            for (_, _, h) in &columns {
                let _ = write!(s, " | {h}");
            }
            s.push_str(" |\n|---");
            for _ in &columns {
                s.push_str("|---");
            }
            s.push_str("|\n");
            for &m in &models {
                if !task_cells().any(|c| c.model == m && !c.is_pooled()) {
                    continue;
                }
                let _ = write!(s, "| {m}");
                for (test, train, _) in &columns {
                    let parts: Vec<String> = info
                        .classes
                        .iter()
                        .map(|&cls| match self.lookup(m, task, train, test, cls) {
                            Some(c) => format_cell(c.iou, c.delta()),
                            None => "-".to_string(),
                        })
                        .collect();
                    let _ = write!(s, " | {}", parts.join(" / "));
                }
                s.push_str(" |\n");
            }
        }

        if self.cells.iter().any(CrossEvalCell::is_pooled) {
            s.push_str("\n## Trained on both datasets\n\n|");
            let mut columns: Vec<(&str, &str, &TaskInfo)> = Vec::new();
            for &t in &tests {
                for (task, info) in &tasks {
                    if self.cells.iter().any(|c| c.is_pooled() && c.test == t && &c.task == task) {
                        columns.push((t, task, info));
                    }
                }
            }
            for (t, _, info) in &columns {
                let _ = write!(s, " | {t}: {}", info.title);
            }
            s.push_str(" |\n|---");
            for _ in &columns {
                s.push_str("|---");
            }
            s.push_str("|\n");
            for &m in &models {
                if !self.cells.iter().any(|c| c.model == m && c.is_pooled()) {
                    continue;
                }
                let _ = write!(s, "| {m}");
                for (t, task, info) in &columns {
                    let parts: Vec<String> = info
                        .classes
                        .iter()
                        .map(|&cls| match self.lookup(m, task, POOLED_TRAIN, t, cls) {
                            Some(c) => match c.direction {
                                Some(d) => format!("{} ({})", format_pct(c.iou * 100.0), d.arrow()),
                                None => format_pct(c.iou * 100.0),
                            },
                            None => "-".to_string(),
                        })
                        .collect();
                    let _ = write!(s, " | {}", parts.join(" / "));
                }
                s.push_str(" |\n");
            }
        }
        s
    }

    /// Writes `<stem>.md`, `<stem>.csv`, `<stem>.json` and
    /// `<stem>_bars.csv` next to `markdown_path`.
    pub fn emit(&self, markdown_path: &Path) -> Result<Vec<PathBuf>> {
        let stem = markdown_path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::Validation(format!("bad report path {}", markdown_path.display())))?;
        let dir = markdown_path.parent().unwrap_or(Path::new(""));
        let outputs = [
            (markdown_path.to_path_buf(), self.to_markdown()),
            (dir.join(format!("{stem}.csv")), self.to_csv()),
            (dir.join(format!("{stem}.json")), self.to_json()),
            (dir.join(format!("{stem}_bars.csv")), self.to_bars_csv()),
        ];
        let mut written = Vec::new();
        for (path, text) in outputs {
            write_file(&path, text.as_bytes())?;
            written.push(path);
        }
        Ok(written)
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> ReportMetadata {
        ReportMetadata::new(GridSpec::default(), 0.5, Aggregation::Dataset, vec![SemanticClass::Vehicle])
    }

    fn m(model: &str, task: &str, train: &str, test: &str, class: SemanticClass, iou: f64) -> IouMeasurement {
        IouMeasurement {
            model: model.into(),
            task: task.into(),
            train: train.into(),
            test: test.into(),
            class,
            iou: Some(iou),
        }
    }

    fn vehicle_table() -> EvalReport {
        use SemanticClass::Vehicle as V;
        assemble_report(
            vec![
                m("LSS", "vehicle", "NS", "NS", V, 0.3295),
                m("LSS", "vehicle", "WP", "NS", V, 0.105),
                m("LSS", "vehicle", "WP", "WP", V, 0.2707),
                m("LSS", "vehicle", "NS", "WP", V, 0.2263),
                m("LAPT-PP", "vehicle", "NS", "NS", V, 0.531),
                m("LAPT-PP", "vehicle", "WP", "NS", V, 0.1046),
                m("LAPT-PP", "vehicle", "WP", "WP", V, 0.7137),
                m("LAPT-PP", "vehicle", "NS", "WP", V, 0.141),
            ],
            meta(),
        )
        .unwrap()
    }

    #[test]
    fn cell_format() {
        assert_eq!(format_cell(0.105, delta_pct(0.3295, 0.105)), "10.5 (68.13% ↓)");
        assert_eq!(format_cell(0.141, delta_pct(0.7137, 0.141)), "14.1 (80.24% ↓)");
        assert_eq!(format_cell(0.1913, delta_pct(0.155, 0.1913)), "19.13 (23.42% ↑)");
        assert_eq!(format_pct(-0.001), "0");
        assert_eq!(format_pct(80.30), "80.3");
    }

    #[test]
    fn markdown_layout() {
        let md = vehicle_table().to_markdown();
        assert!(md.contains("\n## Vehicle\n\n| | NS | NS* | WP | WP* |\n|---|---|---|---|---|\n"), "{md}");
        assert!(md.contains("| LSS | 32.95 | 10.5 (68.13% ↓) | 27.07 | 22.63 (16.4% ↓) |"), "{md}");
        assert!(md.contains("| LAPT-PP | 53.1 | 10.46 (80.3% ↓) | 71.37 | 14.1 (80.24% ↓) |"), "{md}");
    }

    #[test]
    fn deltas_attached_only_to_cross_cells() {
        let r = vehicle_table();
        for c in &r.cells {
            assert_eq!(c.baseline_iou.is_some(), !c.is_baseline());
            assert_eq!(c.delta_pct.is_some(), c.baseline_iou.is_some());
            if let (Some(d), Some(dir)) = (c.delta_pct, c.direction) {
                assert_eq!(d < 0.0, dir == Direction::Drop);
            }
        }
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn multi_class_and_pooled_sections() {
        use SemanticClass::{DrivableArea as D, Vehicle as V};
        let r = assemble_report(
            vec![
                m("LAPT", "vehicle+drivable", "NS", "NS", V, 0.155),
                m("LAPT", "vehicle+drivable", "NS", "NS", D, 0.60),
                m("LAPT", "vehicle+drivable", "WP", "NS", V, 0.1913),
                m("LAPT", "vehicle+drivable", "WP", "NS", D, 0.3611),
                m("LAPT", "vehicle+drivable", POOLED_TRAIN, "NS", V, 0.1376),
                m("LAPT", "vehicle+drivable", POOLED_TRAIN, "NS", D, 0.5157),
            ],
            meta(),
        )
        .unwrap();
        let md = r.to_markdown();
        assert!(md.contains("## Vehicle / Drivable Area"), "{md}");
        assert!(md.contains("| LAPT | 15.5 / 60 | 19.13 (23.42% ↑) / 36.11 (39.82% ↓) |"), "{md}");
        assert!(md.contains("## Trained on both datasets"), "{md}");
        assert!(md.contains("| LAPT | 13.76 (↓) / 51.57 (↓) |"), "{md}");
    }

    #[test]
    fn undefined_and_duplicates() {
        let mut undefined = m("A", "vehicle", "X", "X", SemanticClass::Vehicle, 0.0);
        undefined.iou = None;
        let r = assemble_report(vec![undefined], meta()).unwrap();
        assert!(r.cells.is_empty());
        assert_eq!(r.warnings.len(), 1);
        let dup = m("A", "vehicle", "X", "X", SemanticClass::Vehicle, 0.1);
        assert!(assemble_report(vec![dup.clone(), dup], meta()).is_err());
        let orphan = assemble_report(vec![m("A", "vehicle", "X", "Y", SemanticClass::Vehicle, 0.1)], meta()).unwrap();
        assert!(orphan.cells[0].delta_pct.is_none());
        assert_eq!(orphan.warnings.len(), 1);
    }

    #[test]
    fn empty_report_is_header_only() {
        let r = EvalReport::empty(meta());
        assert_eq!(r.to_csv().lines().count(), 1);
        assert_eq!(r.to_bars_csv().lines().count(), 1);
        assert_eq!(r.to_markdown(), "# Cross-dataset IoU [%]\n");
        assert_eq!(EvalReport::from_json(&r.to_json()).unwrap(), r);
    }

    #[test]
    fn json_round_trip_and_emit() {
        let r = vehicle_table();
        assert_eq!(EvalReport::from_json(&r.to_json()).unwrap(), r);
        let dir = tempfile::tempdir().unwrap();
        let written = r.emit(&dir.path().join("table.md")).unwrap();
        let names: Vec<_> = written.iter().map(|p| p.file_name().unwrap().to_str().unwrap().to_string()).collect();
        assert_eq!(names, ["table.md", "table.csv", "table.json", "table_bars.csv"]);
        let again = assemble_report(r.measurements(), r.metadata.clone()).unwrap();
        assert_eq!(again, r);
    }
}

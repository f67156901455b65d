use std::path::Path;
use std::process::Command;

use beval_core::metrics::{Direction, POOLED_TRAIN};
use beval_core::pipeline::{merge_reports, run_pipeline, MissingPolicy, RunConfig};
use beval_core::synth::{generate, SynthConfig, SynthProfile};
use beval_core::SemanticClass;

fn synth(dir: &Path, profile: SynthProfile, seed: u64, n: usize) {
    let mut cfg = SynthConfig::profile(profile, seed, n);
    cfg.cameras = 0;
    generate(&cfg, dir).unwrap();
}

fn two_datasets(root: &Path) {
    synth(&root.join("ns"), SynthProfile::NuscenesLike, 1, 4);
    synth(&root.join("wp"), SynthProfile::WovenplanetLike, 2, 4);
}

const CONFIG: &str = r#"
classes = ["vehicle", "human"]
output = "out/table.md"
jobs = 2

[[datasets]]
id = "ns"
manifest = "ns/manifest.json"

[[datasets]]
id = "wp"
manifest = "wp/manifest.json"

[[predictions]]
model = "Oracle"
train = "ns"
test = "ns"
source = "builtin:oracle"

[[predictions]]
model = "Oracle"
train = "ns"
test = "wp"
source = "builtin:noisy:0.2:7"

[[predictions]]
model = "Oracle"
train = "wp"
test = "wp"
source = "builtin:oracle"

[[predictions]]
model = "Oracle"
train = "wp"
test = "ns"
source = "builtin:zeros"

[[predictions]]
model = "Oracle"
train = "both"
source = "builtin:noisy:0.01:3"
"#;

fn load(root: &Path, text: &str) -> RunConfig {
    let path = root.join("run.toml");
    std::fs::write(&path, text).unwrap();
    RunConfig::load(&path).unwrap()
}

#[test]
fn run_covers_all_combinations_and_reuses_cache() {
    let dir = tempfile::tempdir().unwrap();
    two_datasets(dir.path());
    let cfg = load(dir.path(), CONFIG);
    assert_eq!(POOLED_TRAIN, "both");

    let cold = run_pipeline(&cfg).unwrap();
    assert!(dir.path().join("out/gt_cache").is_dir());
    // 4 single-dataset pairs and the pooled model on both test sets
    assert_eq!(cold.cells.len(), 6 * 2);
    assert_eq!(cold.metadata.sample_counts.get("ns"), Some(&4));
    for c in &cold.cells {
        match (c.train.as_str(), c.test.as_str()) {
            ("ns", "ns") | ("wp", "wp") => assert_eq!(c.iou, 1.0),
            ("wp", "ns") => {
                assert_eq!(c.iou, 0.0);
                assert_eq!(c.direction, Some(Direction::Drop));
                assert_eq!(c.delta_pct, Some(-100.0));
            }
            ("ns", "wp") => assert!(c.iou < 1.0 && c.delta_pct.unwrap() < 0.0),
            ("both", _) => assert!(c.is_pooled() && c.iou > 0.0 && c.iou < 1.0),
            other => panic!("unexpected pair {other:?}"),
        }
    }

    let warm = run_pipeline(&cfg).unwrap();
    assert_eq!(warm.to_json(), cold.to_json());

    // reports from split runs merge into the combined one
    let mut base = cfg.clone();
    base.predictions.retain(|p| p.test.as_deref() == Some(p.train.as_str()));
    let mut cross = cfg.clone();
    cross.predictions.retain(|p| p.test.as_deref() != Some(p.train.as_str()));
    let merged = merge_reports(&[run_pipeline(&base).unwrap(), run_pipeline(&cross).unwrap()]).unwrap();
    assert_eq!(merged.to_json(), cold.to_json());
}

#[test]
fn per_prediction_classes_and_drivable() {
    let dir = tempfile::tempdir().unwrap();
    two_datasets(dir.path());
    let text = CONFIG.replace(
        "source = \"builtin:zeros\"",
        "source = \"builtin:zeros\"\nclasses = [\"drivable\"]\ntask = \"map\"",
    );
    let report = run_pipeline(&load(dir.path(), &text)).unwrap();
    assert!(report.metadata.classes.contains(&SemanticClass::DrivableArea));
    let map: Vec<_> = report.cells.iter().filter(|c| c.task == "map").collect();
    assert_eq!(map.len(), 1);
    assert_eq!(map[0].class, SemanticClass::DrivableArea);
}

#[test]
fn missing_predictions_fail_or_skip() {
    let dir = tempfile::tempdir().unwrap();
    two_datasets(dir.path());
    let preds = dir.path().join("preds");
    std::fs::create_dir_all(&preds).unwrap();
    let text = format!(
        "output = \"out/t.md\"\nclasses = [\"vehicle\"]\n\
         [[datasets]]\nid = \"ns\"\nmanifest = \"ns/manifest.json\"\n\
         [[predictions]]\nmodel = \"M\"\ntrain = \"ns\"\ntest = \"ns\"\nsource = \"{}\"\n",
        preds.display()
    );
    let mut cfg = load(dir.path(), &text);
    let err = run_pipeline(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 2, "{err}");

    cfg.missing = MissingPolicy::Skip;
    let err = run_pipeline(&cfg).unwrap_err();
    // nothing left to evaluate once every sample is skipped
    assert_eq!(err.exit_code(), 1, "{err}");
}

#[test]
fn invalid_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    for bad in [
        "output = \"t.md\"\ndatasets = []\npredictions = []\n",
        "output = \"t.md\"\nbogus = 1\n",
        &CONFIG.replace("jobs = 2", "jobs = 0"),
        &CONFIG.replace("builtin:zeros", "builtin:nonsense"),
        &CONFIG.replace("test = \"wp\"\nsource = \"builtin:noisy", "test = \"xx\"\nsource = \"builtin:noisy"),
    ] {
        std::fs::write(&path, bad).unwrap();
        let err = RunConfig::load(&path).unwrap_err();
        assert_eq!(err.exit_code(), 1, "{bad}: {err}");
    }
}

fn beval(args: &[&str], cwd: &Path) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_beval"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(beval(&["--help"], d).0, 0);
    assert_eq!(beval(&["synth", "--bogus"], d).0, 1);
    assert_eq!(beval(&["gen-gt", "--manifest", "missing.json", "--out", "gt"], d).0, 2);
    assert_eq!(beval(&["synth", "--profile", "nuscenes-like", "--seed", "1", "--samples", "0", "--out", "s"], d).0, 1);

    let (code, err) = beval(&["synth", "--profile", "nuscenes-like", "--seed", "1", "--samples", "3", "--cameras", "0", "--out", "s"], d);
    assert_eq!(code, 0, "{err}");
    let (code, err) = beval(&["gen-gt", "--manifest", "s/manifest.json", "--out", "gt", "--classes", "vehicle"], d);
    assert_eq!(code, 0, "{err}");
    let (code, err) = beval(&["eval", "--gt", "gt", "--pred", "builtin:oracle", "--out", "r.json"], d);
    assert_eq!(code, 0, "{err}");
    assert_eq!(beval(&["eval", "--gt", "gt", "--pred", "nowhere", "--out", "r2.json"], d).0, 2);
    let (code, err) = beval(&["report", "--baselines", "r.json", "--out", "t.md"], d);
    assert_eq!(code, 0, "{err}");
    for f in ["t.md", "t.csv", "t.json"] {
        assert!(d.join(f).is_file(), "{f}");
    }
}

/// Every object in `value` carries the schema's required keys and no others.
fn conforms(value: &serde_json::Value, schema: &serde_json::Value, root: &serde_json::Value) -> Result<(), String> {
    use serde_json::Value;
    if let Some(r) = schema.get("$ref").and_then(Value::as_str) {
        let name = r.trim_start_matches("#/$defs/");
        return conforms(value, &root["$defs"][name], root);
    }
    if let Some(alts) = schema.get("oneOf").and_then(Value::as_array) {
        let ok = alts.iter().filter(|s| conforms(value, s, root).is_ok()).count();
        return if ok == 1 { Ok(()) } else { Err(format!("{ok} oneOf branches match {value}")) };
    }
    if let Some(c) = schema.get("const") {
        return if c == value { Ok(()) } else { Err(format!("{value} != {c}")) };
    }
    match value {
        Value::Object(map) => {
            let props = schema["properties"].as_object().ok_or("object without properties")?;
            for req in schema["required"].as_array().into_iter().flatten() {
                if !map.contains_key(req.as_str().unwrap()) {
                    return Err(format!("missing {req}"));
                }
            }
            for (k, v) in map {
                conforms(v, props.get(k).ok_or(format!("unexpected key {k}"))?, root)?;
            }
            Ok(())
        }
        Value::Array(items) => items.iter().try_for_each(|v| match schema.get("items") {
            Some(s) => conforms(v, s, root),
            None => Ok(()),
        }),
        _ => Ok(()),
    }
}

#[test]
fn manifests_match_schema() {
    let schema: serde_json::Value =
        serde_json::from_str(include_str!("../schema/manifest.schema.json")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for (name, profile) in [("ns", SynthProfile::NuscenesLike), ("wp", SynthProfile::WovenplanetLike)] {
        let mut cfg = SynthConfig::profile(profile, 3, 2);
        cfg.cameras = 1;
        generate(&cfg, &dir.path().join(name)).unwrap();
        let text = std::fs::read_to_string(dir.path().join(name).join("manifest.json")).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        conforms(&value, &schema, &schema).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

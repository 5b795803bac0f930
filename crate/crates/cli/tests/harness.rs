//! Harness-level contracts: the RunReport schema is pinned by a golden
//! file, artifacts are deterministic, and the binary's subcommands work
//! end to end.

use charvar_cli::config::ExperimentConfig;
use charvar_cli::verify::{self, Suite};
use std::path::Path;
use std::process::Command;

fn tiny_config(out: &Path) -> serde_json::Value {
    serde_json::json!({
        "presentation": {"kind": "surface", "genus": 2},
        "n": 2,
        "epsilon": 0.4,
        "samples": 40,
        "seed": 77,
        "threads": 1,
        "loops": {"commutator": ["a1 b1 A1 B1"]},
        "output": out
    })
}

/// Sorted set of key paths in a JSON document, with array elements
/// collapsed to their first entry and leaves replaced by type names.
fn schema_paths(value: &serde_json::Value, prefix: &str, out: &mut Vec<String>) {
    match value {
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                schema_paths(v, &format!("{prefix}/{k}"), out);
            }
        }
        serde_json::Value::Array(items) => {
            if let Some(first) = items.first() {
                schema_paths(first, &format!("{prefix}[]"), out);
            } else {
                out.push(format!("{prefix}[]"));
            }
        }
        serde_json::Value::Null => out.push(format!("{prefix}: null")),
        serde_json::Value::Bool(_) => out.push(format!("{prefix}: bool")),
        serde_json::Value::Number(_) => out.push(format!("{prefix}: number")),
        serde_json::Value::String(_) => out.push(format!("{prefix}: string")),
    }
}

#[test]
fn run_report_schema_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let cfg: ExperimentConfig =
        serde_json::from_value(tiny_config(&dir.path().join("out"))).unwrap();
    let resolved = cfg.resolve().unwrap();
    let outcome = verify::run_verify(&resolved, Suite::Twist).unwrap();
    let text = std::fs::read_to_string(&outcome.report_path).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["version"], 1, "schema version must be pinned");

    let mut paths = Vec::new();
    schema_paths(&value, "", &mut paths);
    paths.sort();
    // The output directory is machine-specific; normalize it out.
    let golden = include_str!("goldens/report-schema.txt");
    let expected: Vec<&str> = golden.lines().filter(|l| !l.is_empty()).collect();
    assert_eq!(
        paths,
        expected,
        "RunReport schema drifted; update tests/goldens/report-schema.txt deliberately"
    );
}

#[test]
fn estimates_artifacts_have_pinned_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg: ExperimentConfig = serde_json::from_value(tiny_config(&out)).unwrap();
    let resolved = cfg.resolve().unwrap();
    verify::run_verify(&resolved, Suite::Lemma).unwrap();

    let csv = std::fs::read_to_string(out.join("estimates-lemma.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(
        header,
        "suite,test,observable,estimator,re,im,std_error,count,threshold,status"
    );
    // 17 significant digits on every float field.
    let row = csv.lines().nth(1).unwrap();
    let re_field = row.split(',').nth(4).unwrap();
    assert!(
        re_field.contains('e') && re_field.split(|c| c == '.' || c == 'e').nth(1).unwrap().len() == 16,
        "float fields carry 17 significant digits, got `{re_field}`"
    );

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("estimates-lemma.json")).unwrap())
            .unwrap();
    let first = &json.as_array().unwrap()[0];
    let keys: Vec<&String> = first.as_object().unwrap().keys().collect();
    let mut expected = vec!["observable", "value", "std_error", "count", "estimator"];
    expected.sort();
    let mut got: Vec<&str> = keys.iter().map(|s| s.as_str()).collect();
    got.sort();
    assert_eq!(got, expected);
    assert_eq!(first["value"].as_array().unwrap().len(), 2);
}

#[test]
fn shipped_configs_resolve() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let cfg = ExperimentConfig::from_file(&path).unwrap();
        cfg.resolve()
            .unwrap_or_else(|e| panic!("{} does not resolve: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 4, "expected the shipped experiment matrix, found {seen}");
}

#[test]
fn binary_subcommands_run_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config_path = dir.path().join("config.json");
    std::fs::write(
        &config_path,
        serde_json::to_string_pretty(&tiny_config(&out)).unwrap(),
    )
    .unwrap();
    let bin = env!("CARGO_BIN_EXE_charvar");

    let sample = Command::new(bin)
        .args(["sample", "--config"])
        .arg(&config_path)
        .output()
        .unwrap();
    assert!(sample.status.success(), "sample failed: {sample:?}");
    assert!(out.join("batch.jsonl").exists());

    let verify = Command::new(bin)
        .args(["verify", "twist", "--config"])
        .arg(&config_path)
        .output()
        .unwrap();
    assert!(verify.status.success(), "verify failed: {verify:?}");
    let stdout = String::from_utf8_lossy(&verify.stdout);
    assert!(stdout.contains("[PASS]"));

    let plot = Command::new(bin)
        .args(["plot", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(plot.status.success(), "plot failed: {plot:?}");

    let report = Command::new(bin)
        .args(["report", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(report.status.success(), "report failed: {report:?}");
    let stdout = String::from_utf8_lossy(&report.stdout);
    assert!(stdout.contains("failures: 0"));

    // Unknown suite exits nonzero with a clear message.
    let bad = Command::new(bin)
        .args(["verify", "nonsense", "--config"])
        .arg(&config_path)
        .output()
        .unwrap();
    assert!(!bad.status.success());
}

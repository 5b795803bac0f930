//! Summarizes RunReport files from an output directory.

use std::path::Path;

pub struct ReportSummary {
    pub lines: Vec<String>,
    pub failures: usize,
    pub flags: usize,
}

/// Reads every `report-*.json` under `dir` and renders a one-line-per-
/// test summary table.
pub fn summarize(dir: &Path) -> std::io::Result<ReportSummary> {
    let mut lines = Vec::new();
    let mut failures = 0usize;
    let mut flags = 0usize;
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .flatten()
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .and_then(|s| s.to_str())
                .map(|s| s.starts_with("report-") && s.ends_with(".json"))
                .unwrap_or(false)
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        lines.push(format!("no reports found under {}", dir.display()));
        return Ok(ReportSummary {
            lines,
            failures,
            flags,
        });
    }
    for path in paths {
        let text = std::fs::read_to_string(&path)?;
        let value: serde_json::Value = match serde_json::from_str(&text) {
            Ok(v) => v,
            Err(e) => {
                lines.push(format!("{}: unreadable ({e})", path.display()));
                failures += 1;
                continue;
            }
        };
        let suite = value["suite"].as_str().unwrap_or("?");
        let rate = value["acceptance_rate"].as_f64().unwrap_or(f64::NAN);
        let timing = value["timing_secs"].as_f64().unwrap_or(f64::NAN);
        lines.push(format!(
            "suite {suite}: acceptance rate {rate:.3e}, {timing:.1}s"
        ));
        if let Some(tests) = value["tests"].as_array() {
            for t in tests {
                let status = t["status"].as_str().unwrap_or("?");
                match status {
                    "fail" => failures += 1,
                    "flag" => flags += 1,
                    _ => {}
                }
                lines.push(format!(
                    "  [{}] {} measured={:.3e} threshold={:.3e}",
                    status.to_uppercase(),
                    t["name"].as_str().unwrap_or("?"),
                    t["measured"].as_f64().unwrap_or(f64::NAN),
                    t["threshold"].as_f64().unwrap_or(f64::NAN),
                ));
            }
        }
    }
    Ok(ReportSummary {
        lines,
        failures,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summarize_reports_and_counts_failures() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("report-twist.json"),
            serde_json::json!({
                "version": 1,
                "suite": "twist",
                "acceptance_rate": 1e-3,
                "tests": [
                    {"name": "a", "status": "pass", "measured": 0.0, "threshold": 1e-15},
                    {"name": "b", "status": "fail", "measured": 2.0, "threshold": 1.0},
                    {"name": "c", "status": "flag", "measured": 12.0, "threshold": 10.0}
                ],
                "timing_secs": 0.5
            })
            .to_string(),
        )
        .unwrap();
        let summary = summarize(dir.path()).unwrap();
        assert_eq!(summary.failures, 1);
        assert_eq!(summary.flags, 1);
        assert!(summary.lines.iter().any(|l| l.contains("suite twist")));
    }

    #[test]
    fn empty_directory_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let summary = summarize(dir.path()).unwrap();
        assert_eq!(summary.failures, 0);
        assert!(summary.lines[0].contains("no reports"));
    }
}

//! Scheme × boundary table of full-time-range errors across run summaries.

use crate::formats::{read_file, Summary};
use crate::Failure;
use std::collections::BTreeMap;
use std::path::PathBuf;

const SCHEME_ORDER: [&str; 3] = ["euler", "heun", "rk4"];

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// Column labels in display order.
    pub schemes: Vec<String>,
    /// Row label (`equation/boundary`) and one cell per scheme.
    pub rows: Vec<(String, Vec<Option<f64>>)>,
}

fn rank(scheme: &str) -> (usize, String) {
    let pos = SCHEME_ORDER.iter().position(|s| *s == scheme).unwrap_or(SCHEME_ORDER.len());
    (pos, scheme.to_string())
}

/// Reads every summary; unreadable ones are skipped with a warning.
pub fn compare_runs(paths: &[PathBuf]) -> Result<Comparison, Failure> {
    if paths.is_empty() {
        return Err(Failure::Config("compare needs at least one summary".into()));
    }
    let mut cells: BTreeMap<(String, (usize, String)), Option<f64>> = BTreeMap::new();
    for path in paths {
        let summary = read_file(path).and_then(|b| Summary::from_json(&String::from_utf8_lossy(&b)));
        let summary = match summary {
            Ok(s) => s,
            Err(e) => {
                log::warn!("skipping {}: {e}", path.display());
                continue;
            }
        };
        let key = (format!("{}/{}", summary.equation, summary.boundary), rank(&summary.scheme));
        if cells.contains_key(&key) {
            log::warn!("skipping {}: duplicate {} {}", path.display(), key.0, summary.scheme);
            continue;
        }
        cells.insert(key, summary.full_range_rel_l2);
    }
    if cells.is_empty() {
        return Err(Failure::Config("no readable summaries".into()));
    }
    let mut schemes: Vec<(usize, String)> = cells.keys().map(|(_, s)| s.clone()).collect();
    schemes.sort();
    schemes.dedup();
    let mut rows: Vec<(String, Vec<Option<f64>>)> = Vec::new();
    for ((row, scheme), value) in &cells {
        if rows.last().map(|(r, _)| r != row).unwrap_or(true) {
            rows.push((row.clone(), vec![None; schemes.len()]));
        }
        let col = schemes.iter().position(|s| s == scheme).expect("scheme collected");
        rows.last_mut().expect("row pushed").1[col] = *value;
    }
    Ok(Comparison {
        schemes: schemes.into_iter().map(|(_, s)| s).collect(),
        rows,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2e}")).unwrap_or_else(|| "-".into())
}

impl Comparison {
    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let label_w = self.rows.iter().map(|(r, _)| r.len()).max().unwrap_or(0).max("problem".len());
        let mut out = format!("{:<label_w$}", "problem");
        for s in &self.schemes {
            out.push_str(&format!("  {s:>10}"));
        }
        out.push('\n');
        for (label, values) in &self.rows {
            out.push_str(&format!("{label:<label_w$}"));
            for v in values {
                out.push_str(&format!("  {:>10}", cell(*v)));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# teng-bc comparison v1\nproblem,{}\n", self.schemes.join(","));
        for (label, values) in &self.rows {
            let cells: Vec<String> = values.iter().map(|v| v.map(|x| format!("{x:e}")).unwrap_or_default()).collect();
            out.push_str(&format!("{label},{}\n", cells.join(",")));
        }
        out
    }

    pub fn get(&self, row: &str, scheme: &str) -> Option<f64> {
        let col = self.schemes.iter().position(|s| s == scheme)?;
        self.rows.iter().find(|(r, _)| r == row)?.1[col]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::{InitialFitSummary, Timing, SUMMARY_FORMAT};
    use std::fs;

    fn summary(boundary: &str, scheme: &str, err: f64) -> Summary {
        Summary {
            format: SUMMARY_FORMAT.into(),
            version: "test".into(),
            equation: "heat".into(),
            boundary: boundary.into(),
            scheme: scheme.into(),
            steps: 1,
            t_final: 0.05,
            full_range_rel_l2: Some(err),
            final_rel_l2: Some(err),
            max_rel_l2: Some(err),
            final_ls_residual: 0.0,
            degenerate_solves: 0,
            initial_fit: InitialFitSummary {
                residual: 0.0,
                iterations: 0,
                converged: true,
            },
            timing: Timing {
                initial_fit_s: 0.0,
                evolve_s: 0.0,
                mean_step_ms: 0.0,
                mean_stage_ms: vec![],
            },
            config: String::new(),
        }
    }

    fn write(dir: &std::path::Path, name: &str, s: &Summary) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, s.to_json()).unwrap();
        p
    }

    #[test]
    fn single_summary_gives_one_cell() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "a.json", &summary("dirichlet", "heun", 3.08e-6));
        let c = compare_runs(&[p]).unwrap();
        assert_eq!(c.schemes, vec!["heun"]);
        assert_eq!(c.rows, vec![("heat/dirichlet".to_string(), vec![Some(3.08e-6)])]);
        assert!(c.to_text().contains("3.08e-6"));
    }

    #[test]
    fn matrix_layout_and_skips() {
        let dir = tempfile::tempdir().unwrap();
        let paths = vec![
            write(dir.path(), "1.json", &summary("robin", "rk4", 1e-6)),
            write(dir.path(), "2.json", &summary("dirichlet", "heun", 3e-6)),
            write(dir.path(), "3.json", &summary("dirichlet", "euler", 2e-4)),
            dir.path().join("missing.json"),
            write(dir.path(), "4.json", &summary("dirichlet", "euler", 9.0)),
        ];
        fs::write(dir.path().join("bad.json"), "{").unwrap();
        let mut all = paths.clone();
        all.push(dir.path().join("bad.json"));
        let c = compare_runs(&all).unwrap();
        assert_eq!(c.schemes, vec!["euler", "heun", "rk4"]);
        assert_eq!(c.get("heat/dirichlet", "euler"), Some(2e-4));
        assert_eq!(c.get("heat/robin", "heun"), None);
        assert_eq!(c.rows.len(), 2);
        assert!(c.to_csv().starts_with("# teng-bc comparison v1\nproblem,euler,heun,rk4\n"));
    }

    #[test]
    fn empty_input_is_usage_error() {
        assert!(matches!(compare_runs(&[]), Err(Failure::Config(_))));
        let dir = tempfile::tempdir().unwrap();
        assert!(compare_runs(&[dir.path().join("nope.json")]).is_err());
    }
}

//! Report bundles and regression baselines.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::Path;

use submet_core::report::{OpReport, TraceCaseReport};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportBundle {
    pub experiment: String,
    pub seed: u64,
    pub reports: Vec<OpReport>,
    pub traces: Vec<TraceCaseReport>,
    pub pass: bool,
}

impl ReportBundle {
    pub fn new(
        experiment: &str,
        seed: u64,
        mut reports: Vec<OpReport>,
        mut traces: Vec<TraceCaseReport>,
    ) -> Self {
        reports.sort_by(|a, b| (&a.case, &a.operation).cmp(&(&b.case, &b.operation)));
        traces.sort_by(|a, b| a.case.cmp(&b.case));
        let pass = reports.iter().all(|r| r.pass) && traces.iter().all(|t| t.pass);
        ReportBundle { experiment: experiment.to_string(), seed, reports, traces, pass }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("bundle serializes");
        s.push('\n');
        s
    }
}

/// Extra artifacts (CSV spectra, plot-data files) produced by an experiment.
pub type Artifacts = Vec<(String, String)>;

pub fn write_bundle(outdir: &Path, bundle: &ReportBundle, artifacts: &Artifacts) -> std::io::Result<()> {
    std::fs::create_dir_all(outdir)?;
    std::fs::write(outdir.join("bundle.json"), bundle.to_json())?;
    for (name, contents) in artifacts {
        std::fs::write(outdir.join(name), contents)?;
    }
    Ok(())
}

/// Compare two bundle JSON values field by field. Numeric leaves may drift
/// within `num_tol` (absolute or relative); everything else must match
/// exactly. Returns the paths of drifting fields.
pub fn diff_bundles(a: &Value, b: &Value, num_tol: f64) -> Vec<String> {
    let mut out = Vec::new();
    diff_rec(a, b, "", num_tol, &mut out);
    out
}

fn diff_rec(a: &Value, b: &Value, path: &str, tol: f64, out: &mut Vec<String>) {
    match (a, b) {
        (Value::Object(ma), Value::Object(mb)) => {
            for k in ma.keys().chain(mb.keys().filter(|k| !ma.contains_key(*k))) {
                let sub = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match (ma.get(k), mb.get(k)) {
                    (Some(va), Some(vb)) => diff_rec(va, vb, &sub, tol, out),
                    _ => out.push(sub),
                }
            }
        }
        (Value::Array(va), Value::Array(vb)) => {
            if va.len() != vb.len() {
                out.push(format!("{path}.length"));
                return;
            }
            for (i, (x, y)) in va.iter().zip(vb).enumerate() {
                diff_rec(x, y, &format!("{path}[{i}]"), tol, out);
            }
        }
        (Value::Number(na), Value::Number(nb)) => {
            if let (Some(x), Some(y)) = (na.as_f64(), nb.as_f64()) {
                let scale = 1.0_f64.max(x.abs()).max(y.abs());
                if (x - y).abs() > tol * scale {
                    out.push(path.to_string());
                }
            } else if na != nb {
                out.push(path.to_string());
            }
        }
        _ => {
            if a != b {
                out.push(path.to_string());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_bundle() -> ReportBundle {
        ReportBundle::new(
            "euler-identity",
            7,
            vec![OpReport::new("euler", "series", 1, 0.0, 1e-8)],
            vec![TraceCaseReport {
                case: "euler phi=0.785398".into(),
                phi: 0.785398,
                trace_direct: 1.0,
                trace_series_raw: 0.999,
                trace_series_accel: 1.0,
                tail_bound: 1e-9,
                pass: true,
            }],
        )
    }

    #[test]
    fn identical_bundles_have_empty_diff() {
        let b = sample_bundle();
        let v: Value = serde_json::from_str(&b.to_json()).unwrap();
        assert!(diff_bundles(&v, &v, 1e-9).is_empty());
    }

    #[test]
    fn perturbed_numeric_field_is_named() {
        let b = sample_bundle();
        let v: Value = serde_json::from_str(&b.to_json()).unwrap();
        let mut w = v.clone();
        let accel = &mut w["traces"][0]["trace_series_accel"];
        *accel = serde_json::json!(accel.as_f64().unwrap() + 1e-3);
        let diff = diff_bundles(&v, &w, 1e-9);
        assert_eq!(diff, vec!["traces[0].trace_series_accel".to_string()]);
    }

    #[test]
    fn pass_summary_is_conjunction() {
        let mut failing = OpReport::new("x", "y", 1, 1.0, 1e-8);
        assert!(!failing.pass);
        failing.spread = 0.0;
        let b = ReportBundle::new("t", 0, vec![failing], vec![]);
        // pass flag recomputed from the stored field, which still says fail
        assert!(!b.pass);
    }
}

//! JSON eval reports with per-category, per-check pass rates.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::checks::CheckResult;
use super::{EvalError, EvalOutcome};

/// Pass count over applicable (non n-a) results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckTally {
    pub passed: usize,
    pub total: usize,
    /// `passed / total`, or null when nothing was applicable.
    pub rate: Option<f64>,
    /// The same rate as an exact fraction, e.g. `"2/3"`.
    pub fraction: String,
    pub not_applicable: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub case_count: usize,
    pub error_count: usize,
    pub categories: BTreeMap<String, BTreeMap<String, CheckTally>>,
    pub outcomes: Vec<EvalOutcome>,
}

pub fn build_report(outcomes: &[EvalOutcome]) -> EvalReport {
    let mut counts: BTreeMap<String, BTreeMap<String, (usize, usize, usize)>> = BTreeMap::new();
    for o in outcomes {
        let per_check = counts.entry(o.category.as_str().to_string()).or_default();
        for (name, result) in &o.checks {
            let (passed, total, na) = per_check.entry(name.clone()).or_default();
            match result {
                CheckResult::Pass => {
                    *passed += 1;
                    *total += 1;
                }
                CheckResult::Fail => *total += 1,
                CheckResult::NotApplicable => *na += 1,
            }
        }
    }
    let categories = counts
        .into_iter()
        .map(|(cat, checks)| {
            let checks = checks
                .into_iter()
                .map(|(name, (passed, total, not_applicable))| {
                    let tally = CheckTally {
                        passed,
                        total,
                        rate: (total > 0).then(|| passed as f64 / total as f64),
                        fraction: format!("{passed}/{total}"),
                        not_applicable,
                    };
                    (name, tally)
                })
                .collect();
            (cat, checks)
        })
        .collect();
    EvalReport {
        case_count: outcomes.len(),
        error_count: outcomes.iter().filter(|o| o.error.is_some()).count(),
        categories,
        outcomes: outcomes.to_vec(),
    }
}

pub fn write_eval_report(outcomes: &[EvalOutcome], path: &Path) -> Result<(), EvalError> {
    let io = |source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    let mut body =
        serde_json::to_string_pretty(&build_report(outcomes)).expect("report serializes");
    body.push('\n');
    std::fs::write(path, body).map_err(io)
}

//! Category-based evaluation of a chat endpoint.
//!
//! Each case is a legal question with an optional context article and a
//! gold hint. Responses get deterministic, report-only checks chosen by
//! category.

pub mod checks;
pub mod report;
pub mod run;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use checks::{apply_category_checks, checks_for, CheckResult};
pub use report::{build_report, write_eval_report, CheckTally, EvalReport};
pub use run::run_eval;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Json { path: PathBuf, message: String },
    #[error("case {id:?}: {reason}")]
    InvalidCase { id: String, reason: String },
    #[error("out of domain: {0}")]
    OutOfDomain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    YesNo,
    Narrative,
    ListBased,
    Conditional,
    Calculation,
    Comparative,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::YesNo,
        Category::Narrative,
        Category::ListBased,
        Category::Conditional,
        Category::Calculation,
        Category::Comparative,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::YesNo => "yes_no",
            Category::Narrative => "narrative",
            Category::ListBased => "list_based",
            Category::Conditional => "conditional",
            Category::Calculation => "calculation",
            Category::Comparative => "comparative",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Yes,
    No,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gold {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarity: Option<Polarity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub number: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub keywords: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalCase {
    pub id: String,
    pub category: Category,
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_article: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<Gold>,
}

impl EvalCase {
    pub fn validate(&self) -> Result<(), EvalError> {
        let invalid = |reason: &str| EvalError::InvalidCase {
            id: self.id.clone(),
            reason: reason.into(),
        };
        if self.id.trim().is_empty() {
            return Err(invalid("id is empty"));
        }
        if self.question.trim().is_empty() {
            return Err(invalid("question is empty"));
        }
        let gold = self.gold.as_ref();
        match self.category {
            Category::Calculation if gold.and_then(|g| g.number).is_none() => {
                Err(invalid("calculation cases need gold.number"))
            }
            Category::YesNo if gold.and_then(|g| g.polarity).is_none() => {
                Err(invalid("yes_no cases need gold.polarity"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutcome {
    pub case_id: String,
    pub category: Category,
    pub response: String,
    pub checks: BTreeMap<String, CheckResult>,
    pub latency_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Reads a JSON array of cases and validates each one. Ids must be unique.
pub fn load_cases(path: &Path) -> Result<Vec<EvalCase>, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let cases: Vec<EvalCase> = serde_json::from_str(&text).map_err(|e| EvalError::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut seen = HashSet::new();
    for case in &cases {
        case.validate()?;
        if !seen.insert(case.id.as_str()) {
            return Err(EvalError::InvalidCase {
                id: case.id.clone(),
                reason: "duplicate id".into(),
            });
        }
    }
    Ok(cases)
}

/// End-of-service entitlement for an employee who resigns after fewer than
/// five years: one third of the annual salary per year worked.
pub fn resignation_entitlement(monthly_salary: f64, years_worked: f64) -> Result<f64, EvalError> {
    if !monthly_salary.is_finite() || monthly_salary < 0.0 {
        return Err(EvalError::OutOfDomain(format!(
            "monthly salary must be non-negative, got {monthly_salary}"
        )));
    }
    if !years_worked.is_finite() || years_worked < 0.0 {
        return Err(EvalError::OutOfDomain(format!(
            "years worked must be non-negative, got {years_worked}"
        )));
    }
    if years_worked >= 5.0 {
        return Err(EvalError::OutOfDomain(format!(
            "the rule covers fewer than five years of service, got {years_worked}"
        )));
    }
    Ok(monthly_salary * 12.0 / 3.0 * years_worked)
}

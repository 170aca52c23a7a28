//! Verdict and report types shared by the verifiers and the CLI.

use crate::expr::{ZeroStatus, ZeroVerdict};
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    SymbolicZero,
    NumericZero,
    Pass,
    Fail,
    Skip,
}

impl CheckStatus {
    pub fn passed(self) -> bool {
        !matches!(self, CheckStatus::Fail)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub status: CheckStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
}

impl CheckReport {
    pub fn pass(name: impl Into<String>) -> CheckReport {
        CheckReport {
            name: name.into(),
            status: CheckStatus::Pass,
            witness: None,
        }
    }

    pub fn fail(name: impl Into<String>, witness: Value) -> CheckReport {
        CheckReport {
            name: name.into(),
            status: CheckStatus::Fail,
            witness: Some(witness),
        }
    }

    pub fn from_zero_verdict(name: impl Into<String>, v: &ZeroVerdict) -> CheckReport {
        let status = match v.status {
            ZeroStatus::SymbolicZero => CheckStatus::SymbolicZero,
            ZeroStatus::NumericZero => CheckStatus::NumericZero,
            ZeroStatus::Nonzero => CheckStatus::Fail,
        };
        let witness = v.witness.as_ref().map(|w| {
            serde_json::json!({
                "assignment": w.assignment,
                "residual": w.residual,
            })
        });
        CheckReport {
            name: name.into(),
            status,
            witness,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Overall {
    Pass,
    PassNumeric,
    Fail,
    Skip,
}

/// Per-row verification outcome.
#[derive(Debug, Clone, Serialize)]
pub struct RowVerdict {
    pub id: String,
    pub chart: String,
    pub checks: Vec<CheckReport>,
    pub overall: Overall,
    pub wall_ms: u64,
}

impl RowVerdict {
    /// Aggregates: FAIL dominates; numeric-only passes demote to
    /// PASS-numeric; a skip marker wins only when nothing failed.
    pub fn aggregate(id: &str, chart: &str, checks: Vec<CheckReport>, skip: bool) -> RowVerdict {
        let mut overall = Overall::Pass;
        for c in &checks {
            match c.status {
                CheckStatus::Fail => {
                    overall = Overall::Fail;
                    break;
                }
                CheckStatus::NumericZero => {
                    if overall == Overall::Pass {
                        overall = Overall::PassNumeric;
                    }
                }
                _ => {}
            }
        }
        if skip && overall != Overall::Fail {
            overall = Overall::Skip;
        }
        RowVerdict {
            id: id.to_string(),
            chart: chart.to_string(),
            checks,
            overall,
            wall_ms: 0,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Summary {
    pub pass: usize,
    pub pass_numeric: usize,
    pub fail: usize,
    pub skip: usize,
}

impl Summary {
    pub fn tally(rows: &[RowVerdict]) -> Summary {
        let mut s = Summary::default();
        for r in rows {
            match r.overall {
                Overall::Pass => s.pass += 1,
                Overall::PassNumeric => s.pass_numeric += 1,
                Overall::Fail => s.fail += 1,
                Overall::Skip => s.skip += 1,
            }
        }
        s
    }
}

/// Top-level JSON report.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub version: String,
    pub catalog_hash: String,
    pub summary: Summary,
    pub rows: Vec<RowVerdict>,
}

impl Report {
    pub fn new(catalog_hash: String, mut rows: Vec<RowVerdict>) -> Report {
        rows.sort_by(|a, b| crate::report::row_id_key(&a.id).cmp(&row_id_key(&b.id)));
        Report {
            version: env!("CARGO_PKG_VERSION").to_string(),
            catalog_hash,
            summary: Summary::tally(&rows),
            rows,
        }
    }
}

/// Sort key for row ids: dimension, index, case suffix.
pub fn row_id_key(id: &str) -> (u32, u32, String) {
    let mut parts = id.splitn(2, '.');
    let dim = parts.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let rest = parts.next().unwrap_or("");
    let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
    let idx = digits.parse().unwrap_or(0);
    let suffix = rest[digits.len()..].to_string();
    (dim, idx, suffix)
}

/// FNV-1a hash of the catalog text, printed as 16 hex digits; identifies the
/// audited table in reports.
pub fn catalog_hash(text: &str) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in text.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

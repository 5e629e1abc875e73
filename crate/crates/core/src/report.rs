//! Verification records and suite reports.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::divergences::ext_f64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationRecord {
    pub check_id: String,
    #[serde(with = "ext_f64")]
    pub lhs: f64,
    #[serde(with = "ext_f64")]
    pub rhs: f64,
    /// lhs − rhs; the check passes when slack ≥ −tolerance.
    #[serde(with = "ext_f64")]
    pub slack: f64,
    pub pass: bool,
    pub tolerance: f64,
    pub seed: u64,
    #[serde(default)]
    pub skipped: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(default)]
    pub params: Map<String, Value>,
    #[serde(default)]
    pub witnesses: Map<String, Value>,
}

impl VerificationRecord {
    pub fn new(check_id: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64, seed: u64) -> Self {
        let slack = if lhs == rhs { 0.0 } else { lhs - rhs };
        VerificationRecord {
            check_id: check_id.into(),
            lhs,
            rhs,
            slack,
            pass: !slack.is_nan() && slack >= -tolerance,
            tolerance,
            seed,
            skipped: false,
            note: None,
            params: Map::new(),
            witnesses: Map::new(),
        }
    }

    /// A check whose hypotheses could not be certified; neither pass nor failure.
    pub fn skipped(check_id: impl Into<String>, seed: u64, reason: impl Into<String>) -> Self {
        VerificationRecord {
            check_id: check_id.into(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            slack: f64::NAN,
            pass: false,
            tolerance: 0.0,
            seed,
            skipped: true,
            note: Some(reason.into()),
            params: Map::new(),
            witnesses: Map::new(),
        }
    }

    /// A check that could not be evaluated; counts as a failure.
    pub fn errored(check_id: impl Into<String>, seed: u64, reason: impl Into<String>) -> Self {
        VerificationRecord { skipped: false, ..Self::skipped(check_id, seed, reason) }
    }

    pub fn param(mut self, key: &str, value: impl Serialize) -> Self {
        self.params.insert(key.into(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }

    pub fn witness(mut self, key: &str, value: impl Serialize) -> Self {
        self.witnesses.insert(key.into(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn failed(&self) -> bool {
        !self.skipped && !self.pass
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub suite: String,
    pub trials: usize,
    pub passes: usize,
    pub failures: usize,
    pub skipped: usize,
    #[serde(with = "crate::divergences::opt_ext_f64")]
    pub min_slack: Option<f64>,
    pub config_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub summary: Summary,
    pub records: Vec<VerificationRecord>,
}

impl Report {
    pub fn new(suite: impl Into<String>, records: Vec<VerificationRecord>, config_hash: impl Into<String>) -> Self {
        let passes = records.iter().filter(|r| r.pass).count();
        let skipped = records.iter().filter(|r| r.skipped).count();
        let min_slack = records
            .iter()
            .filter(|r| !r.skipped && !r.slack.is_nan())
            .map(|r| r.slack)
            .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.min(s))));
        Report {
            summary: Summary {
                suite: suite.into(),
                trials: records.len(),
                passes,
                failures: records.len() - passes - skipped,
                skipped,
                min_slack,
                config_hash: config_hash.into(),
            },
            records,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.summary.failures == 0
    }

    /// Concatenates reports of several suites under a combined name.
    pub fn merge(suite: impl Into<String>, reports: Vec<Report>, config_hash: impl Into<String>) -> Self {
        let records = reports.into_iter().flat_map(|r| r.records).collect();
        Report::new(suite, records, config_hash)
    }
}

use ihall_core::verifier::{tally, Entry, Status};
use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use crate::config::{LambdaEntry, RunConfig};
use crate::suites::SuiteResult;

fn ordered_params<S: Serializer>(params: &[(String, i64)], s: S) -> Result<S::Ok, S::Error> {
    let mut m = s.serialize_map(Some(params.len()))?;
    for (k, v) in params {
        m.serialize_entry(k, v)?;
    }
    m.end()
}

#[derive(Debug, Serialize)]
pub struct Record {
    pub suite: String,
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<String>,
    #[serde(serialize_with = "ordered_params")]
    pub params: Vec<(String, i64)>,
    pub transport: &'static str,
    pub status: &'static str,
    /// residual terms, one per line, for failing relations
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl Record {
    pub fn new(suite: &str, e: &Entry) -> Self {
        let (residual, reason) = match &e.status {
            Status::Fails(x) => (Some(x.dump().lines().map(String::from).collect()), None),
            Status::Skipped(r) | Status::Mismatch(r) | Status::Error(r) => (None, Some(r.clone())),
            Status::Consumed(false) => (None, Some("consumed by the bootstrap but nonzero".into())),
            _ => (None, None),
        };
        Record {
            suite: suite.to_string(),
            id: e.id.clone(),
            mu: e.mu.map(|v| v.to_string()),
            nu: e.nu.map(|v| v.to_string()),
            params: e.params.clone(),
            transport: e.transport.name(),
            status: e.status.name(),
            residual,
            reason,
        }
    }
}

#[derive(Debug, Default, Serialize, PartialEq, Eq)]
pub struct Summary {
    pub total: usize,
    pub holds: usize,
    pub fails: usize,
    pub skipped: usize,
    pub consumed: usize,
    pub errors: usize,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub weights: Vec<u32>,
    pub lambda: Vec<String>,
    pub q: u32,
    pub suite: String,
    pub max_index: i64,
    pub seed: u64,
    pub summary: Summary,
    pub records: Vec<Record>,
}

impl Report {
    pub fn build(cfg: &RunConfig, lambda: &[ihall_core::groundfield::Lambda], results: &[SuiteResult]) -> Self {
        let mut summary = Summary::default();
        let mut records = Vec::new();
        for r in results {
            let t = tally(&r.entries);
            summary.total += r.entries.len();
            summary.holds += t.holds;
            summary.fails += t.fails;
            summary.skipped += t.skipped;
            summary.consumed += t.consumed;
            summary.errors += t.errors;
            records.extend(r.entries.iter().map(|e| Record::new(&r.suite, e)));
        }
        Report {
            weights: cfg.weights.clone(),
            lambda: lambda.iter().map(LambdaEntry::render).collect(),
            q: cfg.q,
            suite: cfg.suite.clone(),
            max_index: cfg.caps.max_index,
            seed: cfg.seed,
            summary,
            records,
        }
    }

    /// True when no record counts against the run. Skips do not.
    pub fn passed(&self) -> bool {
        self.summary.fails == 0 && self.summary.errors == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

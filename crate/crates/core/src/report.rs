//! Machine-readable run reports: a self-contained record of what was
//! measured, how, and against which budgets. Serialized as JSON with
//! stable field order so fixed-seed reruns are byte-identical.

use crate::error::Result;
use crate::suites::SuiteReport;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub tool_version: String,
    pub config: BTreeMap<String, String>,
    pub suites: Vec<SuiteReport>,
    /// Wall-clock per suite; omitted under `--canonical` so reports
    /// regenerate byte-identically.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<BTreeMap<String, u64>>,
    pub pass: bool,
}

impl RunReport {
    pub fn new(config: BTreeMap<String, String>, suites: Vec<SuiteReport>) -> Self {
        let pass = suites.iter().all(|s| s.pass);
        RunReport {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            suites,
            timings_ms: None,
            pass,
        }
    }

    pub fn with_timings(mut self, timings: BTreeMap<String, u64>) -> Self {
        self.timings_ms = Some(timings);
        self
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| crate::error::Error::Parse(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suites::suite_lemmas;

    #[test]
    fn canonical_report_is_reproducible() {
        let cfg = crate::planner::plan(&crate::planner::PlanRequest {
            profile: crate::planner::Profile::PolylogAffine,
            n: 10,
            k: 5,
            eps: 0.25,
            seed: 3,
        })
        .unwrap();
        let mk = || {
            let suites = vec![suite_lemmas(cfg.seed).unwrap()];
            RunReport::new(cfg.to_key_values(), suites)
                .to_json()
                .unwrap()
        };
        assert_eq!(mk(), mk());
    }
}

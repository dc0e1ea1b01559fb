//! Workload files: which objects exist, how long methods run, how users and
//! sensors behave. JSON, durations in integer milliseconds.
//!
//! ```json
//! {
//!   "duration_ms": 60000,
//!   "seed": 42,
//!   "objects": [{ "class": "Aircraft", "key": "AIR001", "initial": { "Speed": 900 } }],
//!   "exec_times": { "Aircraft.UpdateSpeed": 40, "Aircraft.GetSpeed": 5 },
//!   "user_templates": [{ "method": "Aircraft.GetSpeed", "rate_per_sec": 2.0, "deadline_ms": 300 }],
//!   "sensor_feeds": { "Aircraft.Speed": { "kind": "trace", "values": [900, 920, 925] } },
//!   "derivations": { "Aircraft.ComputePath": "Direction * Location" },
//!   "arrivals": [{ "at_ms": 1500, "method": "Aircraft.GetSpeed", "object": "AIR001" }]
//! }
//! ```
//!
//! Methods are named `Class.Method` and attributes `Class.Attr`. A template
//! without `object` picks a uniformly random object of the class on every
//! arrival; `set` gives the values its classical writes store. `arrivals`
//! lists scripted one-off user requests. Sensors without a feed keep
//! reporting their initial value.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::RtScalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorkloadError {
    #[error("workload is not valid JSON: {0}")]
    Parse(String),
    #[error("{0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    pub duration_ms: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub objects: Vec<ObjectSpec>,
    #[serde(default)]
    pub exec_times: BTreeMap<String, u64>,
    #[serde(default)]
    pub user_templates: Vec<UserTemplate>,
    #[serde(default)]
    pub sensor_feeds: BTreeMap<String, FeedSpec>,
    #[serde(default)]
    pub derivations: BTreeMap<String, String>,
    #[serde(default)]
    pub arrivals: Vec<ScriptedArrival>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub class: String,
    pub key: RtScalar,
    #[serde(default)]
    pub initial: BTreeMap<String, RtScalar>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserTemplate {
    pub method: String,
    pub rate_per_sec: f64,
    /// Relative deadline; the method's declared deadline when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deadline_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<RtScalar>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub set: BTreeMap<String, RtScalar>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeedSpec {
    Constant { value: RtScalar },
    /// Starts at `start`, then moves by a uniform step in
    /// `[-max_step, max_step]` per reading.
    RandomWalk { start: f64, max_step: f64 },
    /// Replays the values in order; the last one repeats.
    Trace { values: Vec<RtScalar> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedArrival {
    pub at_ms: u64,
    pub method: String,
    pub object: RtScalar,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deadline_ms: Option<u64>,
}

impl WorkloadSpec {
    pub fn from_json(text: &str) -> Result<WorkloadSpec, WorkloadError> {
        serde_json::from_str(text).map_err(|e| WorkloadError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("workload serializes")
    }

    /// Multiplies every user arrival rate by `factor`.
    pub fn scale_rates(&mut self, factor: f64) {
        for t in &mut self.user_templates {
            t.rate_per_sec *= factor;
        }
    }
}

/// Text used to name an object in logs and reports.
pub fn key_text(key: &RtScalar) -> String {
    match key {
        RtScalar::Str(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Splits `Class.Member`.
pub fn split_qualified(name: &str) -> Option<(&str, &str)> {
    let (c, m) = name.split_once('.')?;
    (!c.is_empty() && !m.is_empty() && !m.contains('.')).then_some((c, m))
}

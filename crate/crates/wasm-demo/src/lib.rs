//! Browser bindings for the kernel: DDL generation, a simulation summarised
//! per simulated second, and a replay of sensor readings through the QoD
//! rule. Every export takes and returns plain strings (JSON where
//! structured) so the page needs no generated type bindings.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use rtdb::dsl::parse_with_map;
use rtdb::engine::{self, LogKind, WorkloadSpec};
use rtdb::schema::{has_errors, validate};
use rtdb::{ddl, DurationMs, RtAttrState, RtScalar, Schema, TimePoint, UpdateOutcome};

fn load(src: &str) -> Result<Schema, String> {
    let (schema, map) = parse_with_map(src).map_err(|e| format!("{}: error: expected {}, found {}", e.pos, e.expected, e.found))?;
    let diags = validate(&schema);
    if has_errors(&diags) {
        let lines: Vec<String> = diags
            .iter()
            .map(|d| format!("{}: {d}", map.locate(d.site).unwrap_or_default()))
            .collect();
        return Err(lines.join("\n"));
    }
    Ok(schema)
}

pub fn ddl_text(schema_src: &str) -> Result<String, String> {
    let schema = load(schema_src)?;
    ddl::compile(&schema).map(|s| s.render()).map_err(|e| e.to_string())
}

/// Activity within one simulated second.
#[derive(Debug, Default, Clone, PartialEq, Serialize)]
pub struct Bucket {
    pub second: u64,
    pub released: u64,
    pub committed: u64,
    pub aborted: u64,
    pub rejected: u64,
    pub late: u64,
    pub reads: u64,
    pub fresh_reads: u64,
    pub applied: u64,
    pub discarded: u64,
}

#[derive(Serialize)]
struct Simulation {
    report: engine::SimReport,
    seconds: Vec<Bucket>,
}

pub fn simulation_json(schema_src: &str, workload_json: &str, rate_scale: f64, mde_scale: f64) -> Result<String, String> {
    let mut schema = load(schema_src)?;
    if !(mde_scale >= 0.0 && mde_scale.is_finite()) {
        return Err("MDE scale must be a finite non-negative number".into());
    }
    schema.scale_mde(mde_scale);
    let mut w = WorkloadSpec::from_json(workload_json).map_err(|e| e.to_string())?;
    w.scale_rates(rate_scale);
    let (report, log) = engine::run(&schema, &w).map_err(|e| e.to_string())?;
    let mut seconds: Vec<Bucket> = (0..=w.duration_ms / 1000)
        .map(|second| Bucket { second, ..Bucket::default() })
        .collect();
    for r in &log.records {
        let b = &mut seconds[(r.time.millis() / 1000) as usize];
        match r.kind {
            LogKind::Release => b.released += 1,
            LogKind::Commit => b.committed += 1,
            LogKind::Abort => b.aborted += 1,
            LogKind::Reject => b.rejected += 1,
            LogKind::Obsolete | LogKind::Missed => b.late += 1,
            LogKind::Read => {
                b.reads += 1;
                let now = r.time.millis();
                let vd = r.field("vd").and_then(|v| v.parse::<u64>().ok()).unwrap_or(0);
                if let Some(ts) = r.field("ts").and_then(|v| v.parse::<u64>().ok()) {
                    b.fresh_reads += u64::from(ts <= now && now < ts + vd);
                }
            }
            LogKind::Update if r.field("outcome") == Some("applied") => b.applied += 1,
            LogKind::Update => b.discarded += 1,
            _ => {}
        }
    }
    serde_json::to_string(&Simulation { report, seconds }).map_err(|e| e.to_string())
}

/// One reading offered to a sensor attribute.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reading {
    pub time_ms: u64,
    pub candidate: f64,
    pub data_error: f64,
    pub outcome: UpdateOutcome,
    pub value: f64,
    pub timestamp_ms: u64,
}

/// Offers `values` one per `period_ms`, starting at 0, to a sensor that
/// initially holds the first value stamped at time 0.
pub fn qod_readings(values: &[f64], vd_ms: u64, mde: f64, period_ms: u64) -> Result<Vec<Reading>, String> {
    let Some(first) = values.first() else {
        return Ok(Vec::new());
    };
    if vd_ms == 0 || period_ms == 0 {
        return Err("validity duration and period must be positive".into());
    }
    if !(mde >= 0.0 && mde.is_finite()) {
        return Err("MDE must be a finite non-negative number".into());
    }
    let mut st = RtAttrState::sensor("S", RtScalar::Real(*first), TimePoint::EPOCH, DurationMs::from_millis(vd_ms), mde);
    let mut out = Vec::with_capacity(values.len());
    for (i, v) in values.iter().enumerate().skip(1) {
        let now = TimePoint::from_millis(i as u64 * period_ms);
        let cand = RtScalar::Real(*v);
        let data_error = st.data_error(&cand).map_err(|e| e.to_string())?;
        let outcome = st.apply_update(cand, now).map_err(|e| e.to_string())?;
        out.push(Reading {
            time_ms: now.millis(),
            candidate: *v,
            data_error,
            outcome,
            value: st.cv.as_f64().unwrap_or(f64::NAN),
            timestamp_ms: st.ts.millis(),
        });
    }
    Ok(out)
}

fn parse_values(text: &str) -> Result<Vec<f64>, String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("`{s}` is not a number")))
        .collect()
}

#[wasm_bindgen]
pub fn demo_schema() -> String {
    rtdb::AIRCRAFT_SCHEMA.to_owned()
}

#[wasm_bindgen]
pub fn demo_ddl_schema() -> String {
    rtdb::AIRCRAFT_DDL_SCHEMA.to_owned()
}

#[wasm_bindgen]
pub fn demo_workload() -> String {
    rtdb::DEMO_WORKLOAD.to_owned()
}

#[wasm_bindgen]
pub fn compile_ddl(schema_src: &str) -> Result<String, JsError> {
    ddl_text(schema_src).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulate(schema_src: &str, workload_json: &str, rate_scale: f64, mde_scale: f64) -> Result<String, JsError> {
    simulation_json(schema_src, workload_json, rate_scale, mde_scale).map_err(|e| JsError::new(&e))
}

/// `values` is a comma or whitespace separated list of readings.
#[wasm_bindgen]
pub fn qod_trace(values: &str, vd_ms: u64, mde: f64, period_ms: u64) -> Result<String, JsError> {
    parse_values(values)
        .and_then(|v| qod_readings(&v, vd_ms, mde, period_ms))
        .and_then(|r| serde_json::to_string(&r).map_err(|e| e.to_string()))
        .map_err(|e| JsError::new(&e))
}

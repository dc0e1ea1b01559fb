//! In-memory real-time database kernel.
//!
//! Real-time objects carry temporally constrained attributes (sensor values
//! refreshed by periodic updaters, derived values recomputed on demand) and
//! are served by per-object local controllers that schedule firm-deadline
//! requests by earliest deadline. A small schema language describes classes;
//! the DDL generator maps them to object-relational types and tables; the
//! engine simulates a population of objects on a virtual clock.
//!
//! ```
//! let schema = rtdb::dsl::parse_validated(rtdb::AIRCRAFT_SCHEMA).unwrap();
//! let workload = rtdb::engine::WorkloadSpec::from_json(rtdb::DEMO_WORKLOAD).unwrap();
//! let (report, _log) = rtdb::engine::run(&schema, &workload).unwrap();
//! assert!(report.check_identities().is_ok());
//! ```

pub mod controller;
pub mod ddl;
pub mod dsl;
pub mod engine;
pub mod model;
pub mod schema;
pub mod time;

pub use model::{ModelError, RtAttrState, RtScalar, ScalarTag, UpdateOutcome};
pub use schema::{ClassSpec, Diagnostic, Schema, Severity};
pub use time::{DurationMs, TimePoint};

/// The Aircraft class: four sensor attributes, two derived ones.
pub const AIRCRAFT_SCHEMA: &str = include_str!("../../../data/aircraft.rtdb");

/// Aircraft reduced to the members that appear in the generated DDL sample.
pub const AIRCRAFT_DDL_SCHEMA: &str = include_str!("../../../data/aircraft_ddl.rtdb");

/// Ten aircraft for one simulated minute.
pub const DEMO_WORKLOAD: &str = include_str!("../../../data/demo_workload.json");

//! Generators shared by the integration suites.

#![allow(dead_code)]

use std::collections::BTreeMap;

use proptest::prelude::*;
use rtdb::engine::WorkloadSpec;
use rtdb::schema::{AttrKind, AttrSpec, ClassSpec, MethodKind, MethodSpec, Multiplicity, Schema, ValueType};
use rtdb::DurationMs;

const WORDS: &[&str] = &["Bearing", "Course", "Depth", "Echo", "Flow", "Grade", "Heading", "Load", "Pitch", "Range"];
const CLASS_WORDS: &[&str] = &["Aircraft", "Radar", "Ship", "Train", "Probe", "Tank", "Valve", "Pump"];

type ClassicalPlan = (u8, u32);
type SensorPlan = (u8, u64, u32, u8, u32, u64, u64);
type DerivedPlan = (bool, u64, u32, Option<u64>, u8, u64);
type AperiodicPlan = (u32, u32, u64);

#[derive(Debug, Clone)]
pub struct ClassPlan {
    word: usize,
    slots: u32,
    key_int: bool,
    classical: Vec<ClassicalPlan>,
    sensors: Vec<SensorPlan>,
    derived: Vec<DerivedPlan>,
    aperiodic: Vec<AperiodicPlan>,
}

fn plan() -> impl Strategy<Value = ClassPlan> {
    (
        0..CLASS_WORDS.len(),
        1..=8u32,
        any::<bool>(),
        prop::collection::vec((0..3u8, 1..40u32), 0..=2),
        prop::collection::vec((0..7u8, 1..=20_000u64, 0..=20u32, 0..4u8, 2..6u32, 0..=5_000u64, 1..=2_000u64), 0..=3),
        prop::collection::vec((any::<bool>(), 1..=20_000u64, any::<u32>(), prop::option::of(1..=10_000u64), 0..4u8, 1..=2_000u64), 0..=2),
        prop::collection::vec((any::<u32>(), any::<u32>(), 1..=3_000u64), 0..=3),
    )
        .prop_map(|(word, slots, key_int, classical, sensors, derived, aperiodic)| ClassPlan {
            word,
            slots,
            key_int,
            classical,
            sensors,
            derived,
            aperiodic,
        })
}

fn multiplicity(tag: u8, bound: u32) -> Multiplicity {
    match tag {
        1 => Multiplicity::Bounded(bound),
        2 => Multiplicity::Unbounded,
        _ => Multiplicity::One,
    }
}

fn pick<T: Clone>(pool: &[T], mask: u32) -> Vec<T> {
    pool.iter().enumerate().filter(|(i, _)| mask >> (i % 32) & 1 == 1).map(|(_, x)| x.clone()).collect()
}

fn build_class(index: usize, p: &ClassPlan) -> ClassSpec {
    let mut cls = ClassSpec::new(format!("{}{index}", CLASS_WORDS[p.word]));
    cls.slot_capacity = p.slots;
    cls.key = Some("Id".into());
    cls.attrs.push(AttrSpec {
        name: "Id".into(),
        kind: AttrKind::Classical,
        value_type: if p.key_int { ValueType::Int } else { ValueType::Str(15) },
        multiplicity: Multiplicity::One,
    });
    let mut classical = Vec::new();
    for (i, (ty, len)) in p.classical.iter().enumerate() {
        let name = format!("Info{i}");
        cls.attrs.push(AttrSpec {
            name: name.clone(),
            kind: AttrKind::Classical,
            value_type: [ValueType::Int, ValueType::Real, ValueType::Str(*len)][*ty as usize],
            multiplicity: Multiplicity::One,
        });
        classical.push(name);
    }
    // numeric real-time attributes usable as derivation inputs
    let mut numeric = Vec::new();
    let mut real_time = Vec::new();
    for (i, &(ty, vd, mde_halves, mult, bound, slack, deadline)) in p.sensors.iter().enumerate() {
        let name = format!("{}{i}", WORDS[(p.word + i) % WORDS.len()]);
        // one sensor in seven carries text
        let value_type = match ty {
            0..=2 => ValueType::Int,
            3..=5 => ValueType::Real,
            _ => ValueType::Str(20),
        };
        cls.attrs.push(AttrSpec {
            name: name.clone(),
            kind: AttrKind::Sensor {
                vd: DurationMs::from_millis(vd),
                mde: f64::from(mde_halves) / 2.0,
            },
            value_type,
            multiplicity: multiplicity(mult, bound),
        });
        cls.methods.push(MethodSpec {
            name: format!("Update{name}"),
            kind: MethodKind::Periodic {
                target: name.clone(),
                period: DurationMs::from_millis(deadline + slack),
            },
            deadline: DurationMs::from_millis(deadline),
        });
        if value_type != ValueType::Str(20) {
            numeric.push(name.clone());
        }
        real_time.push(name);
    }
    for (i, (real, vd, mask, rvi, mult, deadline)) in p.derived.iter().enumerate() {
        let mut inputs = pick(&numeric, *mask);
        if inputs.is_empty() {
            match numeric.first() {
                Some(first) => inputs.push(first.clone()),
                None => break,
            }
        }
        let name = format!("Derived{i}");
        cls.attrs.push(AttrSpec {
            name: name.clone(),
            kind: AttrKind::Derived {
                vd: DurationMs::from_millis(*vd),
                inputs,
                rvi: rvi.map(DurationMs::from_millis),
            },
            value_type: if *real { ValueType::Real } else { ValueType::Int },
            multiplicity: multiplicity(*mult, 3),
        });
        cls.methods.push(MethodSpec {
            name: format!("Compute{name}"),
            kind: MethodKind::Sporadic { target: name.clone() },
            deadline: DurationMs::from_millis(*deadline),
        });
        numeric.push(name.clone());
        real_time.push(name);
    }
    for (i, (read_mask, write_mask, deadline)) in p.aperiodic.iter().enumerate() {
        let readable: Vec<String> = real_time.iter().chain(&classical).cloned().collect();
        let reads = pick(&readable, *read_mask);
        let writes: Vec<String> = pick(&classical, *write_mask).into_iter().filter(|w| !reads.contains(w)).collect();
        cls.methods.push(MethodSpec {
            name: format!("Query{i}"),
            kind: MethodKind::Aperiodic { reads, writes },
            deadline: DurationMs::from_millis(*deadline),
        });
    }
    cls
}

/// Valid schemas of one to three classes. Identifiers are capitalized so
/// they never collide with the lowercase keywords.
pub fn valid_schema() -> impl Strategy<Value = Schema> {
    prop::collection::vec(plan(), 1..=3).prop_map(|plans| Schema {
        classes: plans.iter().enumerate().map(|(i, p)| build_class(i, p)).collect(),
    })
}

/// Two objects per class with keys unique across classes, every method costed, a light user load.
pub fn workload_for(schema: &Schema, seed: u64, duration_ms: u64) -> WorkloadSpec {
    let mut objects = Vec::new();
    let mut exec_times = BTreeMap::new();
    let mut templates = Vec::new();
    for (ci, cls) in schema.classes.iter().enumerate() {
        let key_int = cls.attr("Id").is_some_and(|a| a.value_type == ValueType::Int);
        for k in 0..2 {
            let key = if key_int {
                serde_json::json!(10 * ci + k)
            } else {
                serde_json::json!(format!("{}-{k}", cls.name))
            };
            objects.push(serde_json::json!({ "class": cls.name, "key": key }));
        }
        for (i, m) in cls.methods.iter().enumerate() {
            let exec = 1 + (m.deadline.millis() / 4).min(50) + i as u64 % 3;
            exec_times.insert(format!("{}.{}", cls.name, m.name), exec);
            if matches!(m.kind, MethodKind::Aperiodic { .. }) {
                templates.push(serde_json::json!({ "method": format!("{}.{}", cls.name, m.name), "rate_per_sec": 2.0 }));
            }
        }
    }
    let json = serde_json::json!({
        "duration_ms": duration_ms,
        "seed": seed,
        "objects": objects,
        "exec_times": exec_times,
        "user_templates": templates,
    });
    WorkloadSpec::from_json(&json.to_string()).expect("generated workload is well formed")
}

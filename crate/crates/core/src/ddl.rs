//! Object-relational DDL for a schema.
//!
//! Real-time attributes map to two shared object types: `RealTime` (value,
//! timestamp, validity duration) for derived attributes and
//! `RealTimeSensor`, a subtype adding the maximum data error, for sensor
//! attributes. Multi-valued attributes use nested tables (`NT_<base>`) or
//! varrays (`ARR_<base>_<n>`). Each class becomes an object type of the same
//! name and an object table `<Class>Table` keyed on the class key.
//!
//! Validity durations are written in seconds.

use std::fmt::Write;

use thiserror::Error;

use crate::model::RtScalar;
use crate::schema::{AttrKind, AttrSpec, ClassSpec, Multiplicity, Schema, ValueType};
use crate::time::DurationMs;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DdlError {
    #[error("class `{class}` has {expected} attributes but {found} values were given")]
    ArityMismatch { class: String, expected: usize, found: usize },
    #[error("value for `{attr}` does not match its type")]
    ValueMismatch { attr: String },
    #[error("class `{0}` has no key")]
    NoKey(String),
}

/// Statements in emission order: base types, collection types, class types,
/// tables, inserts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DdlScript {
    pub statements: Vec<String>,
}

impl DdlScript {
    pub fn render(&self) -> String {
        let mut out = self.statements.join("\n\n");
        if !out.is_empty() {
            out.push('\n');
        }
        out
    }
}

const REAL_TIME: &str = "RealTime";
const REAL_TIME_SENSOR: &str = "RealTimeSensor";

fn base_of(a: &AttrSpec) -> Option<&'static str> {
    match a.kind {
        AttrKind::Classical => None,
        AttrKind::Sensor { .. } => Some(REAL_TIME_SENSOR),
        AttrKind::Derived { .. } => Some(REAL_TIME),
    }
}

fn collection_name(base: &str, m: Multiplicity) -> Option<String> {
    match m {
        Multiplicity::One => None,
        Multiplicity::Unbounded => Some(format!("NT_{base}")),
        Multiplicity::Bounded(n) => Some(format!("ARR_{base}_{n}")),
    }
}

fn sql_type(a: &AttrSpec) -> String {
    match base_of(a) {
        Some(base) => collection_name(base, a.multiplicity).unwrap_or_else(|| base.to_owned()),
        None => match a.value_type {
            ValueType::Int | ValueType::Real => "number".to_owned(),
            ValueType::Str(n) => format!("varchar2({n})"),
        },
    }
}

pub fn emit_base_types(schema: &Schema) -> Vec<String> {
    let any_rt = schema.classes.iter().flat_map(|c| &c.attrs).any(AttrSpec::is_real_time);
    if !any_rt {
        return Vec::new();
    }
    vec![
        "create type RealTime as object\n(Value number,\nTimeStampValue timestamp,\nValidityDuration number)\nnot final;\n/"
            .to_owned(),
        "create type RealTimeSensor under RealTime\n(MaximumDataError number)\n/".to_owned(),
    ]
}

pub fn emit_collection_types(schema: &Schema) -> Vec<String> {
    let mut seen: Vec<(&str, Multiplicity)> = Vec::new();
    let mut out = Vec::new();
    for a in schema.classes.iter().flat_map(|c| &c.attrs) {
        let Some(base) = base_of(a) else {
            continue;
        };
        if a.multiplicity == Multiplicity::One || seen.contains(&(base, a.multiplicity)) {
            continue;
        }
        seen.push((base, a.multiplicity));
        let name = collection_name(base, a.multiplicity).expect("multi-valued");
        let body = match a.multiplicity {
            Multiplicity::Bounded(n) => format!("varray({n}) of {base}"),
            _ => format!("table of {base}"),
        };
        out.push(format!("create type {name} as {body};\n/"));
    }
    out
}

pub fn emit_class_udt(cls: &ClassSpec) -> String {
    let fields: Vec<String> = cls.attrs.iter().map(|a| format!("{} {}", a.name, sql_type(a))).collect();
    format!("create type {} as object\n({})\n/", cls.name, fields.join(",\n"))
}

pub fn emit_object_table(cls: &ClassSpec) -> Result<String, DdlError> {
    let key = cls.key.as_deref().ok_or_else(|| DdlError::NoKey(cls.name.clone()))?;
    let table = format!("{}Table", cls.name);
    Ok(format!(
        "create table {table} of {}\n(constraint pk_{table} primary key ({key}));",
        cls.name
    ))
}

fn literal(v: &RtScalar) -> String {
    match v {
        RtScalar::Int(i) => i.to_string(),
        RtScalar::Real(x) if *x == 0.0 => "0".to_owned(),
        RtScalar::Real(x) => x.to_string(),
        RtScalar::Str(s) => format!("'{}'", s.replace('\'', "''")),
    }
}

fn seconds(d: DurationMs) -> String {
    let ms = d.millis();
    if ms.is_multiple_of(1000) {
        (ms / 1000).to_string()
    } else {
        let s = format!("{}.{:03}", ms / 1000, ms % 1000);
        s.trim_end_matches('0').to_owned()
    }
}

/// One insert with `values` in attribute declaration order. Real-time
/// attributes get constructor calls stamped with `sysdate`.
pub fn emit_sample_insert(cls: &ClassSpec, values: &[RtScalar]) -> Result<String, DdlError> {
    if values.len() != cls.attrs.len() {
        return Err(DdlError::ArityMismatch {
            class: cls.name.clone(),
            expected: cls.attrs.len(),
            found: values.len(),
        });
    }
    let mut parts = Vec::with_capacity(values.len());
    for (a, v) in cls.attrs.iter().zip(values) {
        let numeric = matches!(a.value_type, ValueType::Int | ValueType::Real);
        let ok = match v {
            RtScalar::Int(_) | RtScalar::Real(_) => numeric,
            RtScalar::Str(_) => !numeric,
        };
        if !ok {
            return Err(DdlError::ValueMismatch { attr: a.name.clone() });
        }
        let mut item = String::new();
        match &a.kind {
            AttrKind::Classical => item.push_str(&literal(v)),
            AttrKind::Sensor { vd, mde } => {
                let mde = if *mde == 0.0 { 0.0 } else { *mde };
                write!(item, "{REAL_TIME_SENSOR}({}, sysdate, {}, {mde})", literal(v), seconds(*vd)).unwrap();
            }
            AttrKind::Derived { vd, .. } => {
                write!(item, "{REAL_TIME}({}, sysdate, {})", literal(v), seconds(*vd)).unwrap();
            }
        }
        if let Some(coll) = base_of(a).and_then(|b| collection_name(b, a.multiplicity)) {
            item = format!("{coll}({item})");
        }
        parts.push(item);
    }
    Ok(format!("Insert into {}Table values ({});", cls.name, parts.join(", ")))
}

/// Types and tables for every class of `schema`.
pub fn compile(schema: &Schema) -> Result<DdlScript, DdlError> {
    let mut statements = emit_base_types(schema);
    statements.extend(emit_collection_types(schema));
    statements.extend(schema.classes.iter().map(emit_class_udt));
    for cls in &schema.classes {
        statements.push(emit_object_table(cls)?);
    }
    Ok(DdlScript { statements })
}

/// Whitespace-insensitive form used to compare scripts: runs of whitespace
/// become one space, and spaces next to `( ) , ;` disappear. Quoted text is
/// left alone.
pub fn normalize_sql(sql: &str) -> String {
    let mut collapsed = String::with_capacity(sql.len());
    let mut in_quote = false;
    let mut pending_space = false;
    for c in sql.chars() {
        if in_quote {
            collapsed.push(c);
            if c == '\'' {
                in_quote = false;
            }
            continue;
        }
        if c.is_whitespace() {
            pending_space = true;
            continue;
        }
        let tight = |x: char| matches!(x, '(' | ')' | ',' | ';');
        if pending_space && !collapsed.is_empty() && !tight(c) && !collapsed.ends_with(tight) {
            collapsed.push(' ');
        }
        pending_space = false;
        collapsed.push(c);
        if c == '\'' {
            in_quote = true;
        }
    }
    collapsed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    #[test]
    fn normalization() {
        assert_eq!(normalize_sql("  a   b\n( c ,d ) ;\n/ "), "a b(c,d);/");
        assert_eq!(normalize_sql("x ('a  b' , 'c''d')"), "x('a  b','c''d')");
        assert_eq!(normalize_sql("primary key (Id)"), normalize_sql("primary key(Id)"));
    }

    #[test]
    fn classical_only_schema_has_no_base_types() {
        let s = parse("realtime class Depot { key Id: string; }").unwrap();
        assert!(emit_base_types(&s).is_empty());
        assert!(emit_collection_types(&s).is_empty());
        assert_eq!(emit_class_udt(&s.classes[0]), "create type Depot as object\n(Id varchar2(15))\n/");
        assert_eq!(
            normalize_sql(&emit_object_table(&s.classes[0]).unwrap()),
            "create table DepotTable of Depot(constraint pk_DepotTable primary key(Id));"
        );
    }

    #[test]
    fn base_types_emitted_once() {
        let s = parse(
            "realtime class A { key Id: integer; sensor S: rtreal { vd = 1s; mde = 0; } }
             realtime class B { key Id: integer; sensor S: rtreal { vd = 1s; mde = 0; } }",
        )
        .unwrap();
        let script = compile(&s).unwrap();
        assert_eq!(script.statements.iter().filter(|t| t.starts_with("create type RealTime as")).count(), 1);
        assert_eq!(script.statements.iter().filter(|t| t.starts_with("create type RealTimeSensor")).count(), 1);
        assert_eq!(script.statements.len(), 6);
    }

    #[test]
    fn collection_types() {
        let s = parse(
            "realtime class C {
                key Id: integer;
                sensor A: rtinteger[3] { vd = 1s; mde = 0; }
                sensor B: rtinteger[3] { vd = 1s; mde = 0; }
                derived D: rtinteger[*] { vd = 1s; from A; }
                derived E: rtinteger[4] { vd = 1s; from B; }
            }",
        )
        .unwrap();
        assert_eq!(
            emit_collection_types(&s),
            vec![
                "create type ARR_RealTimeSensor_3 as varray(3) of RealTimeSensor;\n/",
                "create type NT_RealTime as table of RealTime;\n/",
                "create type ARR_RealTime_4 as varray(4) of RealTime;\n/",
            ]
        );
        assert!(emit_class_udt(&s.classes[0]).contains("A ARR_RealTimeSensor_3,\nB ARR_RealTimeSensor_3,\nD NT_RealTime,"));
    }

    #[test]
    fn insert_arity_and_types() {
        let s = parse("realtime class Depot { key Id: string; classical N: integer; }").unwrap();
        let c = &s.classes[0];
        assert_eq!(
            emit_sample_insert(c, &["D1".into(), RtScalar::Int(3)]).unwrap(),
            "Insert into DepotTable values ('D1', 3);"
        );
        assert_eq!(
            emit_sample_insert(c, &["D1".into()]),
            Err(DdlError::ArityMismatch {
                class: "Depot".into(),
                expected: 2,
                found: 1
            })
        );
        assert_eq!(
            emit_sample_insert(c, &[RtScalar::Int(1), RtScalar::Int(3)]),
            Err(DdlError::ValueMismatch { attr: "Id".into() })
        );
        assert_eq!(seconds(DurationMs::from_millis(1500)), "1.5");
        assert_eq!(seconds(DurationMs::from_millis(250)), "0.25");
        assert_eq!(literal(&"O'Hare".into()), "'O''Hare'");
    }
}

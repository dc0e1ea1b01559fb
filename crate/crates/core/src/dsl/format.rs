use std::fmt::Write;

use crate::schema::{
    AttrKind, AttrSpec, ClassSpec, MethodKind, Multiplicity, Schema, ValueType, DEFAULT_SLOT_CAPACITY,
    DEFAULT_STRING_LEN,
};

/// Canonical DSL text for `schema`. Parsing the result yields an equal schema.
pub fn format_schema(schema: &Schema) -> String {
    let mut out = String::new();
    for (i, cls) in schema.classes.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        format_class(&mut out, cls);
    }
    out
}

fn format_class(out: &mut String, cls: &ClassSpec) {
    write!(out, "realtime class {}", cls.name).unwrap();
    if cls.slot_capacity != DEFAULT_SLOT_CAPACITY {
        write!(out, " slots {}", cls.slot_capacity).unwrap();
    }
    out.push_str(" {\n");
    for attr in &cls.attrs {
        out.push_str("    ");
        format_attr(out, attr, cls.key.as_deref() == Some(attr.name.as_str()));
        out.push('\n');
    }
    for m in &cls.methods {
        out.push_str("    ");
        match &m.kind {
            MethodKind::Periodic { target, period } => {
                write!(out, "periodic {} updates {target} period {period}", m.name).unwrap();
            }
            MethodKind::Sporadic { target } => write!(out, "sporadic {} computes {target}", m.name).unwrap(),
            MethodKind::Aperiodic { reads, writes } => {
                write!(out, "aperiodic {}", m.name).unwrap();
                if !reads.is_empty() {
                    write!(out, " reads {}", reads.join(", ")).unwrap();
                }
                if !writes.is_empty() {
                    write!(out, " writes {}", writes.join(", ")).unwrap();
                }
            }
        }
        writeln!(out, " deadline {};", m.deadline).unwrap();
    }
    out.push_str("}\n");
}

fn format_attr(out: &mut String, a: &AttrSpec, is_key: bool) {
    let rt = if a.is_real_time() { "rt" } else { "" };
    let ty = match a.value_type {
        ValueType::Int => format!("{rt}integer"),
        ValueType::Real => format!("{rt}real"),
        ValueType::Str(DEFAULT_STRING_LEN) => format!("{rt}string"),
        ValueType::Str(n) => format!("{rt}string({n})"),
    };
    let mult = match a.multiplicity {
        Multiplicity::One => String::new(),
        Multiplicity::Bounded(n) => format!("[{n}]"),
        Multiplicity::Unbounded => "[*]".to_owned(),
    };
    match &a.kind {
        AttrKind::Classical if is_key => write!(out, "key {}: {ty};", a.name),
        AttrKind::Classical => write!(out, "classical {}: {ty}{mult};", a.name),
        AttrKind::Sensor { vd, mde } => {
            // -0 would print as "-0", which the grammar has no sign for
            let mde = if *mde == 0.0 { 0.0 } else { *mde };
            write!(out, "sensor {}: {ty}{mult} {{ vd = {vd}; mde = {mde}; }}", a.name)
        }
        AttrKind::Derived { vd, inputs, rvi } => {
            write!(out, "derived {}: {ty}{mult} {{ vd = {vd}; from {};", a.name, inputs.join(", ")).unwrap();
            if let Some(rvi) = rvi {
                write!(out, " rvi = {rvi};").unwrap();
            }
            out.push_str(" }");
            Ok(())
        }
    }
    .unwrap();
}

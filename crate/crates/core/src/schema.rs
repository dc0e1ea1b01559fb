//! Real-time class definitions and their validation.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::model::ScalarTag;
use crate::time::DurationMs;

/// Default `string` length when the declaration gives none.
pub const DEFAULT_STRING_LEN: u32 = 15;
/// Default number of execution slots per object.
pub const DEFAULT_SLOT_CAPACITY: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueType {
    Int,
    Real,
    Str(u32),
}

impl ValueType {
    pub fn tag(self) -> ScalarTag {
        match self {
            ValueType::Int => ScalarTag::Int,
            ValueType::Real => ScalarTag::Real,
            ValueType::Str(_) => ScalarTag::Str,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Multiplicity {
    One,
    Bounded(u32),
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttrKind {
    Classical,
    Sensor {
        vd: DurationMs,
        mde: f64,
    },
    Derived {
        vd: DurationMs,
        inputs: Vec<String>,
        rvi: Option<DurationMs>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttrSpec {
    pub name: String,
    pub kind: AttrKind,
    pub value_type: ValueType,
    pub multiplicity: Multiplicity,
}

impl AttrSpec {
    pub fn is_real_time(&self) -> bool {
        !matches!(self.kind, AttrKind::Classical)
    }

    pub fn is_sensor(&self) -> bool {
        matches!(self.kind, AttrKind::Sensor { .. })
    }

    pub fn is_derived(&self) -> bool {
        matches!(self.kind, AttrKind::Derived { .. })
    }

    pub fn vd(&self) -> Option<DurationMs> {
        match self.kind {
            AttrKind::Classical => None,
            AttrKind::Sensor { vd, .. } | AttrKind::Derived { vd, .. } => Some(vd),
        }
    }

    pub fn inputs(&self) -> &[String] {
        match &self.kind {
            AttrKind::Derived { inputs, .. } => inputs,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MethodKind {
    /// Sensor transaction refreshing one sensor attribute.
    Periodic { target: String, period: DurationMs },
    /// Recomputation of one derived attribute.
    Sporadic { target: String },
    /// User transaction.
    Aperiodic { reads: Vec<String>, writes: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodClass {
    Periodic,
    Sporadic,
    Aperiodic,
}

impl fmt::Display for MethodClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MethodClass::Periodic => "periodic",
            MethodClass::Sporadic => "sporadic",
            MethodClass::Aperiodic => "aperiodic",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSpec {
    pub name: String,
    pub kind: MethodKind,
    /// Relative deadline.
    pub deadline: DurationMs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LockMode {
    Read,
    Write,
}

impl MethodSpec {
    pub fn class(&self) -> MethodClass {
        match self.kind {
            MethodKind::Periodic { .. } => MethodClass::Periodic,
            MethodKind::Sporadic { .. } => MethodClass::Sporadic,
            MethodKind::Aperiodic { .. } => MethodClass::Aperiodic,
        }
    }

    /// Attribute-level lock set. A write subsumes the read of the same attribute.
    pub fn lock_set(&self, cls: &ClassSpec) -> BTreeMap<String, LockMode> {
        let mut locks = BTreeMap::new();
        let read = |locks: &mut BTreeMap<String, LockMode>, a: &str| {
            locks.entry(a.to_owned()).or_insert(LockMode::Read);
        };
        match &self.kind {
            MethodKind::Periodic { target, .. } => {
                locks.insert(target.clone(), LockMode::Write);
            }
            MethodKind::Sporadic { target } => {
                locks.insert(target.clone(), LockMode::Write);
                if let Some(attr) = cls.attr(target) {
                    for input in attr.inputs() {
                        read(&mut locks, input);
                    }
                }
            }
            MethodKind::Aperiodic { reads, writes } => {
                for w in writes {
                    locks.insert(w.clone(), LockMode::Write);
                }
                for r in reads {
                    read(&mut locks, r);
                }
            }
        }
        locks
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassSpec {
    pub name: String,
    pub key: Option<String>,
    pub attrs: Vec<AttrSpec>,
    pub methods: Vec<MethodSpec>,
    pub slot_capacity: u32,
}

impl ClassSpec {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            key: None,
            attrs: Vec::new(),
            methods: Vec::new(),
            slot_capacity: DEFAULT_SLOT_CAPACITY,
        }
    }

    pub fn attr(&self, name: &str) -> Option<&AttrSpec> {
        self.attrs.iter().find(|a| a.name == name)
    }

    pub fn method(&self, name: &str) -> Option<&MethodSpec> {
        self.methods.iter().find(|m| m.name == name)
    }

    /// The periodic method refreshing `sensor`.
    pub fn updater_of(&self, sensor: &str) -> Option<&MethodSpec> {
        self.methods
            .iter()
            .find(|m| matches!(&m.kind, MethodKind::Periodic { target, .. } if target == sensor))
    }

    /// The sporadic method computing `derived`.
    pub fn computer_of(&self, derived: &str) -> Option<&MethodSpec> {
        self.methods
            .iter()
            .find(|m| matches!(&m.kind, MethodKind::Sporadic { target } if target == derived))
    }

    /// Relative validity interval of a derived attribute: the declared one, or
    /// the smallest VD among its inputs.
    pub fn effective_rvi(&self, derived: &str) -> Option<DurationMs> {
        match &self.attr(derived)?.kind {
            AttrKind::Derived { rvi: Some(rvi), .. } => Some(*rvi),
            AttrKind::Derived { inputs, .. } => inputs.iter().filter_map(|i| self.attr(i)?.vd()).min(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Schema {
    pub classes: Vec<ClassSpec>,
}

impl Schema {
    pub fn class(&self, name: &str) -> Option<&ClassSpec> {
        self.classes.iter().find(|c| c.name == name)
    }

    /// Multiplies every sensor MDE by `factor`.
    pub fn scale_mde(&mut self, factor: f64) {
        for attr in self.classes.iter_mut().flat_map(|c| c.attrs.iter_mut()) {
            if let AttrKind::Sensor { mde, .. } = &mut attr.kind {
                *mde *= factor;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

/// The schema item a diagnostic is about, by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Site {
    Class(usize),
    Attr(usize, usize),
    Method(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub class: String,
    pub item: Option<String>,
    pub site: Site,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.severity, self.message)
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(|d| d.severity == Severity::Error)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("derivation cycle through {0:?}")]
pub struct CycleFound(pub Vec<String>);

struct Checker<'a> {
    ci: usize,
    cls: &'a ClassSpec,
    out: Vec<Diagnostic>,
}

impl Checker<'_> {
    fn push(&mut self, severity: Severity, site: Site, message: String) {
        let item = match site {
            Site::Class(_) => None,
            Site::Attr(_, i) => Some(self.cls.attrs[i].name.clone()),
            Site::Method(_, i) => Some(self.cls.methods[i].name.clone()),
        };
        self.out.push(Diagnostic {
            severity,
            class: self.cls.name.clone(),
            item,
            site,
            message,
        });
    }

    fn error(&mut self, site: Site, message: String) {
        self.push(Severity::Error, site, message);
    }

    fn attr_site(&self, i: usize) -> Site {
        Site::Attr(self.ci, i)
    }

    fn method_site(&self, i: usize) -> Site {
        Site::Method(self.ci, i)
    }
}

/// Checks every structural rule of the schema and reports each violation.
pub fn validate(schema: &Schema) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (ci, cls) in schema.classes.iter().enumerate() {
        if !seen.insert(cls.name.as_str()) {
            out.push(Diagnostic {
                severity: Severity::Error,
                class: cls.name.clone(),
                item: None,
                site: Site::Class(ci),
                message: format!("duplicate class `{}`", cls.name),
            });
        }
        let mut ck = Checker { ci, cls, out: Vec::new() };
        check_class(&mut ck);
        out.append(&mut ck.out);
    }
    out
}

fn check_class(ck: &mut Checker<'_>) {
    let cls = ck.cls;
    let class_site = Site::Class(ck.ci);
    if cls.slot_capacity == 0 {
        ck.error(class_site, format!("class `{}` needs at least one execution slot", cls.name));
    }

    let mut names = HashSet::new();
    for (i, a) in cls.attrs.iter().enumerate() {
        if !names.insert(a.name.as_str()) {
            ck.error(ck.attr_site(i), format!("duplicate member name `{}`", a.name));
        }
    }
    for (i, m) in cls.methods.iter().enumerate() {
        if !names.insert(m.name.as_str()) {
            ck.error(ck.method_site(i), format!("duplicate member name `{}`", m.name));
        }
    }

    match &cls.key {
        None => ck.error(class_site, format!("class `{}` declares no key", cls.name)),
        Some(key) => match cls.attrs.iter().position(|a| &a.name == key) {
            None => ck.error(class_site, format!("key `{key}` is not an attribute")),
            Some(i) => {
                let a = &cls.attrs[i];
                if a.is_real_time() || a.multiplicity != Multiplicity::One {
                    ck.error(
                        ck.attr_site(i),
                        format!("key `{key}` must be a single-valued classical attribute"),
                    );
                }
            }
        },
    }

    for (i, a) in cls.attrs.iter().enumerate() {
        check_attr(ck, i, a);
    }
    check_cycles(ck);

    let mut periodic = 0;
    for (i, m) in cls.methods.iter().enumerate() {
        check_method(ck, i, m);
        if m.class() == MethodClass::Periodic {
            periodic += 1;
        }
    }

    for (i, a) in cls.attrs.iter().enumerate() {
        let (want, count) = match a.kind {
            AttrKind::Sensor { .. } => (
                "periodic updater",
                cls.methods
                    .iter()
                    .filter(|m| matches!(&m.kind, MethodKind::Periodic { target, .. } if *target == a.name))
                    .count(),
            ),
            AttrKind::Derived { .. } => (
                "sporadic computer",
                cls.methods
                    .iter()
                    .filter(|m| matches!(&m.kind, MethodKind::Sporadic { target } if *target == a.name))
                    .count(),
            ),
            AttrKind::Classical => continue,
        };
        if count != 1 {
            ck.error(
                ck.attr_site(i),
                format!("`{}` needs exactly one {want}, found {count}", a.name),
            );
        }
    }

    if periodic > 0 && periodic >= cls.slot_capacity as usize {
        ck.push(
            Severity::Warning,
            class_site,
            format!(
                "{periodic} periodic services reserve all {} slots; sporadic and aperiodic requests can never start",
                cls.slot_capacity
            ),
        );
    }
}

fn check_attr(ck: &mut Checker<'_>, i: usize, a: &AttrSpec) {
    let cls = ck.cls;
    let site = ck.attr_site(i);
    if a.value_type == ValueType::Str(0) {
        ck.error(site, format!("`{}`: string length must be positive", a.name));
    }
    match a.multiplicity {
        Multiplicity::Bounded(n) if n < 2 => {
            ck.error(site, format!("`{}`: bounded multiplicity must be at least 2", a.name))
        }
        Multiplicity::Bounded(_) | Multiplicity::Unbounded if !a.is_real_time() => ck.error(
            site,
            format!("`{}`: multiplicity is only supported on real-time attributes", a.name),
        ),
        _ => {}
    }
    match &a.kind {
        AttrKind::Classical => {}
        AttrKind::Sensor { vd, mde } => {
            if vd.is_zero() {
                ck.error(site, format!("`{}`: validity duration must be positive", a.name));
            }
            if !mde.is_finite() || *mde < 0.0 {
                ck.error(site, format!("`{}`: maximum data error must be a finite non-negative number", a.name));
            }
        }
        AttrKind::Derived { vd, inputs, .. } => {
            if vd.is_zero() {
                ck.error(site, format!("`{}`: validity duration must be positive", a.name));
            }
            if inputs.is_empty() {
                ck.error(site, format!("derived `{}` has no inputs", a.name));
            }
            let mut seen = HashSet::new();
            for input in inputs {
                if !seen.insert(input.as_str()) {
                    ck.error(site, format!("derived `{}` lists input `{input}` twice", a.name));
                    continue;
                }
                if *input == a.name {
                    // reported by the cycle check
                    continue;
                }
                match cls.attr(input) {
                    None => ck.error(site, format!("derived `{}` reads unknown attribute `{input}`", a.name)),
                    Some(src) if !src.is_real_time() => ck.error(
                        site,
                        format!("derived `{}` input `{input}` must be a sensor or derived attribute", a.name),
                    ),
                    Some(_) => {}
                }
            }
        }
    }
}

fn check_method(ck: &mut Checker<'_>, i: usize, m: &MethodSpec) {
    let cls = ck.cls;
    let site = ck.method_site(i);
    if m.deadline.is_zero() {
        ck.error(site, format!("`{}`: deadline must be positive", m.name));
    }
    match &m.kind {
        MethodKind::Periodic { target, period } => {
            if period.is_zero() {
                ck.error(site, format!("`{}`: period must be positive", m.name));
            } else if m.deadline > *period {
                ck.error(site, format!("`{}`: deadline {} exceeds period {period}", m.name, m.deadline));
            }
            match cls.attr(target) {
                Some(a) if a.is_sensor() => {}
                Some(_) => ck.error(site, format!("periodic `{}` must update a sensor attribute, `{target}` is not", m.name)),
                None => ck.error(site, format!("periodic `{}` updates unknown attribute `{target}`", m.name)),
            }
        }
        MethodKind::Sporadic { target } => match cls.attr(target) {
            Some(a) if a.is_derived() => {}
            Some(_) => ck.error(site, format!("sporadic `{}` must compute a derived attribute, `{target}` is not", m.name)),
            None => ck.error(site, format!("sporadic `{}` computes unknown attribute `{target}`", m.name)),
        },
        MethodKind::Aperiodic { reads, writes } => {
            for (list, what) in [(reads, "reads"), (writes, "writes")] {
                let mut seen = HashSet::new();
                for a in list {
                    if !seen.insert(a.as_str()) {
                        ck.error(site, format!("aperiodic `{}` {what} `{a}` twice", m.name));
                    }
                    if cls.attr(a).is_none() {
                        ck.error(site, format!("aperiodic `{}` {what} unknown attribute `{a}`", m.name));
                    }
                }
            }
            for w in writes {
                if cls.attr(w).is_some_and(AttrSpec::is_real_time) {
                    ck.error(
                        site,
                        format!(
                            "aperiodic `{}` writes real-time attribute `{w}`; user transactions only read temporal data",
                            m.name
                        ),
                    );
                }
            }
        }
    }
}

/// One diagnostic per strongly connected component of the derivation graph
/// that forms a cycle (including self-loops).
fn check_cycles(ck: &mut Checker<'_>) {
    let cls = ck.cls;
    let index: HashMap<&str, usize> = cls
        .attrs
        .iter()
        .enumerate()
        .filter(|(_, a)| a.is_derived())
        .map(|(i, a)| (a.name.as_str(), i))
        .collect();
    let edges = |i: usize| -> Vec<usize> {
        cls.attrs[i]
            .inputs()
            .iter()
            .filter_map(|n| index.get(n.as_str()).copied())
            .collect()
    };

    // Tarjan's algorithm, recursive depth is bounded by the attribute count.
    struct Tarjan {
        next: usize,
        idx: HashMap<usize, usize>,
        low: HashMap<usize, usize>,
        stack: Vec<usize>,
        on_stack: HashSet<usize>,
        comps: Vec<Vec<usize>>,
    }
    fn visit(t: &mut Tarjan, v: usize, edges: &dyn Fn(usize) -> Vec<usize>) {
        t.idx.insert(v, t.next);
        t.low.insert(v, t.next);
        t.next += 1;
        t.stack.push(v);
        t.on_stack.insert(v);
        for w in edges(v) {
            if !t.idx.contains_key(&w) {
                visit(t, w, edges);
                let lw = t.low[&w];
                let lv = t.low.get_mut(&v).unwrap();
                *lv = (*lv).min(lw);
            } else if t.on_stack.contains(&w) {
                let iw = t.idx[&w];
                let lv = t.low.get_mut(&v).unwrap();
                *lv = (*lv).min(iw);
            }
        }
        if t.low[&v] == t.idx[&v] {
            let mut comp = Vec::new();
            while let Some(w) = t.stack.pop() {
                t.on_stack.remove(&w);
                comp.push(w);
                if w == v {
                    break;
                }
            }
            t.comps.push(comp);
        }
    }

    let mut t = Tarjan {
        next: 0,
        idx: HashMap::new(),
        low: HashMap::new(),
        stack: Vec::new(),
        on_stack: HashSet::new(),
        comps: Vec::new(),
    };
    let mut order: Vec<usize> = index.values().copied().collect();
    order.sort_unstable();
    for &v in &order {
        if !t.idx.contains_key(&v) {
            visit(&mut t, v, &edges);
        }
    }
    let mut cycles: Vec<Vec<usize>> = t
        .comps
        .into_iter()
        .filter(|c| c.len() > 1 || edges(c[0]).contains(&c[0]))
        .map(|mut c| {
            c.sort_unstable();
            c
        })
        .collect();
    cycles.sort();
    for comp in cycles {
        let names: Vec<&str> = comp.iter().map(|&i| cls.attrs[i].name.as_str()).collect();
        let msg = if names.len() == 1 {
            format!("derived `{}` lists itself as an input", names[0])
        } else {
            format!("derivation cycle through {}", names.join(", "))
        };
        ck.error(ck.attr_site(comp[0]), msg);
    }
}

/// Derived attributes ordered inputs-first; ties keep declaration order.
pub fn derivation_order(cls: &ClassSpec) -> Result<Vec<String>, CycleFound> {
    let derived: Vec<&AttrSpec> = cls.attrs.iter().filter(|a| a.is_derived()).collect();
    let derived_names: BTreeSet<&str> = derived.iter().map(|a| a.name.as_str()).collect();
    let mut done: BTreeSet<&str> = BTreeSet::new();
    let mut order = Vec::with_capacity(derived.len());
    while order.len() < derived.len() {
        let next = derived.iter().find(|a| {
            !done.contains(a.name.as_str())
                && a.inputs()
                    .iter()
                    .all(|i| !derived_names.contains(i.as_str()) || done.contains(i.as_str()))
        });
        match next {
            Some(a) => {
                done.insert(a.name.as_str());
                order.push(a.name.clone());
            }
            None => {
                return Err(CycleFound(
                    derived
                        .iter()
                        .filter(|a| !done.contains(a.name.as_str()))
                        .map(|a| a.name.clone())
                        .collect(),
                ))
            }
        }
    }
    Ok(order)
}

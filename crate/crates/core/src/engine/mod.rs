//! Deterministic discrete-event simulation of a population of real-time
//! objects.
//!
//! Events are processed in `(time, seq)` order. After every event of one
//! instant has been handled, each object touched at that instant runs its
//! controller until nothing more can start. Periodic updaters are released
//! at `0, P, 2P, ...` up to and including the horizon; sporadic computers
//! are released on demand when a user transaction is admitted that reads a
//! stale or never-computed derived attribute; user transactions arrive from
//! Poisson templates and from scripted arrivals.

mod expr;
mod log;
mod report;
mod rng;
mod workload;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use thiserror::Error;

use crate::controller::{priority_less, Admission, CompletionOutcome, ControllerState, Request, RequestId, StartOutcome};
use crate::model::{RtAttrState, RtScalar, UpdateOutcome};
use crate::schema::{self, AttrKind, ClassSpec, MethodClass, MethodKind, Schema, ValueType};
use crate::time::{DurationMs, TimePoint};

pub use expr::{coerce, Expr, ExprError};
pub use log::{EventLog, LogKind, LogParseError, LogRecord};
pub use report::{ClassReport, KindCounts, MailboxStats, Ratio, SimReport, UpdateCounts};
pub use rng::{NonPositiveRate, SplitMix64};
pub use workload::{
    key_text, split_qualified, FeedSpec, ObjectSpec, ScriptedArrival, UserTemplate, WorkloadError, WorkloadSpec,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("schema is invalid:\n{0}")]
    ValidationFailed(String),
    #[error("inconsistent workload: {0}")]
    InconsistentWorkload(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Check controller invariants after every transition and collect
    /// violations instead of trusting the implementation.
    pub check_invariants: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub report: SimReport,
    pub log: EventLog,
    pub violations: Vec<String>,
}

pub fn run(schema: &Schema, workload: &WorkloadSpec) -> Result<(SimReport, EventLog), EngineError> {
    let out = run_with_options(schema, workload, RunOptions::default())?;
    Ok((out.report, out.log))
}

pub fn run_with_options(schema: &Schema, workload: &WorkloadSpec, opts: RunOptions) -> Result<SimOutcome, EngineError> {
    let mut engine = Engine::new(schema, workload, opts)?;
    engine.run();
    Ok(engine.finish())
}

/// Checks a workload against a schema without running it.
pub fn check_workload(schema: &Schema, workload: &WorkloadSpec) -> Result<(), EngineError> {
    Engine::new(schema, workload, RunOptions::default()).map(drop)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Payload {
    PeriodicRelease { object: usize, method: usize },
    UserArrival { template: usize },
    Scripted { index: usize },
    ExecutionTick { object: usize, request: RequestId, activation: u64 },
    CompletionCheck { object: usize },
}

#[derive(Debug)]
struct Queued {
    time: TimePoint,
    seq: u64,
    payload: Payload,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

#[derive(Debug, Default)]
struct EventQueue {
    heap: BinaryHeap<Queued>,
    next_seq: u64,
}

impl EventQueue {
    fn push(&mut self, time: TimePoint, payload: Payload) {
        self.heap.push(Queued {
            time,
            seq: self.next_seq,
            payload,
        });
        self.next_seq += 1;
    }

    fn peek_time(&self) -> Option<TimePoint> {
        self.heap.peek().map(|q| q.time)
    }

    fn pop(&mut self) -> Option<Queued> {
        self.heap.pop()
    }
}

#[derive(Debug)]
enum FeedState {
    Constant(RtScalar),
    WalkInt { next: i64, max: i64 },
    WalkReal { next: f64, max: f64 },
    Trace { values: Vec<RtScalar>, pos: usize },
}

#[derive(Debug)]
struct Feed {
    state: FeedState,
    rng: SplitMix64,
}

impl Feed {
    fn sample(&mut self) -> RtScalar {
        match &mut self.state {
            FeedState::Constant(v) => v.clone(),
            FeedState::WalkInt { next, max } => {
                let v = *next;
                *next = next.saturating_add(self.rng.range_i64(-*max, *max));
                RtScalar::Int(v)
            }
            FeedState::WalkReal { next, max } => {
                let v = *next;
                *next += self.rng.range_f64(-*max, *max);
                RtScalar::Real(v)
            }
            FeedState::Trace { values, pos } => {
                let v = values[(*pos).min(values.len() - 1)].clone();
                *pos += 1;
                v
            }
        }
    }
}

#[derive(Debug)]
struct Obj {
    key: String,
    class: usize,
    classical: BTreeMap<String, RtScalar>,
    rt: BTreeMap<String, RtAttrState>,
    ctl: ControllerState,
    /// Derived attributes with a recomputation in flight.
    outstanding: BTreeSet<String>,
    feeds: BTreeMap<String, Feed>,
}

#[derive(Debug)]
struct ClassRt {
    exec: Vec<DurationMs>,
    derive: BTreeMap<String, Expr>,
    order: Vec<String>,
}

#[derive(Debug)]
struct Template {
    method: usize,
    rate: f64,
    deadline: DurationMs,
    candidates: Vec<usize>,
    set: BTreeMap<String, RtScalar>,
    rng: SplitMix64,
}

#[derive(Debug)]
struct Scripted {
    at: TimePoint,
    object: usize,
    method: usize,
    deadline: DurationMs,
}

#[derive(Debug)]
struct Meta {
    method: usize,
    candidate: Option<RtScalar>,
    set: BTreeMap<String, RtScalar>,
}

struct Engine {
    schema: Schema,
    opts: RunOptions,
    horizon: TimePoint,
    now: TimePoint,
    queue: EventQueue,
    classes: Vec<ClassRt>,
    objs: Vec<Obj>,
    templates: Vec<Template>,
    scripted: Vec<Scripted>,
    meta: BTreeMap<RequestId, Meta>,
    next_id: RequestId,
    dirty: BTreeSet<usize>,
    log: EventLog,
    report: SimReport,
    fresh: (u64, u64),
    consistent: (u64, u64),
    mailbox_sum: u64,
    violations: Vec<String>,
}

fn bad(msg: impl Into<String>) -> EngineError {
    EngineError::InconsistentWorkload(msg.into())
}

/// `v` converted to the attribute's value type, if it fits.
fn fit(v: &RtScalar, ty: ValueType) -> Option<RtScalar> {
    match (v, ty) {
        (RtScalar::Int(_), ValueType::Int) | (RtScalar::Real(_), ValueType::Real) => Some(v.clone()),
        (RtScalar::Int(i), ValueType::Real) => Some(RtScalar::Real(*i as f64)),
        (RtScalar::Str(s), ValueType::Str(n)) if s.chars().count() <= n as usize => Some(v.clone()),
        _ => None,
    }
}

fn lookup_method<'a>(schema: &'a Schema, qualified: &str) -> Result<(usize, usize, &'a ClassSpec), EngineError> {
    let (c, m) = split_qualified(qualified).ok_or_else(|| bad(format!("`{qualified}` is not of the form Class.Method")))?;
    let ci = schema
        .classes
        .iter()
        .position(|k| k.name == c)
        .ok_or_else(|| bad(format!("unknown class `{c}` in `{qualified}`")))?;
    let cls = &schema.classes[ci];
    let mi = cls
        .methods
        .iter()
        .position(|k| k.name == m)
        .ok_or_else(|| bad(format!("class `{c}` has no method `{m}`")))?;
    Ok((ci, mi, cls))
}

impl Engine {
    fn new(schema: &Schema, w: &WorkloadSpec, opts: RunOptions) -> Result<Engine, EngineError> {
        let diags = schema::validate(schema);
        if schema::has_errors(&diags) {
            let msgs: Vec<String> = diags.iter().map(ToString::to_string).collect();
            return Err(EngineError::ValidationFailed(msgs.join("\n")));
        }

        let mut classes: Vec<ClassRt> = schema
            .classes
            .iter()
            .map(|c| ClassRt {
                exec: vec![DurationMs::ZERO; c.methods.len()],
                derive: BTreeMap::new(),
                order: schema::derivation_order(c).unwrap_or_default(),
            })
            .collect();

        for (name, ms) in &w.exec_times {
            let (ci, mi, _) = lookup_method(schema, name)?;
            if *ms == 0 {
                return Err(bad(format!("execution time of `{name}` must be positive")));
            }
            classes[ci].exec[mi] = DurationMs::from_millis(*ms);
        }

        for (name, text) in &w.derivations {
            let (ci, mi, cls) = lookup_method(schema, name)?;
            let MethodKind::Sporadic { target } = &cls.methods[mi].kind else {
                return Err(bad(format!("`{name}` is not a sporadic method; only those compute derived values")));
            };
            let e = Expr::parse(text).map_err(|e| bad(format!("derivation of `{name}`: {e}")))?;
            classes[ci].derive.insert(target.clone(), e);
        }
        for (ci, cls) in schema.classes.iter().enumerate() {
            for a in &cls.attrs {
                let AttrKind::Derived { inputs, .. } = &a.kind else {
                    continue;
                };
                let types = inputs
                    .iter()
                    .filter_map(|i| cls.attr(i).map(|s| (i.clone(), s.value_type.tag())))
                    .collect();
                let e = classes[ci].derive.entry(a.name.clone()).or_insert_with(|| Expr::sum_of(inputs));
                e.check_for(&types, a.value_type.tag())
                    .map_err(|err| bad(format!("derivation of `{}.{}`: {err}", cls.name, a.name)))?;
            }
        }

        let mut objs = Vec::new();
        let mut keys = BTreeSet::new();
        for o in &w.objects {
            let ci = schema
                .classes
                .iter()
                .position(|c| c.name == o.class)
                .ok_or_else(|| bad(format!("unknown class `{}`", o.class)))?;
            let cls = &schema.classes[ci];
            let key = key_text(&o.key);
            if !keys.insert(key.clone()) {
                return Err(bad(format!("duplicate object key `{key}`")));
            }
            let key_attr = cls.key.as_deref().and_then(|k| cls.attr(k)).expect("validated class has a key");
            let key_val = fit(&o.key, key_attr.value_type)
                .ok_or_else(|| bad(format!("key `{key}` does not fit attribute `{}.{}`", cls.name, key_attr.name)))?;
            for name in o.initial.keys() {
                match cls.attr(name) {
                    None => return Err(bad(format!("object `{key}`: class `{}` has no attribute `{name}`", cls.name))),
                    Some(a) if a.is_derived() => {
                        return Err(bad(format!("object `{key}`: derived attribute `{name}` is computed, not loaded")))
                    }
                    Some(a) if a.name == key_attr.name => {
                        return Err(bad(format!("object `{key}`: the key is given by `key`, not `initial`")))
                    }
                    Some(_) => {}
                }
            }
            let mut classical = BTreeMap::new();
            let mut rt = BTreeMap::new();
            for a in &cls.attrs {
                let value = match o.initial.get(&a.name) {
                    Some(v) => fit(v, a.value_type).ok_or_else(|| {
                        bad(format!("object `{key}`: initial value {v} does not fit `{}`", a.name))
                    })?,
                    None => RtScalar::default_for(a.value_type.tag()),
                };
                match &a.kind {
                    AttrKind::Classical => {
                        let v = if a.name == key_attr.name { key_val.clone() } else { value };
                        classical.insert(a.name.clone(), v);
                    }
                    AttrKind::Sensor { vd, mde } => {
                        rt.insert(a.name.clone(), RtAttrState::sensor(&a.name, value, TimePoint::EPOCH, *vd, *mde));
                    }
                    AttrKind::Derived { vd, inputs, .. } => {
                        rt.insert(a.name.clone(), RtAttrState::derived(&a.name, value, *vd, inputs.clone()));
                    }
                }
            }
            for (mi, m) in cls.methods.iter().enumerate() {
                if classes[ci].exec[mi].is_zero() {
                    return Err(bad(format!("no execution time for `{}.{}`", cls.name, m.name)));
                }
            }
            let mut feeds = BTreeMap::new();
            for a in cls.attrs.iter().filter(|a| a.is_sensor()) {
                let spec = w.sensor_feeds.get(&format!("{}.{}", cls.name, a.name));
                let state = match spec {
                    None => FeedState::Constant(rt[&a.name].cv.clone()),
                    Some(s) => feed_state(s, a.value_type).map_err(|m| bad(format!("feed `{}.{}`: {m}", cls.name, a.name)))?,
                };
                let rng = SplitMix64::stream(w.seed, &format!("feed/{key}/{}", a.name));
                feeds.insert(a.name.clone(), Feed { state, rng });
            }
            objs.push(Obj {
                key,
                class: ci,
                classical,
                rt,
                ctl: ControllerState::new(cls.slot_capacity),
                outstanding: BTreeSet::new(),
                feeds,
            });
        }

        for name in w.sensor_feeds.keys() {
            let (c, a) = split_qualified(name).ok_or_else(|| bad(format!("`{name}` is not of the form Class.Attr")))?;
            let attr = schema
                .class(c)
                .ok_or_else(|| bad(format!("unknown class `{c}` in `{name}`")))?
                .attr(a)
                .ok_or_else(|| bad(format!("class `{c}` has no attribute `{a}`")))?;
            if !attr.is_sensor() {
                return Err(bad(format!("`{name}` is not a sensor attribute")));
            }
            if let Some(spec) = w.sensor_feeds.get(name) {
                feed_state(spec, attr.value_type).map_err(|m| bad(format!("feed `{name}`: {m}")))?;
            }
        }

        let find_obj = |key: &RtScalar, ci: usize| -> Result<usize, EngineError> {
            let k = key_text(key);
            let i = objs
                .iter()
                .position(|o: &Obj| o.key == k)
                .ok_or_else(|| bad(format!("unknown object `{k}`")))?;
            if objs[i].class != ci {
                return Err(bad(format!("object `{k}` is not a `{}`", schema.classes[ci].name)));
            }
            Ok(i)
        };

        let mut templates = Vec::new();
        for (ti, t) in w.user_templates.iter().enumerate() {
            let (ci, mi, cls) = lookup_method(schema, &t.method)?;
            let m = &cls.methods[mi];
            let MethodKind::Aperiodic { writes, .. } = &m.kind else {
                return Err(bad(format!("`{}` is not an aperiodic method; only those are user transactions", t.method)));
            };
            if !(t.rate_per_sec >= 0.0 && t.rate_per_sec.is_finite()) {
                return Err(bad(format!("rate of `{}` must be finite and non-negative", t.method)));
            }
            let candidates = match &t.object {
                Some(k) => vec![find_obj(k, ci)?],
                None => (0..objs.len()).filter(|i| objs[*i].class == ci).collect(),
            };
            if candidates.is_empty() && t.rate_per_sec > 0.0 {
                return Err(bad(format!("no `{}` objects for template `{}`", cls.name, t.method)));
            }
            let mut set = BTreeMap::new();
            for (attr, v) in &t.set {
                if !writes.contains(attr) {
                    return Err(bad(format!("`{}` does not write `{attr}`", t.method)));
                }
                let spec = cls.attr(attr).expect("validated writes exist");
                let v = fit(v, spec.value_type).ok_or_else(|| bad(format!("value {v} does not fit `{attr}`")))?;
                set.insert(attr.clone(), v);
            }
            templates.push(Template {
                method: mi,
                rate: t.rate_per_sec,
                deadline: t.deadline_ms.map_or(m.deadline, DurationMs::from_millis),
                candidates,
                set,
                rng: SplitMix64::stream(w.seed, &format!("template/{ti}")),
            });
        }

        let mut scripted = Vec::new();
        for a in &w.arrivals {
            let (ci, mi, cls) = lookup_method(schema, &a.method)?;
            let m = &cls.methods[mi];
            if m.class() != MethodClass::Aperiodic {
                return Err(bad(format!("`{}` is not an aperiodic method; only those are user transactions", a.method)));
            }
            scripted.push(Scripted {
                at: TimePoint::from_millis(a.at_ms),
                object: find_obj(&a.object, ci)?,
                method: mi,
                deadline: a.deadline_ms.map_or(m.deadline, DurationMs::from_millis),
            });
        }
        scripted.sort_by_key(|s| s.at);

        let mut report = SimReport {
            seed: w.seed,
            duration_ms: w.duration_ms,
            ..Default::default()
        };
        for o in &objs {
            report.per_class.entry(schema.classes[o.class].name.clone()).or_default();
        }

        Ok(Engine {
            schema: schema.clone(),
            opts,
            horizon: TimePoint::from_millis(w.duration_ms),
            now: TimePoint::EPOCH,
            queue: EventQueue::default(),
            classes,
            objs,
            templates,
            scripted,
            meta: BTreeMap::new(),
            next_id: 0,
            dirty: BTreeSet::new(),
            log: EventLog::default(),
            report,
            fresh: (0, 0),
            consistent: (0, 0),
            mailbox_sum: 0,
            violations: Vec::new(),
        })
    }

    fn schedule(&mut self, time: TimePoint, payload: Payload) {
        if time <= self.horizon {
            self.queue.push(time, payload);
        }
    }

    fn run(&mut self) {
        for o in 0..self.objs.len() {
            let cls = &self.schema.classes[self.objs[o].class];
            let periodic: Vec<usize> = (0..cls.methods.len())
                .filter(|m| cls.methods[*m].class() == MethodClass::Periodic)
                .collect();
            for method in periodic {
                self.schedule(TimePoint::EPOCH, Payload::PeriodicRelease { object: o, method });
            }
        }
        for t in 0..self.templates.len() {
            self.schedule_arrival(t);
        }
        for index in 0..self.scripted.len() {
            self.schedule(self.scripted[index].at, Payload::Scripted { index });
        }

        while let Some(time) = self.queue.peek_time() {
            if time > self.horizon {
                break;
            }
            let ev = self.queue.pop().expect("peeked");
            debug_assert!(ev.time >= self.now, "time went backwards");
            self.now = ev.time;
            self.report.event_count += 1;
            self.report.end_time_ms = ev.time.millis();
            self.handle(ev.payload);
            if self.queue.peek_time().is_none_or(|t| t > self.now) {
                for o in std::mem::take(&mut self.dirty) {
                    self.dispatch(o);
                }
            }
        }
    }

    fn schedule_arrival(&mut self, t: usize) {
        let tpl = &mut self.templates[t];
        if tpl.rate <= 0.0 {
            return;
        }
        let gap = tpl.rng.exp_sample(tpl.rate).expect("rate checked positive");
        self.schedule(self.now + gap, Payload::UserArrival { template: t });
    }

    fn handle(&mut self, payload: Payload) {
        match payload {
            Payload::PeriodicRelease { object, method } => {
                let MethodKind::Periodic { target, period } = &self.schema.classes[self.objs[object].class].methods[method].kind
                else {
                    unreachable!("periodic release of a non-periodic method");
                };
                let (target, period) = (target.clone(), *period);
                let candidate = self.objs[object].feeds.get_mut(&target).map(Feed::sample);
                self.submit(object, method, None, candidate, BTreeMap::new());
                self.schedule(self.now + period, Payload::PeriodicRelease { object, method });
            }
            Payload::UserArrival { template } => {
                let tpl = &mut self.templates[template];
                let object = tpl.candidates[tpl.rng.below(tpl.candidates.len() as u64) as usize];
                let (method, deadline, set) = (tpl.method, tpl.deadline, tpl.set.clone());
                self.arrive_user(object, method, deadline, set);
                self.schedule_arrival(template);
            }
            Payload::Scripted { index } => {
                let s = &self.scripted[index];
                let (object, method, deadline) = (s.object, s.method, s.deadline);
                self.arrive_user(object, method, deadline, BTreeMap::new());
            }
            Payload::ExecutionTick {
                object,
                request,
                activation,
            } => {
                if self.objs[object].ctl.is_running(request, activation) {
                    self.complete_request(object, request);
                }
            }
            Payload::CompletionCheck { object } => {
                self.dirty.insert(object);
            }
        }
    }

    fn class_of(&self, o: usize) -> &ClassSpec {
        &self.schema.classes[self.objs[o].class]
    }

    fn count(&mut self, o: usize, kind: MethodClass, f: impl Fn(&mut KindCounts)) {
        let name = &self.schema.classes[self.objs[o].class].name;
        f(self.report.per_class.get_mut(name).expect("class registered").kind_mut(kind));
        f(match kind {
            MethodClass::Periodic => &mut self.report.periodic,
            MethodClass::Sporadic => &mut self.report.sporadic,
            MethodClass::Aperiodic => &mut self.report.aperiodic,
        });
    }

    fn log_req(&mut self, kind: LogKind, r: &Request, detail: String) {
        self.log
            .push(self.now, kind, Some(&r.object), Some(&r.method), Some(r.id), detail);
    }

    /// Releases one request and offers it to the object's mailbox.
    fn submit(
        &mut self,
        o: usize,
        method: usize,
        deadline: Option<DurationMs>,
        candidate: Option<RtScalar>,
        set: BTreeMap<String, RtScalar>,
    ) -> Option<RequestId> {
        let m = &self.class_of(o).methods[method];
        let exec = self.classes[self.objs[o].class].exec[method];
        let req = Request {
            id: self.next_id,
            object: self.objs[o].key.clone(),
            method: m.name.clone(),
            kind: m.class(),
            arrival: self.now,
            abs_deadline: self.now + deadline.unwrap_or(m.deadline),
            exec_total: exec,
            exec_remaining: exec,
        };
        self.next_id += 1;
        self.log_req(
            LogKind::Release,
            &req,
            format!("kind={} deadline={} exec={}", req.kind, req.abs_deadline.millis(), exec.millis()),
        );
        self.count(o, req.kind, |k| k.released += 1);
        let id = req.id;
        let kind = req.kind;
        let abs = req.abs_deadline;
        match self.objs[o].ctl.admit(req.clone(), self.now) {
            Admission::Admitted => {
                self.log_req(LogKind::Admit, &req, String::new());
                self.meta.insert(id, Meta { method, candidate, set });
                self.schedule(abs + DurationMs::from_millis(1), Payload::CompletionCheck { object: o });
                self.dirty.insert(o);
                Some(id)
            }
            Admission::RejectedFirm => {
                self.log_req(LogKind::Reject, &req, format!("reason=firm deadline={}", abs.millis()));
                self.count(o, kind, |k| k.firm_rejected += 1);
                None
            }
        }
    }

    fn arrive_user(&mut self, o: usize, method: usize, deadline: DurationMs, set: BTreeMap<String, RtScalar>) {
        if self.submit(o, method, Some(deadline), None, set).is_none() {
            return;
        }
        let cls = self.class_of(o);
        let MethodKind::Aperiodic { reads, .. } = &cls.methods[method].kind else {
            return;
        };
        let mut stack: Vec<String> = reads.iter().filter(|r| cls.attr(r).is_some_and(|a| a.is_derived())).cloned().collect();
        let mut needed = BTreeSet::new();
        while let Some(a) = stack.pop() {
            if self.needs_recompute(o, &a) && needed.insert(a.clone()) {
                let cls = self.class_of(o);
                stack.extend(
                    cls.attr(&a)
                        .map(|s| s.inputs().to_vec())
                        .unwrap_or_default()
                        .into_iter()
                        .filter(|i| cls.attr(i).is_some_and(|s| s.is_derived())),
                );
            }
        }
        let order = self.classes[self.objs[o].class].order.clone();
        for a in order.iter().filter(|a| needed.contains(*a)) {
            self.trigger_on_demand(o, a);
        }
    }

    fn needs_recompute(&self, o: usize, attr: &str) -> bool {
        self.objs[o].rt.get(attr).is_some_and(|s| !s.has_value() || !s.is_fresh(self.now))
    }

    /// Releases the computer of derived `attr` unless the value is fresh or a
    /// recomputation is already outstanding.
    fn trigger_on_demand(&mut self, o: usize, attr: &str) -> Option<RequestId> {
        if self.objs[o].outstanding.contains(attr) || !self.needs_recompute(o, attr) {
            return None;
        }
        let cls = self.class_of(o);
        let computer = cls.computer_of(attr)?.name.clone();
        let method = cls.methods.iter().position(|m| m.name == computer)?;
        let id = self.submit(o, method, None, None, BTreeMap::new())?;
        self.objs[o].outstanding.insert(attr.to_owned());
        Some(id)
    }

    /// Bookkeeping for a request that left the controller for good.
    fn terminated(&mut self, o: usize, r: &Request) {
        if let Some(meta) = self.meta.remove(&r.id) {
            if let MethodKind::Sporadic { target } = &self.class_of(o).methods[meta.method].kind {
                let target = target.clone();
                self.objs[o].outstanding.remove(&target);
            }
        }
    }

    fn violation(&mut self, msg: String) {
        self.violations.push(format!("t={}: {msg}", self.now.millis()));
    }

    fn find_request(&self, o: usize, id: RequestId) -> Option<Request> {
        let ctl = &self.objs[o].ctl;
        ctl.running()
            .iter()
            .map(|r| &r.req)
            .chain(ctl.mailbox())
            .find(|r| r.id == id)
            .cloned()
    }

    fn dispatch(&mut self, o: usize) {
        let ci = self.objs[o].class;
        // sampled as the controller wakes up, before it drains the mailbox
        let len = self.objs[o].ctl.mailbox_len() as u64;
        self.mailbox_sum += len;
        self.report.mailbox.samples += 1;
        self.report.mailbox.max = self.report.mailbox.max.max(len);
        loop {
            let sel = self.objs[o].ctl.select_next(self.now);
            for r in &sel.lapsed {
                self.log_req(LogKind::Reject, r, format!("reason=lapsed deadline={}", r.abs_deadline.millis()));
                self.count(o, r.kind, |k| k.firm_rejected += 1);
                self.terminated(o, r);
            }
            if let Some(id) = sel.next {
                if self.opts.check_invariants {
                    self.check_selection(o, id);
                }
                let out = self.objs[o]
                    .ctl
                    .try_start(id, &self.schema.classes[ci], self.now)
                    .expect("selected request is startable");
                match out {
                    StartOutcome::Started {
                        request,
                        victims,
                        resumed,
                        activation,
                        finish_at,
                    } => {
                        for v in &victims {
                            if self.opts.check_invariants && !priority_less(&request, v) {
                                self.violation(format!("request {} aborted higher-priority {}", request.id, v.id));
                            }
                            self.log_req(LogKind::Abort, v, format!("by={}", request.id));
                            self.count(o, v.kind, |k| k.aborted += 1);
                            self.terminated(o, v);
                        }
                        if self.opts.check_invariants && request.abs_deadline < self.now {
                            self.violation(format!("request {} started after its deadline", request.id));
                        }
                        let kind = if resumed { LogKind::Resume } else { LogKind::Start };
                        self.log_req(
                            kind,
                            &request,
                            format!("deadline={} finish={}", request.abs_deadline.millis(), finish_at.millis()),
                        );
                        self.schedule(
                            finish_at,
                            Payload::ExecutionTick {
                                object: o,
                                request: request.id,
                                activation,
                            },
                        );
                    }
                    StartOutcome::ConflictAborted { victim, by } => {
                        if self.opts.check_invariants {
                            match self.find_request(o, by) {
                                Some(b) if priority_less(&b, &victim) => {}
                                _ => self.violation(format!("request {} aborted by {by}, which does not outrank it", victim.id)),
                            }
                        }
                        self.log_req(LogKind::Abort, &victim, format!("by={by}"));
                        self.count(o, victim.kind, |k| k.aborted += 1);
                        self.terminated(o, &victim);
                    }
                    StartOutcome::Blocked => break,
                }
                self.check_structure(o);
                continue;
            }
            let urgent = self.objs[o].ctl.urgent_candidate();
            if let Some(s) = urgent.and_then(|u| self.objs[o].ctl.preempt_for(u, self.now)) {
                self.log_req(
                    LogKind::Suspend,
                    &s,
                    format!("for={} remaining={}", urgent.expect("suspension has a cause"), s.exec_remaining.millis()),
                );
                self.report.suspensions += 1;
                self.check_structure(o);
                continue;
            }
            break;
        }
    }

    fn check_selection(&mut self, o: usize, id: RequestId) {
        let ctl = &self.objs[o].ctl;
        let Some(sel) = ctl.mailbox().find(|r| r.id == id).cloned() else {
            self.violation(format!("selected request {id} is not in the mailbox"));
            return;
        };
        let better: Vec<RequestId> = ctl
            .mailbox()
            .filter(|r| ctl.is_slot_eligible(r) && r.priority_key() < sel.priority_key())
            .map(|r| r.id)
            .collect();
        if !better.is_empty() {
            self.violation(format!("selected {id} although {better:?} have earlier deadlines"));
        }
        if sel.abs_deadline < self.now {
            self.violation(format!("selected lapsed request {id}"));
        }
    }

    fn check_structure(&mut self, o: usize) {
        if self.opts.check_invariants {
            if let Err(e) = self.objs[o].ctl.check_invariants() {
                self.violation(format!("object {}: {e}", self.objs[o].key));
            }
        }
    }

    fn complete_request(&mut self, o: usize, id: RequestId) {
        let (req, outcome) = self.objs[o].ctl.complete(id, self.now).expect("tick names a running request");
        match outcome {
            CompletionOutcome::Committed => {
                if self.opts.check_invariants && self.now > req.abs_deadline {
                    self.violation(format!("request {id} committed after its deadline"));
                }
                self.log_req(LogKind::Commit, &req, String::new());
                self.count(o, req.kind, |k| k.committed += 1);
                self.apply_writes(o, &req);
            }
            CompletionOutcome::ObsoleteWrite => {
                self.log_req(LogKind::Obsolete, &req, format!("deadline={}", req.abs_deadline.millis()));
                self.count(o, req.kind, |k| k.obsolete += 1);
            }
            CompletionOutcome::MissedDeadline => {
                self.log_req(LogKind::Missed, &req, format!("deadline={}", req.abs_deadline.millis()));
                self.count(o, req.kind, |k| k.missed += 1);
            }
        }
        self.terminated(o, &req);
        self.check_structure(o);
        self.dirty.insert(o);
    }

    fn apply_writes(&mut self, o: usize, req: &Request) {
        let Some(meta) = self.meta.get(&req.id) else {
            return;
        };
        let ci = self.objs[o].class;
        let now = self.now;
        match self.schema.classes[ci].methods[meta.method].kind.clone() {
            MethodKind::Periodic { target, .. } => {
                let cand = meta.candidate.clone().expect("periodic release samples its feed");
                let st = self.objs[o].rt.get_mut(&target).expect("sensor state");
                let de = st.data_error(&cand).unwrap_or(f64::INFINITY);
                let outcome = st.apply_update(cand.clone(), now).expect("feed value fits sensor");
                let word = match outcome {
                    UpdateOutcome::Applied => {
                        self.report.sensor_updates.applied += 1;
                        self.class_report(o).sensor_updates.applied += 1;
                        "applied"
                    }
                    UpdateOutcome::Discarded => {
                        self.report.sensor_updates.discarded += 1;
                        self.class_report(o).sensor_updates.discarded += 1;
                        "discarded"
                    }
                };
                self.log_req(LogKind::Update, req, format!("attr={target} outcome={word} de={de} value={cand}"));
            }
            MethodKind::Sporadic { target } => {
                let obj = &self.objs[o];
                let declared = self.schema.classes[ci].attr(&target).map(|a| a.inputs()).unwrap_or_default();
                let inputs: Vec<(String, RtAttrState)> = declared.iter().map(|n| (n.clone(), obj.rt[n].clone())).collect();
                let env: BTreeMap<&str, &RtScalar> = inputs.iter().map(|(n, s)| (n.as_str(), &s.cv)).collect();
                let expr = &self.classes[ci].derive[&target];
                let tag = obj.rt[&target].cv.tag();
                let value = coerce(expr.eval(&env).expect("derivation type-checked at load"), tag);
                let pairs: Vec<(&str, &RtAttrState)> = inputs.iter().map(|(n, s)| (n.as_str(), s)).collect();
                let st = self.objs[o].rt.get_mut(&target).expect("derived state");
                st.apply_derivation(value.clone(), &pairs, now).expect("inputs match declaration");
                let spread = st.input_spread().map(|d| d.millis()).unwrap_or(0);
                self.log_req(LogKind::Derive, req, format!("attr={target} spread={spread} value={value}"));
            }
            MethodKind::Aperiodic { reads, writes } => {
                let set = meta.set.clone();
                for attr in &reads {
                    let cls = &self.schema.classes[ci];
                    let Some(st) = self.objs[o].rt.get(attr) else {
                        continue;
                    };
                    let fresh = st.has_value() && st.is_fresh(now);
                    let ts = if st.has_value() { st.ts.millis().to_string() } else { "none".into() };
                    let mut detail = format!("attr={attr} ts={ts} vd={}", st.vd.millis());
                    let mut rc = None;
                    if let Some(rvi) = cls.effective_rvi(attr) {
                        let ok = st.is_relatively_consistent(rvi).unwrap_or(false);
                        let spread = st.input_spread().map_or_else(|_| "none".to_owned(), |d| d.millis().to_string());
                        detail.push_str(&format!(" spread={spread} rvi={}", rvi.millis()));
                        rc = Some(ok);
                    }
                    detail.push_str(&format!(" value={}", st.cv));
                    self.fresh.0 += 1;
                    self.fresh.1 += u64::from(fresh);
                    if let Some(ok) = rc {
                        self.consistent.0 += 1;
                        self.consistent.1 += u64::from(ok);
                    }
                    self.log_req(LogKind::Read, req, detail);
                }
                for attr in &writes {
                    let obj = &mut self.objs[o];
                    let Some(cur) = obj.classical.get_mut(attr) else {
                        continue;
                    };
                    if let Some(v) = set.get(attr) {
                        *cur = v.clone();
                    }
                    let v = cur.clone();
                    self.log_req(LogKind::Write, req, format!("attr={attr} value={v}"));
                }
            }
        }
    }

    fn class_report(&mut self, o: usize) -> &mut ClassReport {
        let name = &self.schema.classes[self.objs[o].class].name;
        self.report.per_class.get_mut(name).expect("class registered")
    }

    fn finish_report(&mut self) {
        for o in 0..self.objs.len() {
            let kinds: Vec<MethodClass> = self.objs[o]
                .ctl
                .mailbox()
                .chain(self.objs[o].ctl.running().iter().map(|r| &r.req))
                .map(|r| r.kind)
                .collect();
            for kind in kinds {
                self.count(o, kind, |k| k.pending += 1);
            }
        }
        self.report.freshness = Ratio::new(self.fresh.0, self.fresh.1);
        self.report.relative_consistency = Ratio::new(self.consistent.0, self.consistent.1);
        let m = &mut self.report.mailbox;
        m.mean = if m.samples == 0 { 0.0 } else { self.mailbox_sum as f64 / m.samples as f64 };
        let t = self.report.totals();
        let resolved = t.released - t.pending;
        self.report.deadline_miss_ratio = if resolved == 0 {
            0.0
        } else {
            (resolved - t.committed) as f64 / resolved as f64
        };
    }

    fn finish(mut self) -> SimOutcome {
        self.finish_report();
        SimOutcome {
            report: self.report,
            log: self.log,
            violations: self.violations,
        }
    }
}

fn feed_state(spec: &FeedSpec, ty: ValueType) -> Result<FeedState, String> {
    let fits = |v: &RtScalar| fit(v, ty).ok_or_else(|| format!("value {v} does not fit the attribute type"));
    Ok(match spec {
        FeedSpec::Constant { value } => FeedState::Constant(fits(value)?),
        FeedSpec::Trace { values } => {
            if values.is_empty() {
                return Err("trace is empty".into());
            }
            FeedState::Trace {
                values: values.iter().map(fits).collect::<Result<_, _>>()?,
                pos: 0,
            }
        }
        FeedSpec::RandomWalk { start, max_step } => {
            if !(start.is_finite() && max_step.is_finite() && *max_step >= 0.0) {
                return Err("random walk needs a finite start and a finite, non-negative max_step".into());
            }
            match ty {
                ValueType::Real => FeedState::WalkReal {
                    next: *start,
                    max: *max_step,
                },
                ValueType::Int => {
                    if start.fract() != 0.0 || max_step.fract() != 0.0 || start.abs() > 9.0e15 || *max_step > 9.0e15 {
                        return Err("random walk on an integer attribute needs integral start and max_step".into());
                    }
                    FeedState::WalkInt {
                        next: *start as i64,
                        max: *max_step as i64,
                    }
                }
                ValueType::Str(_) => return Err("random walk on a string attribute".into()),
            }
        }
    })
}

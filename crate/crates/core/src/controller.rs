//! Per-object local controller.
//!
//! Each real-time object owns a mailbox of deadline-tagged requests, a fixed
//! number of execution slots and an attribute-level lock table. The
//! controller admits requests (firm deadlines: a lapsed request is rejected,
//! never run), picks the next one by earliest deadline, resolves lock
//! conflicts by aborting the lower-priority party and may suspend a running
//! request to make room for one that cannot wait.
//!
//! A periodic service keeps its slot between activations: the first
//! activation reserves a slot for the method and later activations reuse it.
//!
//! The controller is a plain state machine; the engine drives it and decides
//! when time advances.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::schema::{ClassSpec, LockMode, MethodClass};
use crate::time::{DurationMs, TimePoint};

pub type RequestId = u64;

/// One method invocation waiting for, or holding, an execution slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Request {
    pub id: RequestId,
    pub object: String,
    pub method: String,
    pub kind: MethodClass,
    pub arrival: TimePoint,
    pub abs_deadline: TimePoint,
    pub exec_total: DurationMs,
    pub exec_remaining: DurationMs,
}

impl Request {
    /// EDF key: deadline, then arrival, then id.
    pub fn priority_key(&self) -> (TimePoint, TimePoint, RequestId) {
        (self.abs_deadline, self.arrival, self.id)
    }
}

/// True when `a` has strictly higher priority than `b`.
pub fn priority_less(a: &Request, b: &Request) -> bool {
    a.priority_key() < b.priority_key()
}

pub type LockSet = BTreeMap<String, LockMode>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ControllerError {
    #[error("request {0} is not waiting in the mailbox")]
    NotPending(RequestId),
    #[error("request {0} is not running")]
    NotRunning(RequestId),
    #[error("no execution slot available for request {0}")]
    NoSlot(RequestId),
    #[error("class `{class}` has no method `{method}`")]
    UnknownMethod { class: String, method: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admission {
    Admitted,
    RejectedFirm,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    pub next: Option<RequestId>,
    /// Requests dropped because their deadline passed while they waited.
    pub lapsed: Vec<Request>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StartOutcome {
    Started {
        request: Request,
        /// Lower-priority lock holders aborted to let the request in.
        victims: Vec<Request>,
        resumed: bool,
        activation: u64,
        finish_at: TimePoint,
    },
    /// The request conflicted with a higher-priority holder and was aborted.
    ConflictAborted { victim: Request, by: RequestId },
    /// Its periodic service slot is busy with a previous activation.
    Blocked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompletionOutcome {
    Committed,
    ObsoleteWrite,
    MissedDeadline,
}

#[derive(Debug, Clone)]
struct Pending {
    req: Request,
    /// Locks kept by a suspended request.
    held: Option<LockSet>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Running {
    pub req: Request,
    pub locks: LockSet,
    pub started_at: TimePoint,
    pub activation: u64,
}

impl Running {
    pub fn remaining_at(&self, now: TimePoint) -> DurationMs {
        self.req.exec_remaining.saturating_sub(now - self.started_at)
    }

    pub fn finish_at(&self) -> TimePoint {
        self.started_at + self.req.exec_remaining
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LockEntry {
    pub readers: BTreeSet<RequestId>,
    pub writer: Option<RequestId>,
}

#[derive(Debug, Clone)]
pub struct ControllerState {
    capacity: u32,
    mailbox: Vec<Pending>,
    running: Vec<Running>,
    slots_free: u32,
    /// Periodic method -> activation currently using its slot (`None` = idle).
    reservations: BTreeMap<String, Option<RequestId>>,
    lock_table: BTreeMap<String, LockEntry>,
    next_activation: u64,
}

impl ControllerState {
    pub fn new(capacity: u32) -> Self {
        Self {
            capacity,
            mailbox: Vec::new(),
            running: Vec::new(),
            slots_free: capacity,
            reservations: BTreeMap::new(),
            lock_table: BTreeMap::new(),
            next_activation: 0,
        }
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn slots_free(&self) -> u32 {
        self.slots_free
    }

    pub fn mailbox(&self) -> impl Iterator<Item = &Request> {
        self.mailbox.iter().map(|p| &p.req)
    }

    pub fn mailbox_len(&self) -> usize {
        self.mailbox.len()
    }

    pub fn is_suspended(&self, id: RequestId) -> bool {
        self.mailbox.iter().any(|p| p.req.id == id && p.held.is_some())
    }

    pub fn running(&self) -> &[Running] {
        &self.running
    }

    pub fn reservations(&self) -> &BTreeMap<String, Option<RequestId>> {
        &self.reservations
    }

    pub fn lock_table(&self) -> &BTreeMap<String, LockEntry> {
        &self.lock_table
    }

    pub fn is_running(&self, id: RequestId, activation: u64) -> bool {
        self.running.iter().any(|r| r.req.id == id && r.activation == activation)
    }

    /// Whether `req` could take a slot right now.
    pub fn is_slot_eligible(&self, req: &Request) -> bool {
        match (req.kind, self.reservations.get(&req.method)) {
            (MethodClass::Periodic, Some(holder)) => holder.is_none(),
            _ => self.slots_free > 0,
        }
    }

    /// Firm admission: a request whose deadline already passed never enters
    /// the mailbox.
    pub fn admit(&mut self, req: Request, now: TimePoint) -> Admission {
        if now > req.abs_deadline {
            return Admission::RejectedFirm;
        }
        self.mailbox.push(Pending { req, held: None });
        Admission::Admitted
    }

    /// Drops lapsed requests, then returns the highest-priority request that
    /// can get a slot. The request stays in the mailbox.
    pub fn select_next(&mut self, now: TimePoint) -> Selection {
        let mut lapsed = Vec::new();
        let mut i = 0;
        while i < self.mailbox.len() {
            if self.mailbox[i].req.abs_deadline < now {
                let p = self.mailbox.remove(i);
                if let Some(held) = &p.held {
                    self.release_locks(p.req.id, held);
                }
                lapsed.push(p.req);
            } else {
                i += 1;
            }
        }
        let next = self
            .mailbox
            .iter()
            .map(|p| &p.req)
            .filter(|r| self.is_slot_eligible(r))
            .min_by_key(|r| r.priority_key())
            .map(|r| r.id);
        Selection { next, lapsed }
    }

    /// Highest-priority waiting request that needs a general slot; the
    /// candidate for [`ControllerState::preempt_for`].
    pub fn urgent_candidate(&self) -> Option<RequestId> {
        self.mailbox
            .iter()
            .map(|p| &p.req)
            .filter(|r| !(r.kind == MethodClass::Periodic && matches!(self.reservations.get(&r.method), Some(Some(_)))))
            .min_by_key(|r| r.priority_key())
            .map(|r| r.id)
    }

    fn holder(&self, id: RequestId) -> Option<&Request> {
        self.running
            .iter()
            .map(|r| &r.req)
            .chain(self.mailbox.iter().filter(|p| p.held.is_some()).map(|p| &p.req))
            .find(|r| r.id == id)
    }

    fn conflicts(&self, id: RequestId, locks: &LockSet) -> BTreeSet<RequestId> {
        let mut out = BTreeSet::new();
        for (attr, mode) in locks {
            let Some(entry) = self.lock_table.get(attr) else {
                continue;
            };
            if let Some(w) = entry.writer {
                if w != id {
                    out.insert(w);
                }
            }
            if *mode == LockMode::Write {
                out.extend(entry.readers.iter().copied().filter(|r| *r != id));
            }
        }
        out
    }

    fn acquire_locks(&mut self, id: RequestId, locks: &LockSet) {
        for (attr, mode) in locks {
            let entry = self.lock_table.entry(attr.clone()).or_default();
            match mode {
                LockMode::Read => {
                    entry.readers.insert(id);
                }
                LockMode::Write => entry.writer = Some(id),
            }
        }
    }

    fn release_locks(&mut self, id: RequestId, locks: &LockSet) {
        for attr in locks.keys() {
            if let Some(entry) = self.lock_table.get_mut(attr) {
                entry.readers.remove(&id);
                if entry.writer == Some(id) {
                    entry.writer = None;
                }
                if entry.readers.is_empty() && entry.writer.is_none() {
                    self.lock_table.remove(attr);
                }
            }
        }
    }

    /// Gives back the slot of a request leaving the running set. A periodic
    /// service keeps its reservation unless `drop_reservation` is set.
    fn release_slot(&mut self, req: &Request, drop_reservation: bool) {
        if req.kind == MethodClass::Periodic {
            if let Some(holder) = self.reservations.get_mut(&req.method) {
                if *holder == Some(req.id) {
                    if drop_reservation {
                        self.reservations.remove(&req.method);
                        self.slots_free += 1;
                    } else {
                        *holder = None;
                    }
                    return;
                }
            }
        }
        self.slots_free += 1;
    }

    /// Removes a lock holder (running or suspended) as a conflict victim.
    fn abort_holder(&mut self, id: RequestId) -> Option<Request> {
        if let Some(i) = self.running.iter().position(|r| r.req.id == id) {
            let r = self.running.remove(i);
            self.release_locks(id, &r.locks);
            self.release_slot(&r.req, false);
            return Some(r.req);
        }
        let i = self.mailbox.iter().position(|p| p.req.id == id && p.held.is_some())?;
        let p = self.mailbox.remove(i);
        if let Some(held) = &p.held {
            self.release_locks(id, held);
        }
        Some(p.req)
    }

    /// Tries to move request `id` from the mailbox to the running set.
    pub fn try_start(&mut self, id: RequestId, cls: &ClassSpec, now: TimePoint) -> Result<StartOutcome, ControllerError> {
        let idx = self
            .mailbox
            .iter()
            .position(|p| p.req.id == id)
            .ok_or(ControllerError::NotPending(id))?;
        let req = self.mailbox[idx].req.clone();
        let method = cls.method(&req.method).ok_or_else(|| ControllerError::UnknownMethod {
            class: cls.name.clone(),
            method: req.method.clone(),
        })?;

        if req.kind == MethodClass::Periodic {
            if let Some(Some(_)) = self.reservations.get(&req.method) {
                return Ok(StartOutcome::Blocked);
            }
        }
        if !self.is_slot_eligible(&req) {
            return Err(ControllerError::NoSlot(id));
        }

        let resumed = self.mailbox[idx].held.is_some();
        let locks = match &self.mailbox[idx].held {
            Some(held) => held.clone(),
            None => method.lock_set(cls),
        };
        let conflicting = self.conflicts(id, &locks);
        let stronger = conflicting
            .iter()
            .filter_map(|h| self.holder(*h))
            .filter(|h| priority_less(h, &req))
            .min_by_key(|h| h.priority_key())
            .map(|h| h.id);
        if let Some(by) = stronger {
            let p = self.mailbox.remove(idx);
            if let Some(held) = &p.held {
                self.release_locks(id, held);
            }
            return Ok(StartOutcome::ConflictAborted { victim: p.req, by });
        }

        let victims: Vec<Request> = conflicting.into_iter().filter_map(|h| self.abort_holder(h)).collect();

        // victims may have shifted the mailbox
        let idx = self.mailbox.iter().position(|p| p.req.id == id).expect("still pending");
        let p = self.mailbox.remove(idx);
        if p.held.is_none() {
            self.acquire_locks(id, &locks);
        }
        match (req.kind, self.reservations.get_mut(&req.method)) {
            (MethodClass::Periodic, Some(holder)) => *holder = Some(id),
            (MethodClass::Periodic, None) => {
                self.slots_free -= 1;
                self.reservations.insert(req.method.clone(), Some(id));
            }
            _ => self.slots_free -= 1,
        }
        let activation = self.next_activation;
        self.next_activation += 1;
        let running = Running {
            req: p.req,
            locks,
            started_at: now,
            activation,
        };
        let finish_at = running.finish_at();
        let request = running.req.clone();
        self.running.push(running);
        Ok(StartOutcome::Started {
            request,
            victims,
            resumed,
            activation,
            finish_at,
        })
    }

    /// Suspends the lowest-priority running request when `urgent` cannot
    /// wait for the earliest running request to finish but can still meet
    /// its deadline if started now. The suspended request keeps its locks
    /// and remaining execution time and goes back to the mailbox.
    pub fn preempt_for(&mut self, urgent: RequestId, now: TimePoint) -> Option<Request> {
        let u = self.mailbox.iter().find(|p| p.req.id == urgent)?.req.clone();
        if u.abs_deadline < now {
            return None;
        }
        let min_remaining = self.running.iter().map(|r| r.remaining_at(now)).min()?;
        let starts_now = now + u.exec_remaining;
        let cannot_wait = starts_now + min_remaining > u.abs_deadline && starts_now <= u.abs_deadline;
        if !cannot_wait {
            return None;
        }
        let victim_idx = self
            .running
            .iter()
            .enumerate()
            .max_by_key(|(_, r)| r.req.priority_key())
            .map(|(i, _)| i)?;
        if !priority_less(&u, &self.running[victim_idx].req) {
            return None;
        }
        let mut r = self.running.remove(victim_idx);
        r.req.exec_remaining = r.remaining_at(now);
        self.release_slot(&r.req, true);
        let suspended = r.req.clone();
        self.mailbox.push(Pending {
            req: r.req,
            held: Some(r.locks),
        });
        Some(suspended)
    }

    /// Finishes a running request: releases its locks and slot (periodic
    /// services keep theirs) and decides whether its writes may commit.
    pub fn complete(&mut self, id: RequestId, now: TimePoint) -> Result<(Request, CompletionOutcome), ControllerError> {
        let i = self
            .running
            .iter()
            .position(|r| r.req.id == id)
            .ok_or(ControllerError::NotRunning(id))?;
        let r = self.running.remove(i);
        self.release_locks(id, &r.locks);
        self.release_slot(&r.req, false);
        let mut req = r.req;
        req.exec_remaining = DurationMs::ZERO;
        let outcome = if now <= req.abs_deadline {
            CompletionOutcome::Committed
        } else if req.kind == MethodClass::Aperiodic {
            CompletionOutcome::MissedDeadline
        } else {
            CompletionOutcome::ObsoleteWrite
        };
        Ok((req, outcome))
    }

    /// Structural invariants: lock exclusion, lock table consistency and
    /// slot accounting.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (attr, e) in &self.lock_table {
            if e.writer.is_some() && !e.readers.is_empty() {
                return Err(format!("`{attr}` has writer {:?} and readers {:?}", e.writer, e.readers));
            }
        }
        let mut expected: BTreeMap<String, LockEntry> = BTreeMap::new();
        let holders = self
            .running
            .iter()
            .map(|r| (r.req.id, &r.locks))
            .chain(self.mailbox.iter().filter_map(|p| p.held.as_ref().map(|h| (p.req.id, h))));
        for (id, locks) in holders {
            for (attr, mode) in locks {
                let e = expected.entry(attr.clone()).or_default();
                match mode {
                    LockMode::Read => {
                        e.readers.insert(id);
                    }
                    LockMode::Write => {
                        if let Some(w) = e.writer {
                            return Err(format!("`{attr}` written by both {w} and {id}"));
                        }
                        e.writer = Some(id);
                    }
                }
            }
        }
        if expected != self.lock_table {
            return Err(format!("lock table {:?} does not match holders {:?}", self.lock_table, expected));
        }

        let running_general = self.running.iter().filter(|r| r.req.kind != MethodClass::Periodic).count();
        let total = self.slots_free as usize + running_general + self.reservations.len();
        if total != self.capacity as usize {
            return Err(format!(
                "slot accounting: free {} + running {} + reserved {} != capacity {}",
                self.slots_free,
                running_general,
                self.reservations.len(),
                self.capacity
            ));
        }
        for (method, holder) in &self.reservations {
            if let Some(id) = holder {
                if !self.running.iter().any(|r| r.req.id == *id && &r.req.method == method) {
                    return Err(format!("reservation of `{method}` names {id}, which is not running"));
                }
            }
        }
        for r in &self.running {
            if r.req.kind == MethodClass::Periodic && self.reservations.get(&r.req.method) != Some(&Some(r.req.id)) {
                return Err(format!("running periodic {} holds no reservation", r.req.id));
            }
        }
        Ok(())
    }
}

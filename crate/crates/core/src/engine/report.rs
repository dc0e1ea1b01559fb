use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::schema::MethodClass;

/// Outcome counters for one transaction kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindCounts {
    pub released: u64,
    pub committed: u64,
    pub firm_rejected: u64,
    pub aborted: u64,
    pub obsolete: u64,
    pub missed: u64,
    pub pending: u64,
}

impl KindCounts {
    /// released = committed + firm_rejected + aborted + obsolete + missed + pending
    pub fn balanced(&self) -> bool {
        self.released == self.committed + self.firm_rejected + self.aborted + self.obsolete + self.missed + self.pending
    }

    fn add(&mut self, o: &KindCounts) {
        self.released += o.released;
        self.committed += o.committed;
        self.firm_rejected += o.firm_rejected;
        self.aborted += o.aborted;
        self.obsolete += o.obsolete;
        self.missed += o.missed;
        self.pending += o.pending;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateCounts {
    pub applied: u64,
    pub discarded: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub total: u64,
    pub hits: u64,
    /// hits / total; 1.0 when nothing was measured.
    pub ratio: f64,
}

impl Ratio {
    pub fn new(total: u64, hits: u64) -> Self {
        let ratio = if total == 0 { 1.0 } else { hits as f64 / total as f64 };
        Self { total, hits, ratio }
    }
}

impl Default for Ratio {
    fn default() -> Self {
        Ratio::new(0, 0)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MailboxStats {
    pub mean: f64,
    pub max: u64,
    pub samples: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub periodic: KindCounts,
    pub sporadic: KindCounts,
    pub aperiodic: KindCounts,
    pub sensor_updates: UpdateCounts,
}

impl ClassReport {
    pub fn kind_mut(&mut self, kind: MethodClass) -> &mut KindCounts {
        match kind {
            MethodClass::Periodic => &mut self.periodic,
            MethodClass::Sporadic => &mut self.sporadic,
            MethodClass::Aperiodic => &mut self.aperiodic,
        }
    }
}

/// Metrics of one simulation run. Serialized field names are stable.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub seed: u64,
    /// SHA-256 of schema text and workload text, filled in by the CLI.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
    pub duration_ms: u64,
    pub end_time_ms: u64,
    pub event_count: u64,
    pub periodic: KindCounts,
    pub sporadic: KindCounts,
    pub aperiodic: KindCounts,
    pub sensor_updates: UpdateCounts,
    pub suspensions: u64,
    /// Reads of real-time attributes by committed user transactions that saw
    /// a fresh value.
    pub freshness: Ratio,
    /// Reads of derived attributes whose inputs were within the relative
    /// validity interval at their last computation.
    pub relative_consistency: Ratio,
    /// Fraction of released transactions that did not commit in time.
    pub deadline_miss_ratio: f64,
    pub mailbox: MailboxStats,
    pub per_class: BTreeMap<String, ClassReport>,
}

impl SimReport {
    pub fn totals(&self) -> KindCounts {
        let mut t = KindCounts::default();
        for k in [&self.periodic, &self.sporadic, &self.aperiodic] {
            t.add(k);
        }
        t
    }

    /// Count identities every run must satisfy.
    pub fn check_identities(&self) -> Result<(), String> {
        for (name, k) in [("periodic", &self.periodic), ("sporadic", &self.sporadic), ("aperiodic", &self.aperiodic)] {
            if !k.balanced() {
                return Err(format!("{name} counts do not balance: {k:?}"));
            }
        }
        let mut by_class = ClassReport::default();
        for (class, c) in &self.per_class {
            if ![&c.periodic, &c.sporadic, &c.aperiodic].iter().all(|k| k.balanced()) {
                return Err(format!("counts of class `{class}` do not balance"));
            }
            by_class.periodic.add(&c.periodic);
            by_class.sporadic.add(&c.sporadic);
            by_class.aperiodic.add(&c.aperiodic);
            by_class.sensor_updates.applied += c.sensor_updates.applied;
            by_class.sensor_updates.discarded += c.sensor_updates.discarded;
        }
        if (by_class.periodic, by_class.sporadic, by_class.aperiodic, by_class.sensor_updates)
            != (self.periodic, self.sporadic, self.aperiodic, self.sensor_updates)
        {
            return Err("per-class counts do not add up to the totals".into());
        }
        if self.sensor_updates.applied + self.sensor_updates.discarded != self.periodic.committed {
            return Err("every committed periodic update is either applied or discarded".into());
        }
        for (name, r) in [("freshness", &self.freshness), ("relative consistency", &self.relative_consistency)] {
            if r.hits > r.total || !(0.0..=1.0).contains(&r.ratio) {
                return Err(format!("{name} ratio out of range: {r:?}"));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut o = String::new();
        writeln!(o, "seed                 {}", self.seed).unwrap();
        if let Some(d) = &self.digest {
            writeln!(o, "digest               {d}").unwrap();
        }
        writeln!(o, "duration_ms          {}", self.duration_ms).unwrap();
        writeln!(o, "end_time_ms          {}", self.end_time_ms).unwrap();
        writeln!(o, "events               {}", self.event_count).unwrap();
        writeln!(o).unwrap();
        writeln!(o, "kind        released committed rejected aborted obsolete missed pending").unwrap();
        for (name, k) in [("periodic", &self.periodic), ("sporadic", &self.sporadic), ("aperiodic", &self.aperiodic)] {
            writeln!(
                o,
                "{name:<11} {:>8} {:>9} {:>8} {:>7} {:>8} {:>6} {:>7}",
                k.released, k.committed, k.firm_rejected, k.aborted, k.obsolete, k.missed, k.pending
            )
            .unwrap();
        }
        writeln!(o).unwrap();
        writeln!(
            o,
            "sensor updates       applied {} discarded {}",
            self.sensor_updates.applied, self.sensor_updates.discarded
        )
        .unwrap();
        writeln!(o, "suspensions          {}", self.suspensions).unwrap();
        writeln!(
            o,
            "freshness            {:.4} ({}/{})",
            self.freshness.ratio, self.freshness.hits, self.freshness.total
        )
        .unwrap();
        writeln!(
            o,
            "relative consistency {:.4} ({}/{})",
            self.relative_consistency.ratio, self.relative_consistency.hits, self.relative_consistency.total
        )
        .unwrap();
        writeln!(o, "deadline miss ratio  {:.4}", self.deadline_miss_ratio).unwrap();
        writeln!(o, "mailbox length       mean {:.3} max {}", self.mailbox.mean, self.mailbox.max).unwrap();
        o
    }
}

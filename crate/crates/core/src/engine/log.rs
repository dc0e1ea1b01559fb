//! Event log: one tab-separated line per controller or data transition.
//!
//! ```text
//! time_ms  seq  kind  object  method  request_id  detail
//! ```
//!
//! Empty fields are written as `-`. `detail` is a space-separated list of
//! `key=value` pairs; when a `value=` pair is present it comes last and runs
//! to the end of the line.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::controller::RequestId;
use crate::time::TimePoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LogKind {
    Release,
    Admit,
    Reject,
    Start,
    Resume,
    Suspend,
    Abort,
    Commit,
    Obsolete,
    Missed,
    Update,
    Derive,
    Read,
    Write,
}

const KINDS: [(LogKind, &str); 14] = [
    (LogKind::Release, "release"),
    (LogKind::Admit, "admit"),
    (LogKind::Reject, "reject"),
    (LogKind::Start, "start"),
    (LogKind::Resume, "resume"),
    (LogKind::Suspend, "suspend"),
    (LogKind::Abort, "abort"),
    (LogKind::Commit, "commit"),
    (LogKind::Obsolete, "obsolete"),
    (LogKind::Missed, "missed"),
    (LogKind::Update, "update"),
    (LogKind::Derive, "derive"),
    (LogKind::Read, "read"),
    (LogKind::Write, "write"),
];

impl LogKind {
    pub fn as_str(self) -> &'static str {
        KINDS.iter().find(|(k, _)| *k == self).map(|(_, s)| *s).unwrap_or("?")
    }
}

impl fmt::Display for LogKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct LogParseError {
    pub line: usize,
    pub message: String,
}

impl FromStr for LogKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        KINDS
            .iter()
            .find(|(_, n)| *n == s)
            .map(|(k, _)| *k)
            .ok_or_else(|| format!("unknown record kind `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogRecord {
    pub time: TimePoint,
    pub seq: u64,
    pub kind: LogKind,
    pub object: Option<String>,
    pub method: Option<String>,
    pub request: Option<RequestId>,
    pub detail: String,
}

impl LogRecord {
    /// Value of `key=` in the detail field.
    pub fn field(&self, key: &str) -> Option<&str> {
        let mut rest = self.detail.as_str();
        while !rest.is_empty() {
            let (tok, tail) = rest.split_once(' ').unwrap_or((rest, ""));
            if let Some((k, v)) = tok.split_once('=') {
                if k == "value" {
                    // runs to the end of the line
                    let v = &rest[k.len() + 1..];
                    return (key == "value").then_some(v);
                }
                if k == key {
                    return Some(v);
                }
            }
            rest = tail;
        }
        None
    }
}

impl fmt::Display for LogRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dash = |s: &Option<String>| s.clone().unwrap_or_else(|| "-".into());
        let req = self.request.map_or_else(|| "-".to_owned(), |r| r.to_string());
        let detail = if self.detail.is_empty() { "-" } else { &self.detail };
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.time.millis(),
            self.seq,
            self.kind,
            dash(&self.object),
            dash(&self.method),
            req,
            detail
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventLog {
    pub records: Vec<LogRecord>,
}

impl EventLog {
    pub fn push(
        &mut self,
        time: TimePoint,
        kind: LogKind,
        object: Option<&str>,
        method: Option<&str>,
        request: Option<RequestId>,
        detail: String,
    ) {
        let seq = self.records.len() as u64;
        self.records.push(LogRecord {
            time,
            seq,
            kind,
            object: object.map(str::to_owned),
            method: method.map(str::to_owned),
            request,
            detail,
        });
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn of_kind(&self, kind: LogKind) -> impl Iterator<Item = &LogRecord> {
        self.records.iter().filter(move |r| r.kind == kind)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<EventLog, LogParseError> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let err = |message: String| LogParseError { line: i + 1, message };
            let cols: Vec<&str> = line.splitn(7, '\t').collect();
            if cols.len() != 7 {
                return Err(err(format!("expected 7 tab-separated fields, found {}", cols.len())));
            }
            let opt = |s: &str| (s != "-").then(|| s.to_owned());
            records.push(LogRecord {
                time: TimePoint::from_millis(cols[0].parse().map_err(|e| err(format!("time: {e}")))?),
                seq: cols[1].parse().map_err(|e| err(format!("seq: {e}")))?,
                kind: cols[2].parse().map_err(err)?,
                object: opt(cols[3]),
                method: opt(cols[4]),
                request: match cols[5] {
                    "-" => None,
                    s => Some(s.parse().map_err(|e| err(format!("request id: {e}")))?),
                },
                detail: if cols[6] == "-" { String::new() } else { cols[6].to_owned() },
            });
        }
        Ok(EventLog { records })
    }
}

//! Value-level model of real-time data.
//!
//! A real-time attribute carries its current value (CV), the timestamp of its
//! last update (TS), the length of its absolute validity interval (VD) and,
//! for sensor attributes, the maximum tolerated data error (MDE). Derived
//! attributes instead remember the timestamps of the inputs they were last
//! computed from, which is what relative consistency is judged on.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::{DurationMs, TimePoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("clock skew on `{attr}`: now {now} is before timestamp {ts}")]
    ClockSkew { attr: String, ts: TimePoint, now: TimePoint },
    #[error("type mismatch on `{attr}`: expected {expected}, found {found}")]
    TypeMismatch {
        attr: String,
        expected: ScalarTag,
        found: ScalarTag,
    },
    #[error("`{0}` is not a sensor attribute")]
    NotSensor(String),
    #[error("`{0}` is not a derived attribute")]
    NotDerived(String),
    #[error("wrong derivation inputs for `{attr}`: expected {expected:?}, got {got:?}")]
    WrongInputs {
        attr: String,
        expected: Vec<String>,
        got: Vec<String>,
    },
    #[error("derived attribute `{0}` has never been computed")]
    NeverComputed(String),
}

/// Scalar value stored in an attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RtScalar {
    Int(i64),
    Real(f64),
    Str(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalarTag {
    Int,
    Real,
    Str,
}

impl fmt::Display for ScalarTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScalarTag::Int => "integer",
            ScalarTag::Real => "real",
            ScalarTag::Str => "string",
        })
    }
}

impl RtScalar {
    pub fn tag(&self) -> ScalarTag {
        match self {
            RtScalar::Int(_) => ScalarTag::Int,
            RtScalar::Real(_) => ScalarTag::Real,
            RtScalar::Str(_) => ScalarTag::Str,
        }
    }

    pub fn default_for(tag: ScalarTag) -> Self {
        match tag {
            ScalarTag::Int => RtScalar::Int(0),
            ScalarTag::Real => RtScalar::Real(0.0),
            ScalarTag::Str => RtScalar::Str(String::new()),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            RtScalar::Int(v) => Some(*v as f64),
            RtScalar::Real(v) => Some(*v),
            RtScalar::Str(_) => None,
        }
    }
}

impl fmt::Display for RtScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RtScalar::Int(v) => write!(f, "{v}"),
            RtScalar::Real(v) => write!(f, "{v}"),
            RtScalar::Str(s) => write!(f, "{s:?}"),
        }
    }
}

impl From<i64> for RtScalar {
    fn from(v: i64) -> Self {
        RtScalar::Int(v)
    }
}

impl From<f64> for RtScalar {
    fn from(v: f64) -> Self {
        RtScalar::Real(v)
    }
}

impl From<&str> for RtScalar {
    fn from(v: &str) -> Self {
        RtScalar::Str(v.to_owned())
    }
}

/// Whether the attribute is fed by a sensor or computed from other attributes.
#[derive(Debug, Clone, PartialEq)]
pub enum RtRole {
    Sensor {
        mde: f64,
    },
    Derived {
        inputs: Vec<String>,
        /// Input timestamps captured at the last recomputation.
        input_stamps: Option<Vec<(String, TimePoint)>>,
    },
}

/// Runtime state of one real-time attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct RtAttrState {
    pub name: String,
    pub cv: RtScalar,
    pub ts: TimePoint,
    pub vd: DurationMs,
    pub role: RtRole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateOutcome {
    Applied,
    Discarded,
}

impl RtAttrState {
    pub fn sensor(name: impl Into<String>, cv: RtScalar, ts: TimePoint, vd: DurationMs, mde: f64) -> Self {
        Self {
            name: name.into(),
            cv,
            ts,
            vd,
            role: RtRole::Sensor { mde },
        }
    }

    /// A derived attribute that has not been computed yet.
    pub fn derived(name: impl Into<String>, cv: RtScalar, vd: DurationMs, inputs: Vec<String>) -> Self {
        Self {
            name: name.into(),
            cv,
            ts: TimePoint::EPOCH,
            vd,
            role: RtRole::Derived {
                inputs,
                input_stamps: None,
            },
        }
    }

    pub fn mde(&self) -> Option<f64> {
        match self.role {
            RtRole::Sensor { mde } => Some(mde),
            RtRole::Derived { .. } => None,
        }
    }

    pub fn input_stamps(&self) -> Option<&[(String, TimePoint)]> {
        match &self.role {
            RtRole::Derived { input_stamps, .. } => input_stamps.as_deref(),
            RtRole::Sensor { .. } => None,
        }
    }

    /// True for derived attributes that have been computed at least once, and
    /// for every sensor attribute.
    pub fn has_value(&self) -> bool {
        match &self.role {
            RtRole::Sensor { .. } => true,
            RtRole::Derived { input_stamps, .. } => input_stamps.is_some(),
        }
    }

    pub fn age(&self, now: TimePoint) -> Result<DurationMs, ModelError> {
        now.checked_since(self.ts).ok_or_else(|| ModelError::ClockSkew {
            attr: self.name.clone(),
            ts: self.ts,
            now,
        })
    }

    /// Absolute consistency: `ts <= now < ts + vd`.
    pub fn is_fresh(&self, now: TimePoint) -> bool {
        self.ts <= now && now < self.ts + self.vd
    }

    /// Deviation between the stored value and `candidate`.
    ///
    /// Numeric values use the absolute difference. Text values are either
    /// identical (0) or infinitely far apart.
    pub fn data_error(&self, candidate: &RtScalar) -> Result<f64, ModelError> {
        match (&self.cv, candidate) {
            (RtScalar::Int(a), RtScalar::Int(b)) => Ok((i128::from(*b) - i128::from(*a)).unsigned_abs() as f64),
            (RtScalar::Real(a), RtScalar::Real(b)) => Ok((b - a).abs()),
            (RtScalar::Str(a), RtScalar::Str(b)) => Ok(if a == b { 0.0 } else { f64::INFINITY }),
            (cv, cand) => Err(ModelError::TypeMismatch {
                attr: self.name.clone(),
                expected: cv.tag(),
                found: cand.tag(),
            }),
        }
    }

    /// QoD rule: a sensor reading within MDE of the stored value is discarded.
    pub fn should_discard(&self, candidate: &RtScalar) -> Result<bool, ModelError> {
        let mde = self.mde().ok_or_else(|| ModelError::NotSensor(self.name.clone()))?;
        Ok(self.data_error(candidate)? <= mde)
    }

    /// Writes a sensor reading. A discarded reading leaves CV alone but
    /// still renews TS.
    pub fn apply_update(&mut self, candidate: RtScalar, now: TimePoint) -> Result<UpdateOutcome, ModelError> {
        let discard = self.should_discard(&candidate)?;
        self.ts = now;
        if discard {
            Ok(UpdateOutcome::Discarded)
        } else {
            self.cv = candidate;
            Ok(UpdateOutcome::Applied)
        }
    }

    /// Stores a freshly computed derived value and snapshots its inputs' timestamps.
    pub fn apply_derivation(
        &mut self,
        computed: RtScalar,
        inputs: &[(&str, &RtAttrState)],
        now: TimePoint,
    ) -> Result<(), ModelError> {
        let RtRole::Derived {
            inputs: declared,
            input_stamps,
        } = &mut self.role
        else {
            return Err(ModelError::NotDerived(self.name.clone()));
        };
        let mut want: Vec<&str> = declared.iter().map(String::as_str).collect();
        let mut got: Vec<&str> = inputs.iter().map(|(n, _)| *n).collect();
        want.sort_unstable();
        got.sort_unstable();
        if want != got {
            return Err(ModelError::WrongInputs {
                attr: self.name.clone(),
                expected: declared.clone(),
                got: inputs.iter().map(|(n, _)| (*n).to_owned()).collect(),
            });
        }
        if computed.tag() != self.cv.tag() {
            return Err(ModelError::TypeMismatch {
                attr: self.name.clone(),
                expected: self.cv.tag(),
                found: computed.tag(),
            });
        }
        *input_stamps = Some(inputs.iter().map(|(n, s)| ((*n).to_owned(), s.ts)).collect());
        self.cv = computed;
        self.ts = now;
        Ok(())
    }

    /// Spread between the oldest and newest input timestamp at last computation.
    pub fn input_spread(&self) -> Result<DurationMs, ModelError> {
        let stamps = match &self.role {
            RtRole::Derived { input_stamps, .. } => input_stamps
                .as_ref()
                .ok_or_else(|| ModelError::NeverComputed(self.name.clone()))?,
            RtRole::Sensor { .. } => return Err(ModelError::NotDerived(self.name.clone())),
        };
        let min = stamps.iter().map(|(_, t)| *t).min().unwrap_or_default();
        let max = stamps.iter().map(|(_, t)| *t).max().unwrap_or_default();
        Ok(max - min)
    }

    pub fn is_relatively_consistent(&self, rvi: DurationMs) -> Result<bool, ModelError> {
        Ok(self.input_spread()? <= rvi)
    }
}

//! Virtual time on the simulation clock.
//!
//! Time is an integer count of milliseconds since the simulation epoch 0.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

/// An instant on the virtual clock.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimePoint(u64);

impl TimePoint {
    pub const EPOCH: TimePoint = TimePoint(0);

    pub const fn from_millis(millis: u64) -> Self {
        Self(millis)
    }

    /// Builds an instant from a wall-clock style `h:m:s` reading.
    pub const fn from_hms(hours: u64, minutes: u64, seconds: u64) -> Self {
        Self(((hours * 60 + minutes) * 60 + seconds) * 1000)
    }

    pub const fn millis(self) -> u64 {
        self.0
    }

    /// `self - earlier`, or `None` when `earlier` is later than `self`.
    pub fn checked_since(self, earlier: TimePoint) -> Option<DurationMs> {
        self.0.checked_sub(earlier.0).map(DurationMs)
    }

    pub fn saturating_since(self, earlier: TimePoint) -> DurationMs {
        DurationMs(self.0.saturating_sub(earlier.0))
    }
}

impl fmt::Display for TimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ms", self.0)
    }
}

/// A span of virtual time in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DurationMs(u64);

impl DurationMs {
    pub const ZERO: DurationMs = DurationMs(0);

    pub const fn from_millis(millis: u64) -> Self {
        Self(millis)
    }

    pub const fn from_secs(secs: u64) -> Self {
        Self(secs * 1000)
    }

    pub const fn millis(self) -> u64 {
        self.0
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn saturating_sub(self, other: DurationMs) -> DurationMs {
        DurationMs(self.0.saturating_sub(other.0))
    }
}

impl fmt::Display for DurationMs {
    /// Whole seconds print as `Ns`, everything else as `Nms`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 != 0 && self.0.is_multiple_of(1000) {
            write!(f, "{}s", self.0 / 1000)
        } else {
            write!(f, "{}ms", self.0)
        }
    }
}

impl Add<DurationMs> for TimePoint {
    type Output = TimePoint;

    fn add(self, rhs: DurationMs) -> TimePoint {
        TimePoint(self.0.saturating_add(rhs.0))
    }
}

impl Add for DurationMs {
    type Output = DurationMs;

    fn add(self, rhs: DurationMs) -> DurationMs {
        DurationMs(self.0.saturating_add(rhs.0))
    }
}

impl Sub for TimePoint {
    type Output = DurationMs;

    /// Saturates at zero; use [`TimePoint::checked_since`] where skew matters.
    fn sub(self, rhs: TimePoint) -> DurationMs {
        self.saturating_since(rhs)
    }
}

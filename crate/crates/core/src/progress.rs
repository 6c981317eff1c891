//! Execution progress values.

use std::cmp::Ordering;
use std::fmt;
use thiserror::Error;

/// How far a node's execution has advanced, as a fraction in `[0, 1]`.
///
/// Construction rejects anything outside the unit interval (including NaN),
/// so comparisons between progress values are total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress(f64);

#[derive(Debug, Error, PartialEq)]
#[error("progress value {0} is outside [0, 1]")]
pub struct ProgressOutOfRange(pub f64);

impl Progress {
    pub const ZERO: Progress = Progress(0.0);
    pub const ONE: Progress = Progress(1.0);

    pub fn new(value: f64) -> Result<Progress, ProgressOutOfRange> {
        if value.is_nan() || !(0.0..=1.0).contains(&value) {
            Err(ProgressOutOfRange(value))
        } else {
            Ok(Progress(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_complete(self) -> bool {
        self.0 == 1.0
    }
}

impl Eq for Progress {}

impl PartialOrd for Progress {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Progress {
    fn cmp(&self, other: &Self) -> Ordering {
        // Values are never NaN, so this is a genuine total order.
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Display for Progress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

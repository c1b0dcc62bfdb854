//! Pass/fail checks shared by the verification reports.

use serde::{Deserialize, Serialize};

/// A named comparison of a measured value against a limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub limit: f64,
}

impl Check {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            passed: value <= limit,
            value,
            limit,
        }
    }

    pub fn below(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            passed: value < limit,
            value,
            limit,
        }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            passed: value >= limit,
            value,
            limit,
        }
    }

    /// `lo <= value <= hi`; `limit` records the half-width around the midpoint.
    pub fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Check {
            name: name.into(),
            passed: (lo..=hi).contains(&value),
            value,
            limit: 0.5 * (hi - lo),
        }
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

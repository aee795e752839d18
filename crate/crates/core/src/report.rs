//! Serializable result records shared by the library checks and the CLI.

use serde::{Deserialize, Serialize};

/// Outcome of one verification operation on one catalog case.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct OpReport {
    pub case: String,
    pub operation: String,
    pub samples: usize,
    pub spread: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl OpReport {
    pub fn new(
        case: impl Into<String>,
        operation: impl Into<String>,
        samples: usize,
        spread: f64,
        tolerance: f64,
    ) -> Self {
        OpReport {
            case: case.into(),
            operation: operation.into(),
            samples,
            spread,
            tolerance,
            pass: spread.is_finite() && spread <= tolerance,
        }
    }
}

/// Outcome of one reciprocal-sum trace evaluation.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TraceCaseReport {
    pub case: String,
    pub phi: f64,
    pub trace_direct: f64,
    pub trace_series_raw: f64,
    pub trace_series_accel: f64,
    pub tail_bound: f64,
    pub pass: bool,
}

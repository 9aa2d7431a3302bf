use serde::{Deserialize, Serialize};

use super::{AnalysisError, Result};

/// `H(ε) = −ε log₂ ε − (1−ε) log₂(1−ε)`, with `H(0) = H(1) = 0`.
pub fn binary_entropy(eps: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(AnalysisError::ProbabilityOutOfRange(eps));
    }
    let term = |p: f64| if p == 0.0 { 0.0 } else { -p * p.log2() };
    Ok(term(eps) + term(1.0 - eps))
}

/// Error-free string length bound at one error rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub eps: f64,
    pub entropy: f64,
    /// `1 / H(ε)`.
    pub raw_bound: f64,
    /// Largest integer strictly below `raw_bound`.
    pub max_error_free_length: u64,
}

/// `n < 1/H(ε)`; a noiseless channel imposes no limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "bound", rename_all = "snake_case")]
pub enum LengthBound {
    Finite(BoundRow),
    Unbounded,
}

impl LengthBound {
    pub fn row(&self) -> Option<&BoundRow> {
        match self {
            LengthBound::Finite(row) => Some(row),
            LengthBound::Unbounded => None,
        }
    }
}

pub fn shannon_length_bound(eps: f64) -> Result<LengthBound> {
    if eps == 0.0 {
        return Ok(LengthBound::Unbounded);
    }
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(AnalysisError::RateOutOfRange(eps));
    }
    let entropy = binary_entropy(eps)?;
    let raw_bound = 1.0 / entropy;
    let floor = raw_bound.floor();
    let below = if floor == raw_bound { floor - 1.0 } else { floor };
    Ok(LengthBound::Finite(BoundRow { eps, entropy, raw_bound, max_error_free_length: below as u64 }))
}

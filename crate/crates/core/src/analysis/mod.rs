//! Information-theoretic companions to the protocol: the error-free length
//! bound, non-interactive correlation distillation, and interactive
//! reconciliation over a classical channel.

mod entropy;
mod nicd;
mod reconcile;

pub use entropy::{binary_entropy, shannon_length_bound, BoundRow, LengthBound};
pub use nicd::{
    balanced_functions, correlation_of, nicd_max_correlation, nicd_no_improvement_certificate, pair_coefficients,
    Achiever, Certificate, CertificateRow, NicdResult, NICD_MAX_M,
};
pub use reconcile::{initial_block_size, reconcile, reconcile_with_block_size, Reconciled, ReconcileReport};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("error rate {0} outside (0, 0.5]")]
    RateOutOfRange(f64),
    #[error("noise rate {0} outside [0, 0.5]")]
    NoiseOutOfRange(f64),
    #[error("substring length {0} unsupported (1..={max})", max = NICD_MAX_M)]
    UnsupportedLength(usize),
    #[error("exhaustive certification needs m ≤ 3, got {0}")]
    NotExhaustive(usize),
    #[error("strings differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("block size must be at least 1")]
    ZeroBlock,
}

pub type Result<T> = std::result::Result<T, AnalysisError>;

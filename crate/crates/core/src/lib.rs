//! Simulation and analysis of correlated action selection from shared
//! entanglement, with no classical communication between the agents.
//!
//! * [`qsim`]: a small statevector simulator for the states involved.
//! * [`protocol`]: entanglement distribution, precommunicated action tables
//!   and agent measurement under read-out noise and frame misalignment.
//! * [`adversary`]: GHZ, W and biseparable substitution and CNOT cloning.
//! * [`analysis`]: the error-free length bound, non-interactive distillation
//!   search and block-parity reconciliation.

pub mod adversary;
pub mod analysis;
pub mod bits;
pub mod protocol;
pub mod qsim;
pub mod seed;

pub use bits::BitString;

/// Version string stamped into every CLI report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

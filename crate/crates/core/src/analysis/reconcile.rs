//! Two-pass block-parity reconciliation with binary search.
//!
//! Alice's string is the reference; Bob corrects his copy. Every parity Alice
//! reveals over the (assumed authenticated, error-free) classical channel is
//! counted in `disclosed_bits`. The final equality check is a simulator
//! privilege and is not counted.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{AnalysisError, Result};
use crate::bits::BitString;
use crate::seed::stream;

/// Expected errors per first-pass block under the Cascade sizing rule.
pub const CASCADE_BLOCK_CONSTANT: f64 = 0.73;

/// The first pass always splits the string into at least this many blocks.
pub const MIN_FIRST_PASS_BLOCKS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconcileReport {
    pub n: usize,
    pub errors_before: usize,
    pub errors_after: usize,
    /// `r`: parity bits revealed over the classical channel.
    pub disclosed_bits: usize,
    pub passes: usize,
    pub success: bool,
    pub block_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reconciled {
    pub report: ReconcileReport,
    pub alice: BitString,
    /// Bob's string after correction.
    pub bob: BitString,
}

/// First-pass block size: `round(0.73/ε)`, at least 2, capped so the first
/// pass has [`MIN_FIRST_PASS_BLOCKS`] blocks, and never longer than `n`.
pub fn initial_block_size(n: usize, eps_hint: f64) -> usize {
    let cascade = ((CASCADE_BLOCK_CONSTANT / eps_hint).round() as usize).max(2);
    let cap = n.div_ceil(MIN_FIRST_PASS_BLOCKS).max(2);
    cascade.min(cap).min(n).max(1)
}

pub fn reconcile(alice: &BitString, bob: &BitString, eps_hint: f64, seed: u64) -> Result<Reconciled> {
    if !(eps_hint > 0.0 && eps_hint <= 0.5) {
        return Err(AnalysisError::RateOutOfRange(eps_hint));
    }
    reconcile_with_block_size(alice, bob, initial_block_size(alice.len(), eps_hint), seed)
}

/// Runs both passes with an explicit first-pass block size `k1`; the second
/// pass uses `2·k1` over a permutation drawn from `seed`.
pub fn reconcile_with_block_size(alice: &BitString, bob: &BitString, k1: usize, seed: u64) -> Result<Reconciled> {
    if alice.len() != bob.len() {
        return Err(AnalysisError::LengthMismatch(alice.len(), bob.len()));
    }
    if k1 == 0 {
        return Err(AnalysisError::ZeroBlock);
    }
    let n = alice.len();
    let errors_before = alice.hamming_distance(bob);
    let mut corrected = bob.clone();
    let mut disclosed = 0;

    let identity: Vec<usize> = (0..n).collect();
    let mut shuffled = identity.clone();
    shuffled.shuffle(&mut stream(seed));

    let mut block_sizes = Vec::with_capacity(2);
    for (order, k) in [(&identity, k1), (&shuffled, 2 * k1)] {
        let k = k.min(n).max(1);
        block_sizes.push(k);
        for block in order.chunks(k) {
            disclosed += correct_block(alice, &mut corrected, block);
        }
    }

    let errors_after = alice.hamming_distance(&corrected);
    Ok(Reconciled {
        report: ReconcileReport {
            n,
            errors_before,
            errors_after,
            disclosed_bits: disclosed,
            passes: block_sizes.len(),
            success: errors_after == 0,
            block_sizes,
        },
        alice: alice.clone(),
        bob: corrected,
    })
}

fn parity(bits: &BitString, positions: &[usize]) -> u8 {
    positions.iter().fold(0, |p, &i| p ^ bits.get(i))
}

/// Compares one block's parity and, on mismatch, bisects to a single error
/// and flips it. Returns the number of parities Alice disclosed.
fn correct_block(alice: &BitString, bob: &mut BitString, block: &[usize]) -> usize {
    let mut disclosed = 1;
    if parity(alice, block) == parity(bob, block) {
        return disclosed;
    }
    let mut span = block;
    while span.len() > 1 {
        let (left, right) = span.split_at(span.len() / 2);
        disclosed += 1;
        span = if parity(alice, left) != parity(bob, left) { left } else { right };
    }
    bob.flip(span[0]);
    disclosed
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn identical_strings_cost_only_block_parities() {
        let s = bits("0110100111010010");
        let r = reconcile(&s, &s, 0.1, 3).unwrap();
        assert!(r.report.success);
        assert_eq!(r.report.errors_after, 0);
        let [k1, k2] = [r.report.block_sizes[0], r.report.block_sizes[1]];
        assert_eq!(r.report.disclosed_bits, 16usize.div_ceil(k1) + 16usize.div_ceil(k2));
    }

    #[test]
    fn single_error_in_block_of_eight() {
        let alice = bits("10110010");
        let bob = bits("10100010");
        let r = reconcile_with_block_size(&alice, &bob, 8, 0).unwrap();
        assert!(r.report.success);
        assert_eq!(r.bob, alice);
        // pass 1: block parity + 3 bisection parities; pass 2: one clean parity
        assert_eq!(r.report.disclosed_bits, 1 + 3 + 1);
        assert_eq!(r.report.block_sizes, vec![8, 8]);
    }

    #[test]
    fn two_errors_in_one_block_survive() {
        let alice = bits("00000000");
        let bob = bits("11000000");
        let r = reconcile_with_block_size(&alice, &bob, 8, 0).unwrap();
        assert!(!r.report.success);
        assert_eq!(r.report.errors_after, 2);
    }

    #[test]
    fn block_sizing() {
        assert_eq!(initial_block_size(10_000, 0.01), 73);
        assert_eq!(initial_block_size(64, 0.01), 4);
        assert_eq!(initial_block_size(16, 0.1), 2);
        assert_eq!(initial_block_size(1, 0.5), 1);
        assert_eq!(initial_block_size(1_000, 0.5), 2);
    }

    #[test]
    fn argument_errors() {
        assert_eq!(
            reconcile(&bits("01"), &bits("011"), 0.1, 0).unwrap_err(),
            AnalysisError::LengthMismatch(2, 3)
        );
        assert!(reconcile(&bits("01"), &bits("01"), 0.0, 0).is_err());
        assert!(reconcile_with_block_size(&bits("01"), &bits("01"), 0, 0).is_err());
    }

    #[test]
    fn empty_strings_reconcile_trivially() {
        let r = reconcile(&BitString::default(), &BitString::default(), 0.1, 0).unwrap();
        assert!(r.report.success);
        assert_eq!(r.report.disclosed_bits, 0);
    }
}

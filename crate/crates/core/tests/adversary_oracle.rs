//! Attack statistics checked against analytic values obtained by chaining
//! `measurement_probabilities` and `collapse` on the prepared triples.

use entangle_coord::adversary::{
    biseparable_attack, eve_ghz_attack, eve_w_attack, wolf_cnot_attack, wolf_copy, ALICE, BOB, EVE,
};
use entangle_coord::qsim::{self, PureState};
use entangle_coord::BitString;

/// Exact joint distribution of (eve, alice, bob) bits when measured in `order`.
fn joint(state: &PureState, order: [usize; 3]) -> [[[f64; 2]; 2]; 2] {
    let mut p = [[[0.0; 2]; 2]; 2];
    fn walk(state: &PureState, order: &[usize], prob: f64, bits: &mut [u8; 3], p: &mut [[[f64; 2]; 2]; 2]) {
        let Some((&q, rest)) = order.split_first() else {
            p[bits[EVE] as usize][bits[ALICE] as usize][bits[BOB] as usize] += prob;
            return;
        };
        let (p0, p1) = qsim::measurement_probabilities(state, q).unwrap();
        for (bit, pb) in [(0u8, p0), (1u8, p1)] {
            if pb < 1e-12 {
                continue;
            }
            let post = qsim::collapse(state, q, bit).unwrap().post_state;
            bits[q] = bit;
            walk(&post, rest, prob * pb, bits, p);
        }
    }
    walk(state, &order, 1.0, &mut [0; 3], &mut p);
    p
}

fn sigma4(p: f64, n: f64) -> f64 {
    4.0 * (p * (1.0 - p) / n).sqrt()
}

#[test]
fn analytic_w_values() {
    let p = joint(&qsim::prepare_w(), [EVE, ALICE, BOB]);
    let eve0: f64 = p[0].iter().flatten().sum();
    assert!((eve0 - 1.0 / 3.0).abs() < 1e-12);
    assert!((p[0][1][1] / eve0 - 1.0).abs() < 1e-12);
    let eve1 = 1.0 - eve0;
    assert!(((p[1][0][1] + p[1][1][0]) / eve1 - 1.0).abs() < 1e-12);
    let agree: f64 = (0..2).map(|e| p[e][0][0] + p[e][1][1]).sum();
    assert!((agree - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn w_report_matches_analytic_chain() {
    let trials = 40_000.0;
    let r = eve_w_attack(1, trials as u64, 8).unwrap();
    let p = joint(&qsim::prepare_w(), [EVE, ALICE, BOB]);
    let eve0: f64 = p[0].iter().flatten().sum();
    let agree: f64 = (0..2).map(|e| p[e][0][0] + p[e][1][1]).sum();
    let eavesdrop: f64 = (0..2).map(|x| p[x][x][0] + p[x][x][1]).sum();
    assert!((r.conditional_stats["p_eve_0"] - eve0).abs() <= sigma4(eve0, trials));
    assert!((r.agreement_rate - agree).abs() <= sigma4(agree, trials));
    assert!((r.eavesdrop_success_rate - eavesdrop).abs() <= sigma4(eavesdrop, trials));
    assert_eq!(r.conditional_stats["p_alice_bob_11_given_eve_0"], 1.0);
    assert_eq!(r.conditional_stats["p_alice_ne_bob_given_eve_1"], 1.0);
}

#[test]
fn w_certain_events_hold_per_trial() {
    let r = eve_w_attack(3, 2_000, 1).unwrap();
    let eve = r.eve_bits.as_ref().unwrap();
    for t in 0..eve.len() {
        for i in 0..3 {
            let (e, a, b) = (eve[t].get(i), r.alice_bits[t].get(i), r.bob_bits[t].get(i));
            if e == 0 {
                assert_eq!((a, b), (1, 1));
            } else {
                assert_ne!(a, b);
            }
        }
    }
}

#[test]
fn ghz_attack_is_perfect_in_both_orders() {
    for n_bits in 1..=16 {
        for eve_first in [true, false] {
            let r = eve_ghz_attack(n_bits, 100, eve_first, n_bits as u64).unwrap();
            assert_eq!(r.eavesdrop_success_rate, 1.0);
            assert_eq!(r.agreement_rate, 1.0);
            assert_eq!(r.conditional_stats["product_after_first_measurement_rate"], 1.0);
        }
    }
    let ghz = qsim::prepare_ghz(3).unwrap();
    for order in [[EVE, ALICE, BOB], [ALICE, BOB, EVE]] {
        let p = joint(&ghz, order);
        assert!((p[0][0][0] - 0.5).abs() < 1e-12 && (p[1][1][1] - 0.5).abs() < 1e-12);
    }
}

#[test]
fn ghz_report_p_eve_zero_is_half() {
    let trials = 5_000.0;
    let r = eve_ghz_attack(4, trials as u64, true, 6).unwrap();
    assert!((r.conditional_stats["p_eve_0"] - 0.5).abs() <= sigma4(0.5, trials * 4.0));
}

#[test]
fn biseparable_report_matches_analytic_chain() {
    let trials = 20_000.0;
    let r = biseparable_attack(1, trials as u64, 5).unwrap();
    let p = joint(&qsim::prepare_biseparable(), [EVE, ALICE, BOB]);
    assert!((p[1][0][1] - 0.5).abs() < 1e-12 && (p[1][1][0] - 0.5).abs() < 1e-12);
    assert_eq!(r.conditional_stats["p_eve_1"], 1.0);
    assert_eq!(r.agreement_rate, 0.0);
    assert_eq!(r.conditional_stats["p_alice_bob_00"], 0.0);
    assert_eq!(r.conditional_stats["p_alice_bob_11"], 0.0);
    assert!((r.conditional_stats["p_alice_bob_01"] - 0.5).abs() <= sigma4(0.5, trials));
    // Eve's bit is constant, so it carries no information about Alice's
    assert!(r.conditional_stats["corr_eve_alice"].abs() <= 4.0 / trials.sqrt());
    assert!((r.eavesdrop_success_rate - 0.5).abs() <= sigma4(0.5, trials));
}

#[test]
fn wolf_triples_equal_ghz() {
    let ghz = qsim::prepare_ghz(3).unwrap();
    let (triple, _, _) = wolf_copy(&qsim::prepare_bell(), 0, 1, 0).unwrap();
    for (a, b) in triple.amplitudes().iter().zip(ghz.amplitudes()) {
        assert!((a - b).norm() <= 1e-12);
    }
    let r = wolf_cnot_attack(6, 300, 0, 2).unwrap();
    assert_eq!(r.fidelity, Some(1.0));
    assert!(r.conditional_stats["max_ghz_amplitude_deviation"] <= 1e-12);
    assert_eq!(r.eavesdrop_success_rate, 1.0);
    assert_eq!(r.wolf_bits.as_ref().unwrap(), &r.alice_bits);
}

#[test]
fn wolf_with_flipped_ancilla_reads_the_complement() {
    let r = wolf_cnot_attack(5, 300, 1, 2).unwrap();
    let complements: Vec<BitString> = r.alice_bits.iter().map(BitString::complement).collect();
    assert_eq!(r.wolf_bits.as_ref().unwrap(), &complements);
    assert_eq!(r.conditional_stats["wolf_complement_rate"], 1.0);
    assert_eq!(r.agreement_rate, 1.0);
}

#[test]
fn reports_are_deterministic() {
    assert_eq!(eve_w_attack(2, 300, 9).unwrap(), eve_w_attack(2, 300, 9).unwrap());
    assert_eq!(wolf_cnot_attack(2, 50, 0, 9).unwrap(), wolf_cnot_attack(2, 50, 0, 9).unwrap());
    assert_ne!(eve_w_attack(2, 300, 9).unwrap(), eve_w_attack(2, 300, 10).unwrap());
}

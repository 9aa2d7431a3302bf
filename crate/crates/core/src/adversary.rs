//! Attacks on the entanglement resource.
//!
//! Eve swaps Carl's Bell pairs for triples (GHZ, W or biseparable) and keeps
//! qubit 0 of each; Alice holds qubit 1 and Bob qubit 2. Wolf instead takes
//! temporary custody of Bob's half of honest pairs and copies it into an
//! ancilla with a CNOT. Every scenario is a full batch of protocol runs that
//! records all parties' strings.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;
use crate::protocol::{self, ProtocolError, MAX_ACTION_BITS};
use crate::qsim::{self, PureState, QsimError};
use crate::seed::{derive_seed, stream};

pub const EVE: usize = 0;
pub const ALICE: usize = 1;
pub const BOB: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttackError {
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("n_bits must be in 1..={MAX_ACTION_BITS}, got {0}")]
    InvalidBits(usize),
    #[error("at least one trial is required")]
    NoTrials,
    #[error("target bit must be 0 or 1, got {0}")]
    InvalidTargetBit(u8),
}

pub type Result<T> = std::result::Result<T, AttackError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AttackKind {
    #[serde(rename = "GHZ")]
    Ghz,
    W,
    Biseparable,
    #[serde(rename = "WolfCNOT")]
    WolfCnot,
}

/// Everything observed over one attack batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub kind: AttackKind,
    pub n_bits: usize,
    pub trials: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eve_bits: Option<Vec<BitString>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wolf_bits: Option<Vec<BitString>>,
    pub alice_bits: Vec<BitString>,
    pub bob_bits: Vec<BitString>,
    /// Fraction of trials in which the attacker's string equals Alice's.
    pub eavesdrop_success_rate: f64,
    /// Fraction of trials in which Alice's and Bob's strings are equal.
    pub agreement_rate: f64,
    pub conditional_stats: BTreeMap<String, f64>,
    /// Smallest `|⟨GHZ|triple⟩|²` over every triple Wolf built.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<f64>,
}

impl AttackReport {
    pub fn attacker_bits(&self) -> &[BitString] {
        self.eve_bits.as_deref().or(self.wolf_bits.as_deref()).unwrap_or(&[])
    }
}

/// Bits and per-triple diagnostics of one trial.
#[derive(Debug, Default)]
struct Trial {
    attacker: Vec<u8>,
    alice: Vec<u8>,
    bob: Vec<u8>,
    /// Remaining register fully separable after the first measurement.
    product_after_first: Vec<bool>,
    fidelity: Vec<f64>,
    deviation: Vec<f64>,
}

fn check(n_bits: usize, trials: u64) -> Result<()> {
    if n_bits == 0 || n_bits > MAX_ACTION_BITS {
        return Err(AttackError::InvalidBits(n_bits));
    }
    if trials == 0 {
        return Err(AttackError::NoTrials);
    }
    Ok(())
}

fn run_trials<F>(trials: u64, seed: u64, trial: F) -> Result<Vec<Trial>>
where
    F: Fn(&mut ChaCha8Rng) -> Result<Trial> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|t| trial(&mut stream(derive_seed(seed, t))))
        .collect()
}

/// Measures `order` in turn, returning bits indexed by qubit.
fn measure_all(mut state: PureState, order: &[usize], rng: &mut ChaCha8Rng) -> Result<([u8; 3], bool)> {
    let mut bits = [0u8; 3];
    let mut product_after_first = false;
    for (step, &q) in order.iter().enumerate() {
        let outcome = qsim::measure_qubit(&state, q, rng)?;
        bits[q] = outcome.bit;
        state = outcome.post_state;
        if step == 0 {
            product_after_first = fully_separable(&state)?;
        }
    }
    Ok((bits, product_after_first))
}

fn fully_separable(state: &PureState) -> Result<bool> {
    for q in 0..state.num_qubits() {
        if !qsim::is_product(state, &[q])?.product {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Runs `n_bits` copies of `triple` per trial with Eve on qubit 0.
fn substitution_trials(
    triple: &PureState,
    order: &[usize],
    n_bits: usize,
    trials: u64,
    seed: u64,
) -> Result<Vec<Trial>> {
    run_trials(trials, seed, |rng| {
        let mut trial = Trial::default();
        for _ in 0..n_bits {
            let (bits, product) = measure_all(triple.clone(), order, rng)?;
            trial.attacker.push(bits[EVE]);
            trial.alice.push(bits[ALICE]);
            trial.bob.push(bits[BOB]);
            trial.product_after_first.push(product);
        }
        Ok(trial)
    })
}

/// Per-bit tallies across a batch.
struct Tally<'a> {
    trials: &'a [Trial],
}

impl Tally<'_> {
    fn bits(&self) -> impl Iterator<Item = (u8, u8, u8)> + '_ {
        self.trials
            .iter()
            .flat_map(|t| (0..t.alice.len()).map(move |i| (t.attacker[i], t.alice[i], t.bob[i])))
    }

    fn total(&self) -> f64 {
        self.bits().count() as f64
    }

    fn rate<F: Fn(u8, u8, u8) -> bool>(&self, f: F) -> f64 {
        self.bits().filter(|&(e, a, b)| f(e, a, b)).count() as f64 / self.total()
    }

    /// `P(event | given)`; `None` when `given` never happened.
    fn conditional<F, G>(&self, event: F, given: G) -> Option<f64>
    where
        F: Fn(u8, u8, u8) -> bool,
        G: Fn(u8, u8, u8) -> bool,
    {
        let base = self.bits().filter(|&(e, a, b)| given(e, a, b)).count();
        (base > 0).then(|| {
            self.bits().filter(|&(e, a, b)| given(e, a, b) && event(e, a, b)).count() as f64 / base as f64
        })
    }

    fn fraction<F: Fn(&bool) -> bool>(&self, select: fn(&Trial) -> &Vec<bool>, f: F) -> f64 {
        let all: Vec<bool> = self.trials.iter().flat_map(|t| select(t).iter().copied()).collect();
        all.iter().filter(|x| f(x)).count() as f64 / all.len().max(1) as f64
    }
}

fn build_report(
    kind: AttackKind,
    n_bits: usize,
    seed: u64,
    trials: Vec<Trial>,
    conditional_stats: BTreeMap<String, f64>,
    fidelity: Option<f64>,
) -> AttackReport {
    let count = trials.len() as u64;
    let attacker: Vec<BitString> = trials.iter().map(|t| BitString::new(t.attacker.clone())).collect();
    let alice_bits: Vec<BitString> = trials.iter().map(|t| BitString::new(t.alice.clone())).collect();
    let bob_bits: Vec<BitString> = trials.iter().map(|t| BitString::new(t.bob.clone())).collect();
    let frac = |hits: usize| hits as f64 / count as f64;
    let eavesdrop_success_rate = frac(attacker.iter().zip(&alice_bits).filter(|(x, a)| x == a).count());
    let agreement_rate = frac(alice_bits.iter().zip(&bob_bits).filter(|(a, b)| a == b).count());
    let (eve_bits, wolf_bits) = match kind {
        AttackKind::WolfCnot => (None, Some(attacker)),
        _ => (Some(attacker), None),
    };
    AttackReport {
        kind,
        n_bits,
        trials: count,
        seed,
        eve_bits,
        wolf_bits,
        alice_bits,
        bob_bits,
        eavesdrop_success_rate,
        agreement_rate,
        conditional_stats,
        fidelity,
    }
}

fn insert(stats: &mut BTreeMap<String, f64>, key: &str, value: Option<f64>) {
    if let Some(v) = value {
        stats.insert(key.to_string(), v);
    }
}

/// Eve keeps qubit 0 of a GHZ triple in place of every Bell pair.
pub fn eve_ghz_attack(n_bits: usize, trials: u64, eve_first: bool, seed: u64) -> Result<AttackReport> {
    check(n_bits, trials)?;
    let order: &[usize] = if eve_first { &[EVE, ALICE, BOB] } else { &[ALICE, BOB, EVE] };
    let results = substitution_trials(&qsim::prepare_ghz(3)?, order, n_bits, trials, seed)?;
    let tally = Tally { trials: &results };
    let mut stats = BTreeMap::new();
    stats.insert("p_eve_0".into(), tally.rate(|e, _, _| e == 0));
    stats.insert("bit_all_equal_rate".into(), tally.rate(|e, a, b| e == a && a == b));
    stats.insert("product_after_first_measurement_rate".into(), tally.fraction(|t| &t.product_after_first, |p| *p));
    stats.insert("eve_first".into(), if eve_first { 1.0 } else { 0.0 });
    Ok(build_report(AttackKind::Ghz, n_bits, seed, results, stats, None))
}

/// Eve keeps qubit 0 of a W triple and measures it before the agents.
pub fn eve_w_attack(n_bits: usize, trials: u64, seed: u64) -> Result<AttackReport> {
    check(n_bits, trials)?;
    let results = substitution_trials(&qsim::prepare_w(), &[EVE, ALICE, BOB], n_bits, trials, seed)?;
    let tally = Tally { trials: &results };
    let mut stats = BTreeMap::new();
    stats.insert("p_eve_0".into(), tally.rate(|e, _, _| e == 0));
    insert(&mut stats, "p_alice_bob_11_given_eve_0", tally.conditional(|_, a, b| a == 1 && b == 1, |e, _, _| e == 0));
    insert(&mut stats, "p_alice_ne_bob_given_eve_1", tally.conditional(|_, a, b| a != b, |e, _, _| e == 1));
    stats.insert("bit_agreement_rate".into(), tally.rate(|_, a, b| a == b));
    stats.insert("bit_eavesdrop_rate".into(), tally.rate(|e, a, _| e == a));
    Ok(build_report(AttackKind::W, n_bits, seed, results, stats, None))
}

/// Eve holds the unentangled qubit of `|1⟩ ⊗ (|01⟩ + |10⟩)`.
pub fn biseparable_attack(n_bits: usize, trials: u64, seed: u64) -> Result<AttackReport> {
    check(n_bits, trials)?;
    let results = substitution_trials(&qsim::prepare_biseparable(), &[EVE, ALICE, BOB], n_bits, trials, seed)?;
    let tally = Tally { trials: &results };
    let mut stats = BTreeMap::new();
    stats.insert("p_eve_1".into(), tally.rate(|e, _, _| e == 1));
    for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        stats.insert(format!("p_alice_bob_{a}{b}"), tally.rate(|_, x, y| x == a && y == b));
    }
    let (cov, corr) = covariance_and_correlation(tally.bits().map(|(e, a, _)| (e as f64, a as f64)));
    stats.insert("cov_eve_alice".into(), cov);
    stats.insert("corr_eve_alice".into(), corr);
    Ok(build_report(AttackKind::Biseparable, n_bits, seed, results, stats, None))
}

/// Sample covariance and Pearson correlation; correlation is 0 when either
/// variable is constant.
fn covariance_and_correlation<I: Iterator<Item = (f64, f64)>>(pairs: I) -> (f64, f64) {
    let pairs: Vec<(f64, f64)> = pairs.collect();
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let cov = pairs.iter().map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / n;
    let vx = pairs.iter().map(|(x, _)| (x - mx).powi(2)).sum::<f64>() / n;
    let vy = pairs.iter().map(|(_, y)| (y - my).powi(2)).sum::<f64>() / n;
    let corr = if vx == 0.0 || vy == 0.0 { 0.0 } else { cov / (vx * vy).sqrt() };
    (cov, corr)
}

/// Wolf's copy of one honest pair: `CNOT(Bob → ancilla)` on
/// `|target_bit⟩ ⊗ pair`, with the ancilla as qubit 0.
///
/// Returns the triple and the positions of Alice's and Bob's qubits in it.
pub fn wolf_copy(pair: &PureState, alice_qubit: usize, bob_qubit: usize, target_bit: u8) -> Result<(PureState, usize, usize)> {
    if target_bit > 1 {
        return Err(AttackError::InvalidTargetBit(target_bit));
    }
    let ancilla = qsim::basis_state(1, target_bit as usize)?;
    let extended = ancilla.tensor(pair)?;
    let (alice, bob) = (alice_qubit + 1, bob_qubit + 1);
    Ok((qsim::apply_cnot(&extended, bob, 0)?, alice, bob))
}

/// Wolf entangles an ancilla with Bob's half of every honest pair.
pub fn wolf_cnot_attack(n_bits: usize, trials: u64, target_bit: u8, seed: u64) -> Result<AttackReport> {
    check(n_bits, trials)?;
    if target_bit > 1 {
        return Err(AttackError::InvalidTargetBit(target_bit));
    }
    let ghz = qsim::prepare_ghz(3)?;
    let results = run_trials(trials, seed, |rng| {
        let (registry, alice, bob) = protocol::distribute_pairs(n_bits, rng)?;
        let mut trial = Trial::default();
        for (a, b) in alice.slots.iter().zip(&bob.slots) {
            let pair = registry.state(a.pair).expect("distributed pair");
            let (mut state, aq, bq) = wolf_copy(pair, a.qubit, b.qubit, target_bit)?;
            trial.fidelity.push(qsim::fidelity(&ghz, &state));
            trial.deviation.push(ghz.max_deviation(&state));
            let mut bits = [0u8; 3];
            for q in [0, aq, bq] {
                let outcome = qsim::measure_qubit(&state, q, rng)?;
                bits[q] = outcome.bit;
                state = outcome.post_state;
            }
            trial.attacker.push(bits[0]);
            trial.alice.push(bits[aq]);
            trial.bob.push(bits[bq]);
        }
        Ok(trial)
    })?;
    let tally = Tally { trials: &results };
    let min_fidelity = results.iter().flat_map(|t| t.fidelity.iter().copied()).fold(f64::INFINITY, f64::min);
    let max_deviation = results.iter().flat_map(|t| t.deviation.iter().copied()).fold(0.0, f64::max);
    let complement_trials = results
        .iter()
        .filter(|t| t.attacker.iter().zip(&t.alice).all(|(w, a)| w != a))
        .count();
    let mut stats = BTreeMap::new();
    stats.insert("target_bit".into(), target_bit as f64);
    stats.insert("max_ghz_amplitude_deviation".into(), max_deviation);
    stats.insert("bit_eavesdrop_rate".into(), tally.rate(|w, a, _| w == a));
    stats.insert("wolf_complement_rate".into(), complement_trials as f64 / results.len() as f64);
    Ok(build_report(AttackKind::WolfCnot, n_bits, seed, results, stats, Some(min_fidelity)))
}

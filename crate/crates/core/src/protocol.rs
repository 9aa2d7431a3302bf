//! Correlated action selection from shared entanglement.
//!
//! Carl prepares one entangled register per action bit and hands each agent
//! one qubit of every register. Carl (for Alice) and Dave (for Bob)
//! precommunicate tables mapping each `(bit position, outcome)` to an opaque
//! action. Later each agent measures its qubits in Σ, reads off a bit string,
//! and performs the listed actions. No message passes between the agents.

use std::borrow::Cow;
use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;
use crate::qsim::{self, PureState, QsimError};
use crate::seed::{derive_seed, stream};

/// Longest action number representable by a `u64`.
pub const MAX_ACTION_BITS: usize = 64;

/// Label reported when the agents' action numbers differ.
pub const AMBIGUOUS: &str = "ambiguous";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error("n_bits must be in 1..={MAX_ACTION_BITS}, got {0}")]
    InvalidBits(usize),
    #[error("need at least two agents, got {0}")]
    TooFewAgents(usize),
    #[error("flip probability {0} outside [0, 0.5]")]
    FlipOutOfRange(f64),
    #[error("misalignment angle {0} is not finite")]
    NonFiniteAngle(f64),
    #[error("{agent} already measured register {pair}")]
    DoubleMeasurement { agent: Party, pair: usize },
    #[error("memory has {memory} slots but table has {table} entries")]
    LengthMismatch { memory: usize, table: usize },
    #[error("slot references register {0}, which does not exist")]
    UnknownRegister(usize),
    #[error("action number {number} outside a strike set of {size}")]
    ActionOutOfRange { number: u64, size: u128 },
    #[error("strike set: {0}")]
    BadStrikeSet(String),
}

pub type Result<T> = std::result::Result<T, ProtocolError>;

/// A field agent. The third and later agents of a multi-agent run are
/// `Agent(i)` with `i ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Party {
    Alice,
    Bob,
    Agent(usize),
}

impl Party {
    pub fn from_index(i: usize) -> Self {
        match i {
            0 => Party::Alice,
            1 => Party::Bob,
            i => Party::Agent(i),
        }
    }

    pub fn index(self) -> usize {
        match self {
            Party::Alice => 0,
            Party::Bob => 1,
            Party::Agent(i) => i,
        }
    }

    /// The cutout that briefs this agent.
    pub fn issuer(self) -> Issuer {
        match self {
            Party::Alice => Issuer::Carl,
            Party::Bob => Issuer::Dave,
            Party::Agent(i) => Issuer::Cutout(i),
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Alice => f.write_str("Alice"),
            Party::Bob => f.write_str("Bob"),
            Party::Agent(i) => write!(f, "Agent{i}"),
        }
    }
}

impl Default for Party {
    fn default() -> Self {
        Party::Bob
    }
}

/// Whoever precommunicates an agent's action table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Issuer {
    Carl,
    Dave,
    Cutout(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
enum Labels {
    Numbered,
    Explicit(Vec<String>),
}

/// The `2^n_bits` strikes indexed by action number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrikeSet {
    n_bits: usize,
    labels: Labels,
}

impl StrikeSet {
    /// Strikes labelled `strike-0 … strike-(2^n−1)`, materialized on demand.
    pub fn numbered(n_bits: usize) -> Result<Self> {
        check_bits(n_bits)?;
        Ok(Self { n_bits, labels: Labels::Numbered })
    }

    pub fn new(labels: Vec<String>) -> Result<Self> {
        let len = labels.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(ProtocolError::BadStrikeSet(format!("{len} labels is not 2^n with n ≥ 1")));
        }
        let distinct: BTreeSet<&String> = labels.iter().collect();
        if distinct.len() != len {
            return Err(ProtocolError::BadStrikeSet("labels must be distinct".into()));
        }
        Ok(Self { n_bits: len.trailing_zeros() as usize, labels: Labels::Explicit(labels) })
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn len(&self) -> u128 {
        1u128 << self.n_bits
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn label(&self, index: u64) -> Option<Cow<'_, str>> {
        if index as u128 >= self.len() {
            return None;
        }
        Some(match &self.labels {
            Labels::Numbered => Cow::Owned(format!("strike-{index}")),
            Labels::Explicit(labels) => Cow::Borrowed(labels[index as usize].as_str()),
        })
    }

    pub fn labels(&self) -> impl Iterator<Item = Cow<'_, str>> + '_ {
        (0..self.len().min(u64::MAX as u128) as u64).filter_map(|i| self.label(i))
    }
}

pub fn strike_of(action_number: u64, strikes: &StrikeSet) -> Result<String> {
    strikes
        .label(action_number)
        .map(Cow::into_owned)
        .ok_or(ProtocolError::ActionOutOfRange { number: action_number, size: strikes.len() })
}

/// An opaque instruction handed to one agent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionToken(pub String);

impl fmt::Display for ActionToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One agent's precommunicated `(bit position, outcome) → action` map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionTable {
    pub agent: Party,
    pub issuer: Issuer,
    /// `entries[i][b]` is the action for outcome `b` at bit position `i`.
    pub entries: Vec<[ActionToken; 2]>,
}

impl ActionTable {
    pub fn n_bits(&self) -> usize {
        self.entries.len()
    }

    pub fn action(&self, position: usize, bit: u8) -> &ActionToken {
        &self.entries[position][bit as usize]
    }

    /// Recovers the bit string behind a sequence of this table's actions.
    pub fn decode(&self, actions: &[ActionToken]) -> Option<BitString> {
        if actions.len() != self.entries.len() {
            return None;
        }
        actions
            .iter()
            .zip(&self.entries)
            .map(|(a, [zero, one])| {
                if a == zero {
                    Some(0)
                } else if a == one {
                    Some(1)
                } else {
                    None
                }
            })
            .collect::<Option<Vec<u8>>>()
            .map(BitString::new)
    }
}

/// Briefs Alice (via Carl) and Bob (via Dave).
pub fn precommunicate(strikes: &StrikeSet, rng: &mut ChaCha8Rng) -> (ActionTable, ActionTable) {
    let mut tables = precommunicate_agents(strikes, 2, rng);
    let bob = tables.pop().expect("two tables");
    let alice = tables.pop().expect("two tables");
    (alice, bob)
}

/// Briefs `k` agents, each through its own cutout.
pub fn precommunicate_agents(strikes: &StrikeSet, k: usize, rng: &mut ChaCha8Rng) -> Vec<ActionTable> {
    (0..k)
        .map(|i| {
            let agent = Party::from_index(i);
            let entries = (0..strikes.n_bits())
                .map(|pos| {
                    let mut token = |bit: u8| {
                        ActionToken(format!("{agent}:{pos}.{bit}:{:08x}", rng.random::<u32>()))
                    };
                    [token(0), token(1)]
                })
                .collect();
            ActionTable { agent, issuer: agent.issuer(), entries }
        })
        .collect()
}

/// Strikes a holder of a single table cannot rule out after seeing its agent act.
///
/// One table decodes its agent's bit string, but the assignment of action
/// numbers to strikes stays with headquarters, so every label in
/// `known_labels` remains possible. Returns `None` if `actions` did not come
/// from `table`.
pub fn candidates_from_table(
    table: &ActionTable,
    actions: &[ActionToken],
    known_labels: &BTreeSet<String>,
) -> Option<Vec<String>> {
    table.decode(actions)?;
    Some(known_labels.iter().cloned().collect())
}

/// The strike jointly identified by both agents' actions and the strike set.
///
/// `None` if either sequence fails to decode or the decoded numbers differ.
pub fn joint_strike(
    tables: (&ActionTable, &ActionTable),
    actions: (&[ActionToken], &[ActionToken]),
    strikes: &StrikeSet,
) -> Option<String> {
    let a = tables.0.decode(actions.0)?;
    let b = tables.1.decode(actions.1)?;
    if a != b {
        return None;
    }
    strike_of(a.to_number(), strikes).ok()
}

/// Reference to one qubit of one shared register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub pair: usize,
    pub qubit: usize,
}

/// The qubits an agent carries away from Carl.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentMemory {
    pub agent: Party,
    /// Slot `i` holds bit position `i` of the action number.
    pub slots: Vec<Slot>,
}

#[derive(Debug, Clone)]
struct Shared {
    state: PureState,
    measured: Vec<bool>,
}

/// Every entangled register in play, each an independent [`PureState`].
#[derive(Debug, Clone, Default)]
pub struct Registry {
    entries: Vec<Shared>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, state: PureState) -> usize {
        let measured = vec![false; state.num_qubits()];
        self.entries.push(Shared { state, measured });
        self.entries.len() - 1
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn state(&self, pair: usize) -> Option<&PureState> {
        self.entries.get(pair).map(|e| &e.state)
    }

    pub fn is_measured(&self, slot: Slot) -> bool {
        self.entries.get(slot.pair).is_some_and(|e| e.measured[slot.qubit])
    }

    /// Applies an agent-local gate to a live qubit.
    pub fn update<F>(&mut self, pair: usize, f: F) -> Result<()>
    where
        F: FnOnce(&PureState) -> std::result::Result<PureState, QsimError>,
    {
        let entry = self.entries.get_mut(pair).ok_or(ProtocolError::UnknownRegister(pair))?;
        entry.state = f(&entry.state)?;
        Ok(())
    }

    /// Rotates the slot's qubit by `theta` and measures it in Σ.
    pub fn measure(&mut self, agent: Party, slot: Slot, theta: f64, rng: &mut ChaCha8Rng) -> Result<u8> {
        let entry = self.entries.get_mut(slot.pair).ok_or(ProtocolError::UnknownRegister(slot.pair))?;
        if slot.qubit >= entry.measured.len() {
            return Err(QsimError::QubitOutOfRange { qubit: slot.qubit, num_qubits: entry.measured.len() }.into());
        }
        if entry.measured[slot.qubit] {
            return Err(ProtocolError::DoubleMeasurement { agent, pair: slot.pair });
        }
        if theta != 0.0 {
            entry.state = qsim::apply_y_rotation(&entry.state, slot.qubit, theta)?;
        }
        let outcome = qsim::measure_qubit(&entry.state, slot.qubit, rng)?;
        entry.state = outcome.post_state;
        entry.measured[slot.qubit] = true;
        Ok(outcome.bit)
    }
}

/// Classical read-out noise and per-agent frame misalignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// ε: probability the carrier's recorded bit is flipped.
    pub flip_prob: f64,
    /// Alice's Σ-frame error in radians.
    pub misalign_alice: f64,
    pub misalign_bob: f64,
    /// The single agent whose outcomes suffer the ε flip.
    #[serde(default)]
    pub carrier: Party,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::noiseless()
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self { flip_prob: 0.0, misalign_alice: 0.0, misalign_bob: 0.0, carrier: Party::Bob }
    }

    pub fn flips(eps: f64) -> Self {
        Self { flip_prob: eps, ..Self::noiseless() }
    }

    pub fn misaligned(alice: f64, bob: f64) -> Self {
        Self { misalign_alice: alice, misalign_bob: bob, ..Self::noiseless() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.flip_prob) {
            return Err(ProtocolError::FlipOutOfRange(self.flip_prob));
        }
        for angle in [self.misalign_alice, self.misalign_bob] {
            if !angle.is_finite() {
                return Err(ProtocolError::NonFiniteAngle(angle));
            }
        }
        Ok(())
    }

    /// Frame error of `agent`; agents beyond Alice and Bob are aligned.
    pub fn misalignment(&self, agent: Party) -> f64 {
        match agent {
            Party::Alice => self.misalign_alice,
            Party::Bob => self.misalign_bob,
            Party::Agent(_) => 0.0,
        }
    }
}

fn check_bits(n_bits: usize) -> Result<()> {
    if n_bits == 0 || n_bits > MAX_ACTION_BITS {
        return Err(ProtocolError::InvalidBits(n_bits));
    }
    Ok(())
}

/// Carl's Bell-pair distribution to Alice and Bob.
///
/// Which qubit of each pair goes to which agent is decided by `rng`.
pub fn distribute_pairs(n_bits: usize, rng: &mut ChaCha8Rng) -> Result<(Registry, AgentMemory, AgentMemory)> {
    let (registry, mut memories) = distribute_ghz(2, n_bits, rng)?;
    let bob = memories.pop().expect("two memories");
    let alice = memories.pop().expect("two memories");
    Ok((registry, alice, bob))
}

/// `n_bits` GHZ registers of `k` qubits, one qubit of each per agent.
pub fn distribute_ghz(k: usize, n_bits: usize, rng: &mut ChaCha8Rng) -> Result<(Registry, Vec<AgentMemory>)> {
    if k < 2 {
        return Err(ProtocolError::TooFewAgents(k));
    }
    check_bits(n_bits)?;
    let template = qsim::prepare_ghz(k)?;
    let mut registry = Registry::new();
    let mut memories: Vec<AgentMemory> = (0..k)
        .map(|i| AgentMemory { agent: Party::from_index(i), slots: Vec::with_capacity(n_bits) })
        .collect();
    let mut holders: Vec<usize> = (0..k).collect();
    for _ in 0..n_bits {
        let pair = registry.push(template.clone());
        holders.shuffle(rng);
        for (memory, &qubit) in memories.iter_mut().zip(&holders) {
            memory.slots.push(Slot { pair, qubit });
        }
    }
    Ok((registry, memories))
}

/// One agent reads its memory and looks up its actions.
///
/// Each slot is rotated by the agent's misalignment and measured in Σ; the
/// noise carrier then flips each recorded bit with probability ε.
pub fn agent_measure(
    memory: &AgentMemory,
    table: &ActionTable,
    noise: &NoiseModel,
    registry: &mut Registry,
    rng: &mut ChaCha8Rng,
) -> Result<(BitString, Vec<ActionToken>)> {
    if memory.slots.len() != table.entries.len() {
        return Err(ProtocolError::LengthMismatch { memory: memory.slots.len(), table: table.entries.len() });
    }
    noise.validate()?;
    let theta = noise.misalignment(memory.agent);
    let carrier = noise.carrier == memory.agent;
    let mut bits = Vec::with_capacity(memory.slots.len());
    for &slot in &memory.slots {
        let mut bit = registry.measure(memory.agent, slot, theta, rng)?;
        if carrier && rng.random::<f64>() < noise.flip_prob {
            bit ^= 1;
        }
        bits.push(bit);
    }
    let actions = bits.iter().enumerate().map(|(i, &b)| table.action(i, b).clone()).collect();
    Ok((BitString::new(bits), actions))
}

/// Outcome of one two-agent run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub alice_bits: BitString,
    pub bob_bits: BitString,
    pub alice_actions: Vec<ActionToken>,
    pub bob_actions: Vec<ActionToken>,
    pub alice_action_number: u64,
    pub bob_action_number: u64,
    pub agree: bool,
    /// The chosen strike, or [`AMBIGUOUS`] when the agents disagree.
    pub strike: String,
}

/// Which agent reads its memory first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MeasurementOrder {
    #[default]
    AliceFirst,
    BobFirst,
}

pub fn run_protocol(n_bits: usize, noise: &NoiseModel, seed: u64) -> Result<RunRecord> {
    run_protocol_ordered(n_bits, noise, seed, MeasurementOrder::AliceFirst)
}

pub fn run_protocol_ordered(
    n_bits: usize,
    noise: &NoiseModel,
    seed: u64,
    order: MeasurementOrder,
) -> Result<RunRecord> {
    let strikes = StrikeSet::numbered(n_bits)?;
    let mut outcome = execute(2, &strikes, noise, seed, order)?;
    let (bob_bits, bob_actions) = outcome.pop().expect("two agents");
    let (alice_bits, alice_actions) = outcome.pop().expect("two agents");
    let alice_action_number = alice_bits.to_number();
    let bob_action_number = bob_bits.to_number();
    let agree = alice_bits == bob_bits;
    let strike = if agree { strike_of(alice_action_number, &strikes)? } else { AMBIGUOUS.to_string() };
    Ok(RunRecord {
        seed,
        alice_bits,
        bob_bits,
        alice_actions,
        bob_actions,
        alice_action_number,
        bob_action_number,
        agree,
        strike,
    })
}

/// The shared run loop: distribute, brief, then measure agent by agent.
fn execute(
    k: usize,
    strikes: &StrikeSet,
    noise: &NoiseModel,
    seed: u64,
    order: MeasurementOrder,
) -> Result<Vec<(BitString, Vec<ActionToken>)>> {
    noise.validate()?;
    let mut rng = stream(seed);
    let (mut registry, memories) = distribute_ghz(k, strikes.n_bits(), &mut rng)?;
    let tables = precommunicate_agents(strikes, k, &mut rng);
    let mut sequence: Vec<usize> = (0..k).collect();
    if order == MeasurementOrder::BobFirst {
        sequence.swap(0, 1);
    }
    let mut results = vec![None; k];
    for i in sequence {
        results[i] = Some(agent_measure(&memories[i], &tables[i], noise, &mut registry, &mut rng)?);
    }
    Ok(results.into_iter().map(|r| r.expect("every agent measured")).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairAgreement {
    pub first: usize,
    pub second: usize,
    pub agree: bool,
}

/// Outcome of one run with `k` agents sharing GHZ registers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiRunRecord {
    pub seed: u64,
    pub k_agents: usize,
    pub agent_bits: Vec<BitString>,
    pub agent_actions: Vec<Vec<ActionToken>>,
    pub action_numbers: Vec<u64>,
    pub pairwise: Vec<PairAgreement>,
    pub all_agree: bool,
    pub strike: String,
}

pub fn run_multiagent(k_agents: usize, n_bits: usize, noise: &NoiseModel, seed: u64) -> Result<MultiRunRecord> {
    if k_agents < 2 {
        return Err(ProtocolError::TooFewAgents(k_agents));
    }
    let strikes = StrikeSet::numbered(n_bits)?;
    let outcome = execute(k_agents, &strikes, noise, seed, MeasurementOrder::AliceFirst)?;
    let (agent_bits, agent_actions): (Vec<BitString>, Vec<Vec<ActionToken>>) = outcome.into_iter().unzip();
    let action_numbers: Vec<u64> = agent_bits.iter().map(BitString::to_number).collect();
    let mut pairwise = Vec::new();
    for first in 0..k_agents {
        for second in first + 1..k_agents {
            pairwise.push(PairAgreement { first, second, agree: agent_bits[first] == agent_bits[second] });
        }
    }
    let all_agree = pairwise.iter().all(|p| p.agree);
    let strike = if all_agree { strike_of(action_numbers[0], &strikes)? } else { AMBIGUOUS.to_string() };
    Ok(MultiRunRecord { seed, k_agents, agent_bits, agent_actions, action_numbers, pairwise, all_agree, strike })
}

/// `trials` two-agent runs on seeds derived from `master_seed`.
pub fn run_batch(n_bits: usize, noise: &NoiseModel, master_seed: u64, trials: u64) -> Result<Vec<RunRecord>> {
    (0..trials)
        .into_par_iter()
        .map(|t| run_protocol(n_bits, noise, derive_seed(master_seed, t)))
        .collect()
}

pub fn run_multiagent_batch(
    k_agents: usize,
    n_bits: usize,
    noise: &NoiseModel,
    master_seed: u64,
    trials: u64,
) -> Result<Vec<MultiRunRecord>> {
    (0..trials)
        .into_par_iter()
        .map(|t| run_multiagent(k_agents, n_bits, noise, derive_seed(master_seed, t)))
        .collect()
}

/// Aggregate statistics over a batch of runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub trials: u64,
    pub n_bits: usize,
    pub k_agents: usize,
    /// Fraction of runs in which every agent holds the same string.
    pub agreement_rate: f64,
    /// Frequency of each of Alice's action numbers; omitted beyond 16 bits.
    pub action_number_histogram: Option<Vec<f64>>,
    /// Per bit position, the fraction of runs where Alice and Bob differ.
    pub per_bit_disagreement_rate: Vec<f64>,
}

/// Largest width for which [`BatchSummary`] carries a full histogram.
pub const HISTOGRAM_MAX_BITS: usize = 16;

impl BatchSummary {
    pub fn from_runs(n_bits: usize, runs: &[RunRecord]) -> Self {
        let strings: Vec<Vec<&BitString>> = runs.iter().map(|r| vec![&r.alice_bits, &r.bob_bits]).collect();
        Self::from_strings(n_bits, 2, &strings)
    }

    pub fn from_multi_runs(n_bits: usize, k_agents: usize, runs: &[MultiRunRecord]) -> Self {
        let strings: Vec<Vec<&BitString>> = runs.iter().map(|r| r.agent_bits.iter().collect()).collect();
        Self::from_strings(n_bits, k_agents, &strings)
    }

    fn from_strings(n_bits: usize, k_agents: usize, runs: &[Vec<&BitString>]) -> Self {
        let trials = runs.len() as u64;
        let denom = trials.max(1) as f64;
        let agreeing = runs.iter().filter(|r| r.iter().all(|s| *s == r[0])).count();
        let action_number_histogram = (n_bits <= HISTOGRAM_MAX_BITS).then(|| {
            let mut counts = vec![0u64; 1 << n_bits];
            for r in runs {
                counts[r[0].to_number() as usize] += 1;
            }
            counts.into_iter().map(|c| c as f64 / denom).collect()
        });
        let per_bit_disagreement_rate = (0..n_bits)
            .map(|i| runs.iter().filter(|r| r[0].get(i) != r[1].get(i)).count() as f64 / denom)
            .collect();
        Self {
            trials,
            n_bits,
            k_agents,
            agreement_rate: agreeing as f64 / denom,
            action_number_histogram,
            per_bit_disagreement_rate,
        }
    }
}

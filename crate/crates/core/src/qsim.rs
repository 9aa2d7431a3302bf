//! Pure-statevector simulation for the handful of small registers the
//! protocol needs: Bell pairs, GHZ and W triples, and the biseparable state.
//!
//! Conventions used everywhere in this crate:
//!
//! * qubit 0 is the leftmost symbol of a ket, so `|011⟩` has qubit 0 in `|0⟩`;
//! * a basis index is the big-endian reading of the ket, so `|011⟩` is index 3.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

/// Probability amplitude of one basis ket.
pub type Amplitude = Complex64;

/// Default upper bound on register width.
pub const DEFAULT_QUBIT_CAP: usize = 20;

/// Maximum deviation of Σ|amplitude|² from 1 tolerated by [`PureState`].
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Purity deficit below which a reduced state counts as pure.
pub const PURITY_TOLERANCE: f64 = 1e-9;

/// Branch probabilities below this are never sampled.
pub const IMPOSSIBLE_BRANCH: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QsimError {
    #[error("register of {requested} qubits exceeds the cap of {cap}")]
    TooManyQubits { requested: usize, cap: usize },
    #[error("a register needs at least one qubit")]
    NoQubits,
    #[error("GHZ needs at least 2 qubits, got {0}")]
    GhzTooSmall(usize),
    #[error("basis index {index} out of range for {num_qubits} qubits")]
    IndexOutOfRange { index: usize, num_qubits: usize },
    #[error("qubit {qubit} out of range for {num_qubits} qubits")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("control and target are both qubit {0}")]
    SameQubit(usize),
    #[error("amplitude vector of length {0} is not a power of two")]
    BadLength(usize),
    #[error("amplitude {0} is not finite")]
    NonFinite(usize),
    #[error("state norm² is {0}, expected 1")]
    NotNormalized(f64),
    #[error("invalid bipartition: {0}")]
    InvalidCut(String),
    #[error("outcome {bit} on qubit {qubit} has probability {probability:e}")]
    ImpossibleOutcome { qubit: usize, bit: u8, probability: f64 },
}

pub type Result<T> = std::result::Result<T, QsimError>;

/// A normalized state of `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PureState {
    num_qubits: usize,
    amplitudes: Vec<Amplitude>,
}

impl PureState {
    /// Builds a state from raw amplitudes under the default qubit cap.
    pub fn from_amplitudes(amplitudes: Vec<Amplitude>) -> Result<Self> {
        Self::from_amplitudes_with_cap(amplitudes, DEFAULT_QUBIT_CAP)
    }

    pub fn from_amplitudes_with_cap(amplitudes: Vec<Amplitude>, cap: usize) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(QsimError::BadLength(len));
        }
        let num_qubits = len.trailing_zeros() as usize;
        check_width(num_qubits, cap)?;
        if let Some(i) = amplitudes.iter().position(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(QsimError::NonFinite(i));
        }
        let state = Self { num_qubits, amplitudes };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(QsimError::NotNormalized(norm));
        }
        Ok(state)
    }

    /// Builds a state from real amplitudes, normalizing them first.
    ///
    /// Handy for writing states "ignoring normalization", e.g. `[0,0,0,1,0,1,1,0]`.
    pub fn from_unnormalized(weights: &[f64]) -> Result<Self> {
        let norm = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QsimError::NotNormalized(norm * norm));
        }
        Self::from_amplitudes(weights.iter().map(|w| Amplitude::new(w / norm, 0.0)).collect())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Amplitude {
        self.amplitudes[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `self ⊗ other`; `self` supplies the leading (leftmost) qubits.
    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let num_qubits = self.num_qubits + other.num_qubits;
        check_width(num_qubits, DEFAULT_QUBIT_CAP)?;
        let mut amplitudes = Vec::with_capacity(1 << num_qubits);
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        Ok(PureState { num_qubits, amplitudes })
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Amplitude {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Largest componentwise distance `|self_i − other_i|`.
    pub fn max_deviation(&self, other: &PureState) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            return Err(QsimError::QubitOutOfRange { qubit, num_qubits: self.num_qubits });
        }
        Ok(())
    }

    /// Bit mask selecting `qubit` inside a basis index.
    fn mask(&self, qubit: usize) -> usize {
        1 << (self.num_qubits - 1 - qubit)
    }
}

/// `|⟨a|b⟩|²`, clamped to `[0, 1]`; zero when the widths differ.
pub fn fidelity(a: &PureState, b: &PureState) -> f64 {
    if a.num_qubits != b.num_qubits {
        return 0.0;
    }
    a.inner(b).norm_sqr().min(1.0)
}

fn check_width(num_qubits: usize, cap: usize) -> Result<()> {
    if num_qubits == 0 {
        return Err(QsimError::NoQubits);
    }
    if num_qubits > cap {
        return Err(QsimError::TooManyQubits { requested: num_qubits, cap });
    }
    Ok(())
}

pub fn basis_state(num_qubits: usize, index: usize) -> Result<PureState> {
    basis_state_with_cap(num_qubits, index, DEFAULT_QUBIT_CAP)
}

pub fn basis_state_with_cap(num_qubits: usize, index: usize, cap: usize) -> Result<PureState> {
    check_width(num_qubits, cap)?;
    let dim = 1usize << num_qubits;
    if index >= dim {
        return Err(QsimError::IndexOutOfRange { index, num_qubits });
    }
    let mut amplitudes = vec![Amplitude::new(0.0, 0.0); dim];
    amplitudes[index] = Amplitude::new(1.0, 0.0);
    Ok(PureState { num_qubits, amplitudes })
}

/// `2^{-1/2}(|00⟩ + |11⟩)`.
pub fn prepare_bell() -> PureState {
    prepare_ghz(2).expect("two qubits are always within the cap")
}

/// `2^{-1/2}(|0…0⟩ + |1…1⟩)` on `k ≥ 2` qubits.
pub fn prepare_ghz(k: usize) -> Result<PureState> {
    if k < 2 {
        return Err(QsimError::GhzTooSmall(k));
    }
    check_width(k, DEFAULT_QUBIT_CAP)?;
    let dim = 1usize << k;
    let mut amplitudes = vec![Amplitude::new(0.0, 0.0); dim];
    let h = std::f64::consts::FRAC_1_SQRT_2;
    amplitudes[0] = Amplitude::new(h, 0.0);
    amplitudes[dim - 1] = Amplitude::new(h, 0.0);
    Ok(PureState { num_qubits: k, amplitudes })
}

/// The weight-two W triple `3^{-1/2}(|011⟩ + |101⟩ + |110⟩)`.
pub fn prepare_w() -> PureState {
    let mut amplitudes = vec![Amplitude::new(0.0, 0.0); 8];
    let w = 1.0 / 3f64.sqrt();
    for index in [3, 5, 6] {
        amplitudes[index] = Amplitude::new(w, 0.0);
    }
    PureState { num_qubits: 3, amplitudes }
}

/// `2^{-1/2}(|101⟩ + |110⟩) = |1⟩ ⊗ 2^{-1/2}(|01⟩ + |10⟩)`.
pub fn prepare_biseparable() -> PureState {
    let mut amplitudes = vec![Amplitude::new(0.0, 0.0); 8];
    let h = std::f64::consts::FRAC_1_SQRT_2;
    amplitudes[5] = Amplitude::new(h, 0.0);
    amplitudes[6] = Amplitude::new(h, 0.0);
    PureState { num_qubits: 3, amplitudes }
}

pub fn apply_cnot(state: &PureState, control: usize, target: usize) -> Result<PureState> {
    state.check_qubit(control)?;
    state.check_qubit(target)?;
    if control == target {
        return Err(QsimError::SameQubit(control));
    }
    let (cmask, tmask) = (state.mask(control), state.mask(target));
    let mut out = state.clone();
    for index in 0..state.amplitudes.len() {
        if index & cmask != 0 {
            out.amplitudes[index] = state.amplitudes[index ^ tmask];
        }
    }
    Ok(out)
}

/// Real rotation `[[cos θ/2, −sin θ/2], [sin θ/2, cos θ/2]]` on one qubit.
pub fn apply_y_rotation(state: &PureState, qubit: usize, theta: f64) -> Result<PureState> {
    state.check_qubit(qubit)?;
    let (s, c) = (theta / 2.0).sin_cos();
    let mask = state.mask(qubit);
    let mut out = state.clone();
    for i0 in (0..state.amplitudes.len()).filter(|i| i & mask == 0) {
        let i1 = i0 | mask;
        let (a0, a1) = (state.amplitudes[i0], state.amplitudes[i1]);
        out.amplitudes[i0] = a0 * c - a1 * s;
        out.amplitudes[i1] = a0 * s + a1 * c;
    }
    Ok(out)
}

/// Born probabilities `(p0, p1)` for a Σ-basis measurement of `qubit`.
pub fn measurement_probabilities(state: &PureState, qubit: usize) -> Result<(f64, f64)> {
    state.check_qubit(qubit)?;
    let mask = state.mask(qubit);
    let (mut p0, mut p1) = (0.0, 0.0);
    for (index, a) in state.amplitudes.iter().enumerate() {
        if index & mask == 0 {
            p0 += a.norm_sqr();
        } else {
            p1 += a.norm_sqr();
        }
    }
    let total = p0 + p1;
    Ok((p0 / total, p1 / total))
}

/// Result of a projective Σ-basis measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub bit: u8,
    pub probability: f64,
    pub post_state: PureState,
}

/// Projects `qubit` onto `bit` and renormalizes.
///
/// Fails for branches whose probability is below [`IMPOSSIBLE_BRANCH`].
pub fn collapse(state: &PureState, qubit: usize, bit: u8) -> Result<Outcome> {
    let (p0, p1) = measurement_probabilities(state, qubit)?;
    let probability = if bit == 0 { p0 } else { p1 };
    if probability < IMPOSSIBLE_BRANCH {
        return Err(QsimError::ImpossibleOutcome { qubit, bit, probability });
    }
    let mask = state.mask(qubit);
    let keep = if bit == 0 { 0 } else { mask };
    let scale = 1.0 / probability.sqrt();
    let amplitudes = state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(index, a)| if index & mask == keep { a * scale } else { Amplitude::new(0.0, 0.0) })
        .collect();
    Ok(Outcome {
        bit,
        probability,
        post_state: PureState { num_qubits: state.num_qubits, amplitudes },
    })
}

/// Samples a Σ-basis measurement of `qubit` from `rng`.
///
/// Exactly one `f64` is drawn from `rng` per call.
pub fn measure_qubit<R: Rng + ?Sized>(state: &PureState, qubit: usize, rng: &mut R) -> Result<Outcome> {
    let (p0, p1) = measurement_probabilities(state, qubit)?;
    let u: f64 = rng.random();
    let bit = if p1 < IMPOSSIBLE_BRANCH {
        0
    } else if p0 < IMPOSSIBLE_BRANCH {
        1
    } else if u < p0 {
        0
    } else {
        1
    };
    collapse(state, qubit, bit)
}

/// Separability verdict across a bipartition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Separability {
    pub product: bool,
    pub purity: f64,
}

/// Tests whether `state` factorizes across `side | complement`.
///
/// The reduced density matrix of the smaller side is formed explicitly and
/// its purity `Tr ρ²` compared against 1.
pub fn is_product(state: &PureState, side: &[usize]) -> Result<Separability> {
    let n = state.num_qubits;
    let mut in_side = vec![false; n];
    for &q in side {
        state.check_qubit(q)?;
        if in_side[q] {
            return Err(QsimError::InvalidCut(format!("qubit {q} listed twice")));
        }
        in_side[q] = true;
    }
    if side.is_empty() || side.len() == n {
        return Err(QsimError::InvalidCut("both sides must be nonempty".into()));
    }
    let keep: Vec<usize> = if side.len() * 2 <= n {
        side.to_vec()
    } else {
        (0..n).filter(|&q| !in_side[q]).collect()
    };
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();

    let rho = reduced_density_matrix(state, &keep, &traced);
    let purity: f64 = rho.iter().map(|x| x.norm_sqr()).sum();
    Ok(Separability { product: (1.0 - purity).abs() <= PURITY_TOLERANCE, purity })
}

/// Row-major reduced density matrix over `keep` (in the listed order).
fn reduced_density_matrix(state: &PureState, keep: &[usize], traced: &[usize]) -> Vec<Amplitude> {
    let n = state.num_qubits;
    let compose = |k: usize, t: usize| -> usize {
        let mut index = 0;
        for (pos, &q) in keep.iter().enumerate() {
            if k >> (keep.len() - 1 - pos) & 1 == 1 {
                index |= 1 << (n - 1 - q);
            }
        }
        for (pos, &q) in traced.iter().enumerate() {
            if t >> (traced.len() - 1 - pos) & 1 == 1 {
                index |= 1 << (n - 1 - q);
            }
        }
        index
    };
    let dk = 1usize << keep.len();
    let dt = 1usize << traced.len();
    let mut rho = vec![Amplitude::new(0.0, 0.0); dk * dk];
    for i in 0..dk {
        for j in 0..dk {
            rho[i * dk + j] = (0..dt)
                .map(|t| state.amplitudes[compose(i, t)] * state.amplitudes[compose(j, t)].conj())
                .sum();
        }
    }
    rho
}

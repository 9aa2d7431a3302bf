//! Exact search for the best non-interactive distillation of one shared bit.
//!
//! Alice holds `a`, uniform on `{0,1}^m`; Bob holds `b = a ⊕ e` where each
//! bit of `e` is set independently with probability ε. Each applies a
//! balanced Boolean function and we maximize the correlation
//! `E[(−1)^{f(a) ⊕ g(b)}]` over pairs `(f, g)`.
//!
//! Balance is required: a constant pair trivially "agrees" with correlation 1
//! while carrying no randomness.
//!
//! Correlations are never sampled. For a fixed pair the sum over the
//! `2^{2m}` atoms `(a, e)` collapses to integer coefficients `c_d` per noise
//! weight `d`, and the value is `2^{−m} Σ_d c_d ε^d (1−ε)^{m−d}`.

use serde::{Deserialize, Serialize};

use super::{AnalysisError, Result};

/// Largest supported substring length.
pub const NICD_MAX_M: usize = 4;

/// Truth table of `f: {0,1}^m → {0,1}`; bit `x` holds `f(x)`.
pub type TruthTable = u16;

fn sign(table: TruthTable, x: usize) -> i64 {
    if table >> x & 1 == 0 {
        1
    } else {
        -1
    }
}

/// All balanced functions on `m` inputs, in increasing truth-table order.
pub fn balanced_functions(m: usize) -> Vec<TruthTable> {
    let size = 1u32 << m;
    (0..1u32 << size)
        .filter(|t| t.count_ones() == size / 2)
        .map(|t| t as TruthTable)
        .collect()
}

/// Dictator `x ↦ x_i`, with input bit 0 the most significant.
fn dictator(m: usize, i: usize) -> TruthTable {
    (0..1usize << m)
        .filter(|x| x >> (m - 1 - i) & 1 == 1)
        .fold(0, |t, x| t | 1 << x)
}

/// `w[b][d] = Σ_{a : |a ⊕ b| = d} (−1)^{f(a)}`.
fn weights(m: usize, f: TruthTable) -> Vec<Vec<i64>> {
    let size = 1usize << m;
    (0..size)
        .map(|b| {
            let mut w = vec![0i64; m + 1];
            for a in 0..size {
                w[(a ^ b).count_ones() as usize] += sign(f, a);
            }
            w
        })
        .collect()
}

fn combine(m: usize, weights: &[Vec<i64>], g: TruthTable) -> Vec<i64> {
    let mut c = vec![0i64; m + 1];
    for (b, w) in weights.iter().enumerate() {
        let s = sign(g, b);
        for (cd, wd) in c.iter_mut().zip(w) {
            *cd += s * wd;
        }
    }
    c
}

/// Integer noise-weight coefficients of `E[(−1)^{f(a) ⊕ g(b)}]`, scaled by `2^m`.
pub fn pair_coefficients(m: usize, f: TruthTable, g: TruthTable) -> Vec<i64> {
    combine(m, &weights(m, f), g)
}

fn evaluate(m: usize, coefficients: &[i64], eps: f64) -> f64 {
    let total: f64 = coefficients
        .iter()
        .enumerate()
        .map(|(d, &c)| c as f64 * eps.powi(d as i32) * (1.0 - eps).powi((m - d) as i32))
        .sum();
    total / (1u64 << m) as f64
}

pub fn correlation_of(m: usize, f: TruthTable, g: TruthTable, eps: f64) -> f64 {
    evaluate(m, &pair_coefficients(m, f, g), eps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Achiever {
    /// `f(0…0) f(0…1) …`, one character per input in increasing order.
    pub f: String,
    pub g: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NicdResult {
    pub m: usize,
    pub eps: f64,
    pub max_agreement: f64,
    pub max_correlation: f64,
    pub achiever: Achiever,
    /// Number of `(f, g)` pairs whose correlation was evaluated.
    pub search_size: u64,
    /// Some matching dictator pair `(x_i, x_i)` attains the maximum.
    pub dictator_attains: bool,
}

fn render(m: usize, table: TruthTable) -> String {
    (0..1usize << m).map(|x| if table >> x & 1 == 1 { '1' } else { '0' }).collect()
}

/// Best balanced response to `f`: `g(b) = 0` on the half of inputs where
/// `E[(−1)^{f(a)} | b]` is largest.
fn best_response(m: usize, weights: &[Vec<i64>], eps: f64) -> TruthTable {
    let mut order: Vec<(f64, usize)> =
        weights.iter().enumerate().map(|(b, w)| (evaluate(m, w, eps), b)).collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    order[order.len() / 2..].iter().fold(0, |t, &(_, b)| t | 1 << b)
}

pub fn nicd_max_correlation(m: usize, eps: f64) -> Result<NicdResult> {
    if m == 0 || m > NICD_MAX_M {
        return Err(AnalysisError::UnsupportedLength(m));
    }
    if !(0.0..=0.5).contains(&eps) {
        return Err(AnalysisError::NoiseOutOfRange(eps));
    }
    let functions = balanced_functions(m);
    let mut best: Option<(f64, TruthTable, TruthTable)> = None;
    let mut search_size = 0u64;
    let mut consider = |value: f64, f, g| {
        search_size += 1;
        if best.is_none_or(|(v, _, _)| value > v) {
            best = Some((value, f, g));
        }
    };
    for &f in &functions {
        let w = weights(m, f);
        if m <= 3 {
            for &g in &functions {
                consider(evaluate(m, &combine(m, &w, g), eps), f, g);
            }
        } else {
            let g = best_response(m, &w, eps);
            consider(evaluate(m, &combine(m, &w, g), eps), f, g);
        }
    }
    let (max_correlation, mut f, mut g) = best.expect("at least one balanced function");

    let dictator_hit = (0..m)
        .map(|i| dictator(m, i))
        .find(|&d| correlation_of(m, d, d, eps) >= max_correlation);
    let description = match dictator_hit {
        Some(d) => {
            f = d;
            g = d;
            let i = (0..m).find(|&i| dictator(m, i) == d).expect("dictator index");
            format!("dictator x{i} / x{i}")
        }
        None => "exhaustive optimum".to_string(),
    };

    Ok(NicdResult {
        m,
        eps,
        max_agreement: (1.0 + max_correlation) / 2.0,
        max_correlation,
        achiever: Achiever { f: render(m, f), g: render(m, g), description },
        search_size,
        dictator_attains: dictator_hit.is_some(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateRow {
    pub m: usize,
    pub eps: f64,
    pub max_correlation: f64,
    /// `1 − 2ε`.
    pub bound: f64,
    pub passes: bool,
    pub dictator_attains: bool,
    pub search_size: u64,
    pub achiever: String,
}

/// Machine-readable evidence that no balanced pair beats `1 − 2ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub m: usize,
    pub tolerance: f64,
    pub all_pass: bool,
    pub rows: Vec<CertificateRow>,
}

pub const CERTIFICATE_TOLERANCE: f64 = 1e-9;

pub fn nicd_no_improvement_certificate(m: usize, eps_list: &[f64]) -> Result<Certificate> {
    if m > 3 {
        return Err(AnalysisError::NotExhaustive(m));
    }
    let rows = eps_list
        .iter()
        .map(|&eps| {
            let r = nicd_max_correlation(m, eps)?;
            let bound = 1.0 - 2.0 * eps;
            Ok(CertificateRow {
                m,
                eps,
                max_correlation: r.max_correlation,
                bound,
                passes: r.max_correlation <= bound + CERTIFICATE_TOLERANCE,
                dictator_attains: r.dictator_attains,
                search_size: r.search_size,
                achiever: r.achiever.description,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Certificate { m, tolerance: CERTIFICATE_TOLERANCE, all_pass: rows.iter().all(|r| r.passes), rows })
}

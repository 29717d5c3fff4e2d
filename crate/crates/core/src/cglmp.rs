//! The CGLMP Bell parameter `S_d` and the depolarization threshold algebra.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{
    analyzer_phase, fourier_joint_probability, JointState, MeasurementSetting,
};
use crate::qudit::BipartiteState;
use crate::tolerance::{LOCAL_BOUND, TABLE_SUM};

/// Joint outcome probabilities for the four basis pairs, indexed
/// `[alice_basis][bob_basis][l_A][l_B]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable", into = "RawTable")]
pub struct ProbabilityTable {
    dim: usize,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawTable {
    dim: usize,
    /// `blocks[a][b][l_A][l_B]`
    blocks: Vec<Vec<Vec<Vec<f64>>>>,
}

impl TryFrom<RawTable> for ProbabilityTable {
    type Error = Error;

    fn try_from(raw: RawTable) -> Result<Self> {
        let flat: Vec<f64> = raw
            .blocks
            .into_iter()
            .flatten()
            .flatten()
            .flatten()
            .collect();
        ProbabilityTable::new(raw.dim, flat)
    }
}

impl From<ProbabilityTable> for RawTable {
    fn from(table: ProbabilityTable) -> Self {
        let d = table.dim;
        let blocks = (0..2)
            .map(|a| {
                (0..2)
                    .map(|b| {
                        (0..d)
                            .map(|la| (0..d).map(|lb| table.get(a, b, la, lb)).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        RawTable { dim: d, blocks }
    }
}

pub(crate) fn table_index(d: usize, a: usize, b: usize, la: usize, lb: usize) -> usize {
    ((a * 2 + b) * d + la) * d + lb
}

impl ProbabilityTable {
    /// `probs` is flat in `[a][b][l_A][l_B]` order. Entries must lie in
    /// `[0, 1]` and each basis-pair block must sum to one.
    pub fn new(dim: usize, probs: Vec<f64>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        if probs.len() != 4 * dim * dim {
            return Err(Error::DimensionMismatch {
                expected: 4 * dim * dim,
                found: probs.len(),
            });
        }
        if let Some(bad) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidTable(format!("entry {bad} outside [0, 1]")));
        }
        let table = Self { dim, probs };
        for a in 0..2 {
            for b in 0..2 {
                let sum = table.block_sum(a, b);
                if (sum - 1.0).abs() > TABLE_SUM {
                    return Err(Error::InvalidTable(format!(
                        "block ({a}, {b}) sums to {sum}"
                    )));
                }
            }
        }
        Ok(table)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, a: usize, b: usize, la: usize, lb: usize) -> f64 {
        self.probs[table_index(self.dim, a, b, la, lb)]
    }

    /// The `d × d` block for basis pair `(a, b)`, row-major in `(l_A, l_B)`.
    pub fn block(&self, a: usize, b: usize) -> &[f64] {
        let start = table_index(self.dim, a, b, 0, 0);
        &self.probs[start..start + self.dim * self.dim]
    }

    pub fn block_sum(&self, a: usize, b: usize) -> f64 {
        self.block(a, b).iter().sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// `P(A_a − B_b ≡ r mod d)`, normalized by the block total.
    pub fn conditional(&self, a: usize, b: usize, residue: i64) -> f64 {
        let d = self.dim;
        let hits: f64 = (0..d)
            .map(|la| {
                let lb = (la as i64 - residue).rem_euclid(d as i64) as usize;
                self.get(a, b, la, lb)
            })
            .sum();
        hits / self.block_sum(a, b)
    }

    /// Reduced outcome distribution of Alice within block `(a, b)`.
    pub fn alice_marginal(&self, a: usize, b: usize) -> Vec<f64> {
        let block = self.block(a, b);
        block.chunks(self.dim).map(|row| row.iter().sum()).collect()
    }

    /// Reduced outcome distribution of Bob within block `(a, b)`.
    pub fn bob_marginal(&self, a: usize, b: usize) -> Vec<f64> {
        let d = self.dim;
        let block = self.block(a, b);
        (0..d)
            .map(|lb| (0..d).map(|la| block[la * d + lb]).sum())
            .collect()
    }
}

/// One weighted conditional probability `P(A_a − B_b ≡ residue)` of the
/// CGLMP sum. Terms stated as `P(B = A + x)` are folded to residue `−x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct CglmpTerm {
    pub weight: f64,
    pub alice_basis: usize,
    pub bob_basis: usize,
    pub residue: i64,
}

/// Expands the CGLMP expression into its `8 ⌊d/2⌋` signed terms.
pub(crate) fn cglmp_terms(d: usize) -> Vec<CglmpTerm> {
    let mut terms = Vec::with_capacity(8 * (d / 2));
    for k in 0..(d / 2) as i64 {
        let w = 1.0 - 2.0 * k as f64 / (d as f64 - 1.0);
        let mut push = |sign: f64, alice_basis, bob_basis, residue| {
            terms.push(CglmpTerm {
                weight: sign * w,
                alice_basis,
                bob_basis,
                residue,
            })
        };
        // P(A0 = B0 + k), P(B0 = A1 + k + 1), P(A1 = B1 + k), P(B1 = A0 + k)
        push(1.0, 0, 0, k);
        push(1.0, 1, 0, -(k + 1));
        push(1.0, 1, 1, k);
        push(1.0, 0, 1, -k);
        // P(A0 = B0 − k − 1), P(B0 = A1 − k), P(A1 = B1 − k − 1), P(B1 = A0 − k − 1)
        push(-1.0, 0, 0, -(k + 1));
        push(-1.0, 1, 0, k);
        push(-1.0, 1, 1, -(k + 1));
        push(-1.0, 0, 1, k + 1);
    }
    terms
}

/// A Bell-parameter value, with a standard error when estimated from counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdResult {
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stderr: Option<f64>,
}

impl SdResult {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            stderr: None,
        }
    }

    /// `(S − 2)/σ`, when a standard error is available.
    pub fn violation_sigmas(&self) -> Option<f64> {
        self.stderr
            .filter(|s| *s > 0.0)
            .map(|s| (self.value - LOCAL_BOUND) / s)
    }
}

/// Evaluates `S_d` on a probability table.
pub fn s_value(table: &ProbabilityTable) -> SdResult {
    let value = cglmp_terms(table.dim)
        .iter()
        .map(|t| t.weight * table.conditional(t.alice_basis, t.bob_basis, t.residue))
        .sum();
    SdResult::exact(value)
}

/// Joint outcome probabilities of `state` under the standard CGLMP analyzer
/// phases, for all `4d²` setting combinations.
pub fn quantum_table<S: JointState + ?Sized>(state: &S) -> Result<ProbabilityTable> {
    let d = state.dim();
    let mut probs = vec![0.0; 4 * d * d];
    for a in 0..2 {
        for b in 0..2 {
            for la in 0..d {
                let theta_a = analyzer_phase(&MeasurementSetting::alice(a, la, d)?);
                for lb in 0..d {
                    let theta_b = analyzer_phase(&MeasurementSetting::bob(b, lb, d)?);
                    // Rounding can push exact zeros a hair negative.
                    probs[table_index(d, a, b, la, lb)] =
                        fourier_joint_probability(state, theta_a, theta_b).clamp(0.0, 1.0);
                }
            }
        }
    }
    ProbabilityTable::new(d, probs)
}

/// Depolarization threshold `λ* = 2/S_pure` at which `S_d` drops to the
/// local bound.
pub fn critical_lambda(state: &BipartiteState) -> Result<f64> {
    critical_lambda_for(s_value(&quantum_table(state)?).value)
}

/// `λ* = 2/S_pure` for a known pure-state value.
pub fn critical_lambda_for(s_pure: f64) -> Result<f64> {
    if !(s_pure.is_finite() && s_pure >= LOCAL_BOUND) {
        return Err(Error::NoViolation(s_pure));
    }
    Ok(LOCAL_BOUND / s_pure)
}

fn check_delta_p(delta_p: f64) -> Result<()> {
    if !(delta_p > 0.0 && delta_p <= 1.0) {
        return Err(Error::out_of_range("delta_p", delta_p, "(0, 1]"));
    }
    Ok(())
}

/// Fringe visibility of a ququart pair depolarized to weight `λ`, for a
/// pure-state fringe of peak-to-trough height `ΔP`:
/// `V = 16ΔPλ / (2 + λ(16ΔP − 2))`.
pub fn visibility_from_lambda(lambda: f64, delta_p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::out_of_range("lambda", lambda, "[0, 1]"));
    }
    check_delta_p(delta_p)?;
    let scaled = 16.0 * delta_p;
    Ok(scaled * lambda / (2.0 + lambda * (scaled - 2.0)))
}

/// Inverse of [`visibility_from_lambda`].
pub fn lambda_from_visibility(visibility: f64, delta_p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&visibility) {
        return Err(Error::out_of_range("visibility", visibility, "[0, 1]"));
    }
    check_delta_p(delta_p)?;
    let scaled = 16.0 * delta_p;
    Ok(2.0 * visibility / (scaled * (1.0 - visibility) + 2.0 * visibility))
}

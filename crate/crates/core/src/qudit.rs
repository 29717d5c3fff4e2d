//! State algebra for time-bin qudits and qudit pairs.
//!
//! Amplitudes are indexed by time slot. A pair state over `d` slots per
//! party is stored as a full `d²` vector in row-major `(k_A, k_B)` order,
//! even when it is Schmidt-diagonal, because the optimal Bell-operator
//! eigenvector is not known to be diagonal in advance.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance::ALGEBRAIC;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::DimensionTooSmall(d));
    }
    Ok(())
}

/// Rotate the global phase so the first non-negligible amplitude is real and
/// non-negative. For states with `c₀ ≠ 0` this is the `c₀ ≥ 0` convention.
fn fix_global_phase(amplitudes: &mut DVector<Complex64>) {
    let scale = amplitudes.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let Some(anchor) = amplitudes.iter().position(|c| c.norm() > 1e-9 * scale) else {
        return;
    };
    let pivot = amplitudes[anchor];
    let rotation = pivot.conj() / pivot.norm();
    amplitudes.iter_mut().for_each(|c| *c *= rotation);
    amplitudes[anchor] = Complex64::new(pivot.norm(), 0.0);
}

fn normalize(amplitudes: &mut DVector<Complex64>) -> Result<()> {
    let norm = amplitudes.norm();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::ZeroNorm);
    }
    amplitudes.unscale_mut(norm);
    Ok(())
}

/// Single-party time-bin state `Σ_k c_k |k⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: DVector<Complex64>,
    normalized: bool,
}

impl PureState {
    /// Normalizes the given amplitudes. The global phase is left untouched.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        check_dim(amplitudes.len())?;
        let mut amplitudes = DVector::from_vec(amplitudes);
        normalize(&mut amplitudes)?;
        Ok(Self {
            amplitudes,
            normalized: true,
        })
    }

    /// Wraps amplitudes as-is, flagged as an unnormalized intermediate.
    pub fn unnormalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        check_dim(amplitudes.len())?;
        Ok(Self {
            amplitudes: DVector::from_vec(amplitudes),
            normalized: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Rank-one projector `|ψ⟩⟨ψ|`.
    pub fn projector(&self) -> DMatrix<Complex64> {
        &self.amplitudes * self.amplitudes.adjoint()
    }
}

/// Two-party state `Σ c_{k_A k_B} |k_A⟩ ⊗ |k_B⟩` with `d` slots per party.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    dim: usize,
    amplitudes: DVector<Complex64>,
}

impl BipartiteState {
    /// Normalizes `amplitudes` (length `d²`, row-major in `(k_A, k_B)`) and
    /// applies the global phase convention.
    pub fn from_amplitudes(dim: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_dim(dim)?;
        if amplitudes.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: amplitudes.len(),
            });
        }
        let mut amplitudes = DVector::from_vec(amplitudes);
        normalize(&mut amplitudes)?;
        fix_global_phase(&mut amplitudes);
        Ok(Self { dim, amplitudes })
    }

    pub(crate) fn from_vector(dim: usize, amplitudes: DVector<Complex64>) -> Result<Self> {
        Self::from_amplitudes(dim, amplitudes.iter().copied().collect())
    }

    /// `Σ_k c_k |k,k⟩`, normalized. Coefficients must be real and non-negative.
    pub fn schmidt_diagonal(coefficients: &[f64]) -> Result<Self> {
        let d = coefficients.len();
        check_dim(d)?;
        if let Some(&bad) = coefficients.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::out_of_range("schmidt coefficient", bad, "[0, inf)"));
        }
        let mut amplitudes = vec![ZERO; d * d];
        for (k, &c) in coefficients.iter().enumerate() {
            amplitudes[k * d + k] = Complex64::new(c, 0.0);
        }
        Self::from_amplitudes(d, amplitudes)
    }

    /// `(1/√d) Σ_k |k,k⟩`.
    pub fn maximally_entangled(d: usize) -> Result<Self> {
        check_dim(d)?;
        let c = 1.0 / (d as f64).sqrt();
        let mut amplitudes = DVector::from_element(d * d, ZERO);
        for k in 0..d {
            amplitudes[k * d + k] = Complex64::new(c, 0.0);
        }
        Ok(Self { dim: d, amplitudes })
    }

    /// Ququart pair with diagonal amplitudes `∝ (1, γ, γ, 1)`.
    pub fn gamma_state(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::out_of_range("gamma", gamma, "(0, inf)"));
        }
        let c0 = 1.0 / (2.0 * (1.0 + gamma * gamma)).sqrt();
        let mut amplitudes = DVector::from_element(16, ZERO);
        for (k, weight) in [1.0, gamma, gamma, 1.0].into_iter().enumerate() {
            amplitudes[k * 4 + k] = Complex64::new(c0 * weight, 0.0);
        }
        Ok(Self { dim: 4, amplitudes })
    }

    /// Pair state produced by a pump pulse train.
    ///
    /// The SHG field amplitude follows the input intensity and the pair
    /// amplitude follows the SHG field, so `c_k ∝ I_in,k`.
    pub fn from_pump(profile: &PumpProfile) -> Result<Self> {
        Self::schmidt_diagonal(profile.intensities())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, k_a: usize, k_b: usize) -> Complex64 {
        self.amplitudes[k_a * self.dim + k_b]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// Diagonal amplitudes `c_k = ⟨k,k|ψ⟩`.
    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.dim).map(|k| self.amplitude(k, k)).collect()
    }

    /// Largest `|c_{k_A k_B}|` with `k_A ≠ k_B`.
    pub fn max_off_diagonal(&self) -> f64 {
        let d = self.dim;
        (0..d * d)
            .filter(|i| i / d != i % d)
            .map(|i| self.amplitudes[i].norm())
            .fold(0.0, f64::max)
    }

    pub fn is_schmidt_diagonal(&self, tol: f64) -> bool {
        self.max_off_diagonal() <= tol
    }

    /// `Σ_k |⟨k,k|ψ⟩|²`.
    pub fn diagonal_weight(&self) -> f64 {
        self.diagonal().iter().map(|c| c.norm_sqr()).sum()
    }

    /// Reduced state of the first party, `Tr_B |ψ⟩⟨ψ|`.
    pub fn reduced_a(&self) -> DMatrix<Complex64> {
        let d = self.dim;
        DMatrix::from_fn(d, d, |i, j| {
            (0..d)
                .map(|k| self.amplitude(i, k) * self.amplitude(j, k).conj())
                .sum()
        })
    }

    /// Reduced state of the second party, `Tr_A |ψ⟩⟨ψ|`.
    pub fn reduced_b(&self) -> DMatrix<Complex64> {
        let d = self.dim;
        DMatrix::from_fn(d, d, |i, j| {
            (0..d)
                .map(|k| self.amplitude(k, i) * self.amplitude(k, j).conj())
                .sum()
        })
    }

    /// `|ψ⟩⟨ψ|` as a density operator.
    pub fn density(&self) -> DensityOperator {
        DensityOperator {
            dim: self.dim,
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }

    /// White-noise mixture `λ|ψ⟩⟨ψ| + (1 − λ)/d² · I`.
    pub fn depolarize(&self, lambda: f64) -> Result<DensityOperator> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::out_of_range("lambda", lambda, "[0, 1]"));
        }
        let n = self.dim * self.dim;
        let mut matrix = &self.amplitudes * self.amplitudes.adjoint() * Complex64::from(lambda);
        let noise = (1.0 - lambda) / n as f64;
        for i in 0..n {
            matrix[(i, i)] += noise;
        }
        Ok(DensityOperator {
            dim: self.dim,
            matrix,
        })
    }

    /// True if the two states agree amplitude-wise within `tol`.
    pub fn approx_eq(&self, other: &BipartiteState, tol: f64) -> bool {
        self.dim == other.dim
            && self
                .amplitudes
                .iter()
                .zip(other.amplitudes.iter())
                .all(|(a, b)| (a - b).norm() <= tol)
    }
}

/// Relative pump intensities `I_in,k` per time slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PumpProfile {
    intensities: Vec<f64>,
}

impl PumpProfile {
    pub fn new(intensities: Vec<f64>) -> Result<Self> {
        check_dim(intensities.len())?;
        if let Some(&bad) = intensities.iter().find(|i| !(i.is_finite() && **i >= 0.0)) {
            return Err(Error::out_of_range("pump intensity", bad, "[0, inf)"));
        }
        if intensities.iter().all(|&i| i == 0.0) {
            return Err(Error::ZeroNorm);
        }
        Ok(Self { intensities })
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }
}

impl TryFrom<Vec<f64>> for PumpProfile {
    type Error = Error;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<PumpProfile> for Vec<f64> {
    fn from(value: PumpProfile) -> Self {
        value.intensities
    }
}

/// Dense density operator on the `d²`-dimensional pair space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    dim: usize,
    matrix: DMatrix<Complex64>,
}

impl DensityOperator {
    /// Checks shape, hermiticity and unit trace.
    pub fn new(dim: usize, matrix: DMatrix<Complex64>) -> Result<Self> {
        check_dim(dim)?;
        let n = dim * dim;
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        let rho = Self { dim, matrix };
        if !rho.is_hermitian(ALGEBRAIC) {
            return Err(Error::InvalidTable(
                "density operator is not Hermitian".into(),
            ));
        }
        let trace = rho.trace();
        if (trace - 1.0).abs() > ALGEBRAIC {
            return Err(Error::out_of_range("trace", trace, "1 ± 1e-12"));
        }
        Ok(rho)
    }

    /// Per-party dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.matrix.nrows();
        (0..n).all(|i| {
            (0..n).all(|j| (self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm() <= tol)
        })
    }

    /// `Tr(O ρ)`; the imaginary part vanishes for Hermitian `O`.
    pub fn expectation(&self, operator: &DMatrix<Complex64>) -> Complex64 {
        (operator * &self.matrix).trace()
    }

    /// `⟨v|ρ|v⟩` for a pair-space vector.
    pub fn sandwich(&self, vector: &DVector<Complex64>) -> f64 {
        vector.dotc(&(&self.matrix * vector)).re
    }
}

//! The Bell operator whose expectation value is `S_d`, and the state that
//! maximizes it.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::cglmp::{cglmp_terms, table_index};
use crate::eigen::{is_hermitian, PowerIteration};
use crate::error::{Error, Result};
use crate::measurement::{analyzer_phase, fourier_state, MeasurementSetting};
use crate::qudit::BipartiteState;
use crate::tolerance::ALGEBRAIC;

/// Hermitian operator `Ŝ` on the `d²`-dimensional pair space with
/// `⟨ψ|Ŝ|ψ⟩ = S_d` for every pure state `ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BellOperator {
    dim: usize,
    matrix: DMatrix<Complex64>,
}

impl BellOperator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn expectation(&self, state: &BipartiteState) -> Result<f64> {
        if state.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: state.dim(),
            });
        }
        let psi = state.amplitudes();
        Ok(psi.dotc(&(&self.matrix * psi)).re)
    }
}

/// Builds `Ŝ = Σ_{a,b,l_A,l_B} w_{ab}(l_A, l_B) Π_A(a, l_A) ⊗ Π_B(b, l_B)`,
/// where `w` collects the signed weights of every CGLMP term whose outcome
/// congruence the pair `(l_A, l_B)` satisfies.
pub fn bell_operator(d: usize) -> Result<BellOperator> {
    if d < 2 {
        return Err(Error::DimensionTooSmall(d));
    }
    let mut weights = vec![0.0; 4 * d * d];
    for term in cglmp_terms(d) {
        for la in 0..d {
            let lb = (la as i64 - term.residue).rem_euclid(d as i64) as usize;
            weights[table_index(d, term.alice_basis, term.bob_basis, la, lb)] += term.weight;
        }
    }

    let n = d * d;
    let mut matrix = DMatrix::<Complex64>::zeros(n, n);
    for a in 0..2 {
        for b in 0..2 {
            for la in 0..d {
                let ket_a =
                    fourier_state(d, analyzer_phase(&MeasurementSetting::alice(a, la, d)?))?;
                for lb in 0..d {
                    let w = weights[table_index(d, a, b, la, lb)];
                    if w == 0.0 {
                        continue;
                    }
                    let ket_b =
                        fourier_state(d, analyzer_phase(&MeasurementSetting::bob(b, lb, d)?))?;
                    let (ka, kb) = (ket_a.amplitudes(), ket_b.amplitudes());
                    let joint = DVector::from_fn(n, |i, _| ka[i / d] * kb[i % d]);
                    matrix.gerc(Complex64::from(w), &joint, &joint, Complex64::new(1.0, 0.0));
                }
            }
        }
    }
    // Symmetrize away rounding so the hermiticity check downstream is exact.
    let matrix = (&matrix + matrix.adjoint()) * Complex64::from(0.5);
    debug_assert!(is_hermitian(&matrix, ALGEBRAIC));
    Ok(BellOperator { dim: d, matrix })
}

/// Result of maximizing `S_d` over pure states.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizedState {
    pub state: BipartiteState,
    /// Largest eigenvalue of the Bell operator.
    pub max_s: f64,
    /// Dimension of the top eigenspace.
    pub degeneracy: usize,
    pub iterations: usize,
}

impl OptimizedState {
    /// Schmidt coefficients `|c_k|` on the diagonal `|k,k⟩`.
    pub fn schmidt_coefficients(&self) -> Vec<f64> {
        self.state.diagonal().iter().map(|c| c.norm()).collect()
    }

    /// `|c₁|/|c₀|`, the modulation factor γ for a `(1, γ, γ, 1)` ququart state.
    pub fn gamma(&self) -> f64 {
        let c = self.schmidt_coefficients();
        c[1] / c[0]
    }
}

/// Dominant eigenpair of the Bell operator. When the top eigenvalue is
/// degenerate, the eigenvector with the largest weight on the `|k,k⟩`
/// subspace is returned.
pub fn optimize_state(d: usize) -> Result<OptimizedState> {
    optimize_state_with(d, &PowerIteration::default())
}

pub fn optimize_state_with(d: usize, solver: &PowerIteration) -> Result<OptimizedState> {
    let op = bell_operator(d)?;
    let space = solver.top_eigenspace(op.matrix())?;
    let mut iterations = space.iterations;
    let vector = if space.basis.len() == 1 {
        space.basis[0].clone()
    } else {
        // Maximize Σ_k |⟨k,k|v⟩|² over unit v in the eigenspace: the top
        // eigenvector of the Gram matrix G_ij = Σ_k conj(V_i[kk]) V_j[kk].
        let m = space.basis.len();
        let diag: Vec<usize> = (0..d).map(|k| k * d + k).collect();
        let gram = DMatrix::from_fn(m, m, |i, j| {
            diag.iter()
                .map(|&idx| space.basis[i][idx].conj() * space.basis[j][idx])
                .sum::<Complex64>()
        });
        let pick = solver.dominant(&gram)?;
        iterations += pick.iterations;
        space
            .basis
            .iter()
            .zip(pick.vector.iter())
            .fold(DVector::zeros(d * d), |acc, (v, y)| acc + v * *y)
    };
    Ok(OptimizedState {
        state: BipartiteState::from_vector(d, vector)?,
        max_s: space.value,
        degeneracy: space.basis.len(),
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expectation_matches_ideal_mes_values() {
        for (d, expected) in [(3, 2.8729), (4, 2.8962)] {
            let op = bell_operator(d).unwrap();
            let psi = BipartiteState::maximally_entangled(d).unwrap();
            assert!((op.expectation(&psi).unwrap() - expected).abs() < 5e-5);
        }
    }

    #[test]
    fn optimum_for_ququarts() {
        let opt = optimize_state(4).unwrap();
        assert!((opt.max_s - 2.9727).abs() < 5e-5);
        assert_eq!(opt.degeneracy, 1);
        assert!((opt.gamma() - 0.739).abs() < 1e-3);
        assert!(opt.state.max_off_diagonal() < 1e-6);
        let c = opt.schmidt_coefficients();
        assert!((c[0] - c[3]).abs() < 1e-6 && (c[1] - c[2]).abs() < 1e-6);
    }

    #[test]
    fn optimum_for_qubits_is_mes() {
        let opt = optimize_state(2).unwrap();
        assert!((opt.max_s - 2.0 * 2f64.sqrt()).abs() < 1e-10);
        let mes = BipartiteState::maximally_entangled(2).unwrap();
        assert!(opt.state.approx_eq(&mes, 1e-9));
    }

    #[test]
    fn optimum_for_qutrits() {
        let opt = optimize_state(3).unwrap();
        assert!((opt.max_s - 2.9149).abs() < 5e-5);
    }

    #[test]
    fn dimension_checks() {
        assert!(bell_operator(1).is_err());
        let op = bell_operator(3).unwrap();
        let psi = BipartiteState::maximally_entangled(4).unwrap();
        assert!(op.expectation(&psi).is_err());
    }
}

//! Power iteration for the top of the spectrum of dense Hermitian matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tolerance::{EIGEN_DEGENERACY, EIGEN_MAX_ITERATIONS, EIGEN_RESIDUAL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIteration {
    /// Stop once `‖Av − ρv‖` falls below this.
    pub residual: f64,
    pub max_iterations: usize,
    /// Eigenvalues within this distance of the top one belong to its eigenspace.
    pub degeneracy: f64,
}

impl Default for PowerIteration {
    fn default() -> Self {
        Self {
            residual: EIGEN_RESIDUAL,
            max_iterations: EIGEN_MAX_ITERATIONS,
            degeneracy: EIGEN_DEGENERACY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: DVector<Complex64>,
    pub iterations: usize,
}

/// Largest eigenvalue and an orthonormal basis of its eigenspace.
#[derive(Debug, Clone, PartialEq)]
pub struct TopEigenspace {
    pub value: f64,
    pub basis: Vec<DVector<Complex64>>,
    pub iterations: usize,
}

/// Gershgorin bound on the spectral radius.
fn gershgorin_radius(matrix: &DMatrix<Complex64>) -> f64 {
    matrix
        .row_iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn start_vector(n: usize, salt: u64) -> DVector<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 ^ salt);
    DVector::from_fn(n, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

fn orthogonalize(v: &mut DVector<Complex64>, against: &[DVector<Complex64>]) {
    for u in against {
        let overlap = u.dotc(v);
        v.axpy(-overlap, u, Complex64::new(1.0, 0.0));
    }
}

pub fn is_hermitian(matrix: &DMatrix<Complex64>, tol: f64) -> bool {
    let n = matrix.nrows();
    matrix.ncols() == n
        && (0..n).all(|i| (i..n).all(|j| (matrix[(i, j)] - matrix[(j, i)].conj()).norm() <= tol))
}

impl PowerIteration {
    /// Top eigenpair of `matrix` restricted to the orthogonal complement of
    /// `deflated` (orthonormal, approximate eigenvectors).
    ///
    /// Iterates on `A + cI` with `c` the Gershgorin radius, so the top of the
    /// spectrum dominates even when `A` has large negative eigenvalues.
    fn top_excluding(
        &self,
        matrix: &DMatrix<Complex64>,
        deflated: &[DVector<Complex64>],
    ) -> Result<EigenPair> {
        let n = matrix.nrows();
        let shift = gershgorin_radius(matrix);
        let mut v = start_vector(n, deflated.len() as u64);
        orthogonalize(&mut v, deflated);
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        v.unscale_mut(norm);

        for iteration in 1..=self.max_iterations {
            // Residual of the deflated operator P·A·P, so that error in the
            // deflated vectors does not stall convergence.
            let mut av = matrix * &v;
            orthogonalize(&mut av, deflated);
            let rayleigh = v.dotc(&av).re;
            let residual = (&av - &v * Complex64::from(rayleigh)).norm();
            if residual < self.residual {
                return Ok(EigenPair {
                    value: rayleigh,
                    vector: v,
                    iterations: iteration,
                });
            }
            let mut next = av + &v * Complex64::from(shift);
            orthogonalize(&mut next, deflated);
            let norm = next.norm();
            if norm == 0.0 {
                // v lies in the null space of A + cI: eigenvalue −c.
                return Ok(EigenPair {
                    value: -shift,
                    vector: v,
                    iterations: iteration,
                });
            }
            v = next.unscale(norm);
        }
        Err(Error::NoConvergence {
            method: "power iteration",
            iterations: self.max_iterations,
        })
    }

    /// Largest eigenvalue of a Hermitian matrix with one eigenvector.
    pub fn dominant(&self, matrix: &DMatrix<Complex64>) -> Result<EigenPair> {
        if !is_hermitian(matrix, 1e-12) {
            return Err(Error::InvalidTable("matrix is not Hermitian".into()));
        }
        self.top_excluding(matrix, &[])
    }

    /// Largest eigenvalue together with its full (possibly degenerate)
    /// eigenspace, found by repeated deflation.
    pub fn top_eigenspace(&self, matrix: &DMatrix<Complex64>) -> Result<TopEigenspace> {
        let top = self.dominant(matrix)?;
        let mut iterations = top.iterations;
        let mut basis = vec![top.vector];
        while basis.len() < matrix.nrows() {
            let next = self.top_excluding(matrix, &basis)?;
            iterations += next.iterations;
            if top.value - next.value > self.degeneracy {
                break;
            }
            basis.push(next.vector);
        }
        Ok(TopEigenspace {
            value: top.value,
            basis,
            iterations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn finds_top_not_largest_magnitude() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![c(-5.0), c(1.0), c(2.0)]));
        let pair = PowerIteration::default().dominant(&m).unwrap();
        assert!((pair.value - 2.0).abs() < 1e-12);
        assert!((pair.vector[2].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn detects_degenerate_top() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![c(3.0), c(1.0), c(3.0), c(0.5)]));
        let space = PowerIteration::default().top_eigenspace(&m).unwrap();
        assert_eq!(space.basis.len(), 2);
        assert!((space.value - 3.0).abs() < 1e-12);
        for v in &space.basis {
            assert!(v[1].norm() < 1e-10 && v[3].norm() < 1e-10);
        }
    }

    #[test]
    fn complex_hermitian() {
        // [[1, i], [-i, 1]] has eigenvalues 0 and 2.
        let i = Complex64::new(0.0, 1.0);
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0), i, -i, c(1.0)]);
        let pair = PowerIteration::default().dominant(&m).unwrap();
        assert!((pair.value - 2.0).abs() < 1e-12);
        let residual = (&m * &pair.vector - &pair.vector * c(2.0)).norm();
        assert!(residual < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(0.0), c(1.0)]);
        assert!(PowerIteration::default().dominant(&m).is_err());
    }

    #[test]
    fn reports_non_convergence() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0), c(0.999_999), c(0.0)]));
        let solver = PowerIteration {
            max_iterations: 5,
            ..Default::default()
        };
        assert!(matches!(
            solver.dominant(&m),
            Err(Error::NoConvergence { iterations: 5, .. })
        ));
    }
}

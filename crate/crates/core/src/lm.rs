//! Levenberg-Marquardt for small dense least-squares problems.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A least-squares problem `min ½‖r(p)‖²`.
pub trait LeastSquares {
    fn num_params(&self) -> usize;

    fn num_residuals(&self) -> usize;

    /// Weighted residuals `r_i(p)`.
    fn residuals(&self, params: &[f64]) -> DVector<f64>;

    /// `J_ij = ∂r_i/∂p_j`.
    fn jacobian(&self, params: &[f64]) -> DMatrix<f64>;

    /// Maps a trial point back into the feasible region. Identity by default.
    fn project(&self, _params: &mut [f64]) {}
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmConfig {
    pub initial_damping: f64,
    /// Damping multiplier after a rejected step.
    pub increase: f64,
    /// Damping divisor after an accepted step.
    pub decrease: f64,
    /// Damping beyond which no further progress is attempted.
    pub max_damping: f64,
    pub cost_rtol: f64,
    pub gradient_tol: f64,
    pub max_iterations: usize,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            initial_damping: 1e-3,
            increase: 10.0,
            decrease: 10.0,
            max_damping: 1e16,
            cost_rtol: 1e-12,
            gradient_tol: 1e-12,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmSolution {
    pub params: Vec<f64>,
    /// `½‖r‖²` at `params`.
    pub cost: f64,
    pub residuals: DVector<f64>,
    pub jacobian: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl LmSolution {
    /// `(JᵀJ)⁻¹`, if the normal matrix is positive definite.
    pub fn normal_inverse(&self) -> Option<DMatrix<f64>> {
        let jtj = self.jacobian.transpose() * &self.jacobian;
        jtj.cholesky().map(|c| c.inverse())
    }
}

fn cost_of(r: &DVector<f64>) -> f64 {
    0.5 * r.norm_squared()
}

/// Minimizes `½‖r(p)‖²` from `initial` with Marquardt's diagonal scaling.
///
/// Returns a solution with `converged == false` only when the iteration cap
/// is reached.
pub fn levenberg_marquardt<P: LeastSquares + ?Sized>(
    problem: &P,
    initial: &[f64],
    config: &LmConfig,
) -> Result<LmSolution> {
    let n = problem.num_params();
    if initial.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: initial.len(),
        });
    }
    let mut params = initial.to_vec();
    problem.project(&mut params);
    let mut residuals = problem.residuals(&params);
    let mut cost = cost_of(&residuals);
    let mut jacobian = problem.jacobian(&params);
    let mut damping = config.initial_damping;

    let finish = |params, cost, residuals, jacobian, iterations, converged| LmSolution {
        params,
        cost,
        residuals,
        jacobian,
        iterations,
        converged,
    };

    for iteration in 1..=config.max_iterations {
        let jt = jacobian.transpose();
        let gradient = &jt * &residuals;
        if gradient.norm() < config.gradient_tol || cost == 0.0 {
            return Ok(finish(
                params,
                cost,
                residuals,
                jacobian,
                iteration - 1,
                true,
            ));
        }
        let jtj = &jt * &jacobian;

        loop {
            let mut lhs = jtj.clone();
            for i in 0..n {
                lhs[(i, i)] += damping * jtj[(i, i)].max(f64::MIN_POSITIVE);
            }
            let step = match lhs.cholesky() {
                Some(chol) => chol.solve(&(-&gradient)),
                None => {
                    damping *= config.increase;
                    if damping > config.max_damping {
                        return Ok(finish(params, cost, residuals, jacobian, iteration, true));
                    }
                    continue;
                }
            };
            let mut trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p + s).collect();
            problem.project(&mut trial);
            let trial_residuals = problem.residuals(&trial);
            let trial_cost = cost_of(&trial_residuals);

            if trial_cost.is_finite() && trial_cost < cost {
                let relative = (cost - trial_cost) / cost;
                params = trial;
                residuals = trial_residuals;
                cost = trial_cost;
                jacobian = problem.jacobian(&params);
                damping = (damping / config.decrease).max(f64::MIN_POSITIVE);
                if relative < config.cost_rtol {
                    return Ok(finish(params, cost, residuals, jacobian, iteration, true));
                }
                break;
            }
            damping *= config.increase;
            if damping > config.max_damping {
                // No descent direction left at working precision.
                return Ok(finish(params, cost, residuals, jacobian, iteration, true));
            }
        }
    }
    Ok(finish(
        params,
        cost,
        residuals,
        jacobian,
        config.max_iterations,
        false,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Fits `y = a·exp(b·x)`.
    struct Exponential {
        x: Vec<f64>,
        y: Vec<f64>,
    }

    impl LeastSquares for Exponential {
        fn num_params(&self) -> usize {
            2
        }

        fn num_residuals(&self) -> usize {
            self.x.len()
        }

        fn residuals(&self, p: &[f64]) -> DVector<f64> {
            DVector::from_fn(self.x.len(), |i, _| {
                p[0] * (p[1] * self.x[i]).exp() - self.y[i]
            })
        }

        fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
            DMatrix::from_fn(self.x.len(), 2, |i, j| {
                let e = (p[1] * self.x[i]).exp();
                if j == 0 {
                    e
                } else {
                    p[0] * self.x[i] * e
                }
            })
        }
    }

    #[test]
    fn nonlinear_recovery() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let y = x.iter().map(|x| 3.0 * (-0.7 * x).exp()).collect();
        let problem = Exponential { x, y };
        let sol = levenberg_marquardt(&problem, &[1.0, 0.5], &LmConfig::default()).unwrap();
        assert!(sol.converged);
        assert!((sol.params[0] - 3.0).abs() < 1e-8);
        assert!((sol.params[1] + 0.7).abs() < 1e-8);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let y = x.iter().map(|x| 3.0 * (-0.7 * x).exp()).collect();
        let problem = Exponential { x, y };
        let config = LmConfig {
            max_iterations: 1,
            ..Default::default()
        };
        let sol = levenberg_marquardt(&problem, &[1.0, 0.5], &config).unwrap();
        assert!(!sol.converged);
        assert!(levenberg_marquardt(&problem, &[1.0], &config).is_err());
    }
}

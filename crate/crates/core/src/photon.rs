//! Coincidence statistics for Poissonian pair sources, lossy channels and
//! detectors that cannot resolve photon number.
//!
//! Pairs generated within one pump gate are treated as distinguishable and
//! independent. Each pair is described by the single-pair success
//! probabilities of the two postselected analyzers (`p_A`, `p_B`, `p_AB`).

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{analyzer_phase, Analyzer, MeasurementSetting, Party};
use crate::qudit::BipartiteState;

/// Source and channel parameters of a photon-counting run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseParams {
    /// Mean number of pairs per pumped gate.
    pub mu: f64,
    /// Alice's channel transmittance including detector efficiency.
    pub eta_a: f64,
    /// Bob's channel transmittance including detector efficiency.
    pub eta_b: f64,
    /// Dark-count probability per detector per gate in the postselected slot.
    #[serde(default)]
    pub dark_prob: f64,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseParams {
    pub fn new(mu: f64, eta_a: f64, eta_b: f64, dark_prob: f64, seed: u64) -> Result<Self> {
        let params = Self {
            mu,
            eta_a,
            eta_b,
            dark_prob,
            seed,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        check_mu(self.mu)?;
        check_eta(self.eta_a)?;
        check_eta(self.eta_b)?;
        if !(0.0..0.5).contains(&self.dark_prob) {
            return Err(Error::out_of_range("dark_prob", self.dark_prob, "[0, 0.5)"));
        }
        Ok(())
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu.is_finite() && mu >= 0.0) {
        return Err(Error::out_of_range("mu", mu, "[0, inf)"));
    }
    Ok(())
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::out_of_range("eta", eta, "(0, 1]"));
    }
    Ok(())
}

/// Single-pair success probabilities of Alice's and Bob's postselected
/// analyzers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementProbs {
    pub p_a: f64,
    pub p_b: f64,
    pub p_ab: f64,
}

impl MeasurementProbs {
    pub fn new(p_a: f64, p_b: f64, p_ab: f64) -> Result<Self> {
        for (name, p) in [("p_a", p_a), ("p_b", p_b), ("p_ab", p_ab)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::out_of_range(name, p, "[0, 1]"));
            }
        }
        if p_ab > p_a.min(p_b) + 1e-12 {
            return Err(Error::out_of_range("p_ab", p_ab, "[0, min(p_a, p_b)]"));
        }
        // p_B − p_AB ≤ 1 − p_A keeps P(B | not A) a probability.
        if p_b - p_ab > 1.0 - p_a + 1e-12 {
            return Err(Error::out_of_range(
                "p_b - p_ab",
                p_b - p_ab,
                "[0, 1 - p_a]",
            ));
        }
        Ok(Self { p_a, p_b, p_ab })
    }

    /// `P(B | A) = p_AB / p_A`.
    pub fn p_b_given_a(&self) -> f64 {
        if self.p_a == 0.0 {
            0.0
        } else {
            (self.p_ab / self.p_a).min(1.0)
        }
    }

    /// `P(B | Ā) = (p_B − p_AB)/(1 − p_A)`: Alice's photon arrived but missed
    /// her postselected slot.
    pub fn p_b_given_not_a(&self) -> f64 {
        if self.p_a >= 1.0 {
            0.0
        } else {
            ((self.p_b - self.p_ab) / (1.0 - self.p_a)).clamp(0.0, 1.0)
        }
    }
}

/// Success probabilities for the given discrete settings with ideal
/// analyzers. `p_A` includes the `1/d` postselection loss of the cascade.
pub fn measurement_probs(
    state: &BipartiteState,
    alice: &MeasurementSetting,
    bob: &MeasurementSetting,
) -> Result<MeasurementProbs> {
    measurement_probs_with(state, &Analyzer::ideal(state.dim())?, alice, bob)
}

pub fn measurement_probs_with(
    state: &BipartiteState,
    analyzer: &Analyzer,
    alice: &MeasurementSetting,
    bob: &MeasurementSetting,
) -> Result<MeasurementProbs> {
    if alice.party() != Party::Alice || bob.party() != Party::Bob {
        return Err(Error::InvalidTable(
            "measurement needs one Alice and one Bob setting".into(),
        ));
    }
    for dim in [alice.dim(), bob.dim()] {
        if dim != state.dim() {
            return Err(Error::DimensionMismatch {
                expected: state.dim(),
                found: dim,
            });
        }
    }
    measurement_probs_at(state, analyzer, analyzer_phase(alice), analyzer_phase(bob))
}

/// Success probabilities at arbitrary analyzer phases.
pub fn measurement_probs_at(
    state: &BipartiteState,
    analyzer: &Analyzer,
    theta_a: f64,
    theta_b: f64,
) -> Result<MeasurementProbs> {
    let d = state.dim();
    if analyzer.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: analyzer.dim(),
        });
    }
    let row_a = analyzer.detection_row(theta_a)?;
    let row_b = analyzer.detection_row(theta_b)?;
    let psi = state.amplitudes();

    // Amplitude left on Bob's side after Alice's postselection, and vice versa.
    let after_a: DVector<Complex64> = DVector::from_fn(d, |kb, _| {
        (0..d).map(|ka| row_a[ka] * psi[ka * d + kb]).sum()
    });
    let after_b: DVector<Complex64> = DVector::from_fn(d, |ka, _| {
        (0..d).map(|kb| row_b[kb] * psi[ka * d + kb]).sum()
    });

    let p_a = after_a.norm_squared();
    let p_b = after_b.norm_squared();
    let p_ab = (0..d)
        .map(|kb| row_b[kb] * after_a[kb])
        .sum::<Complex64>()
        .norm_sqr();
    MeasurementProbs::new(p_a.min(1.0), p_b.min(1.0), p_ab.min(p_a).min(p_b))
}

/// Coincidence probability per gate with equal transmittance on both arms:
/// `1 − e^{−μηp_A} − e^{−μηp_B} + e^{−μη(p_A + p_B − ηp_AB)}`.
pub fn exact_coincidence(mu: f64, eta: f64, probs: &MeasurementProbs) -> Result<f64> {
    exact_coincidence_asym(mu, eta, eta, probs)
}

/// Coincidence probability per gate with per-arm transmittances.
///
/// Same inclusion-exclusion as the symmetric case: per pair, Alice fires
/// with `η_A p_A`, Bob with `η_B p_B` and both with `η_A η_B p_AB`. Evaluated
/// as `(1 − e^{−a})(1 − e^{−b}) + e^{−a−b}(e^{δ} − 1)` to avoid cancellation
/// when the rate is tiny.
pub fn exact_coincidence_asym(
    mu: f64,
    eta_a: f64,
    eta_b: f64,
    probs: &MeasurementProbs,
) -> Result<f64> {
    check_mu(mu)?;
    check_eta(eta_a)?;
    check_eta(eta_b)?;
    let a = mu * eta_a * probs.p_a;
    let b = mu * eta_b * probs.p_b;
    let both = mu * eta_a * eta_b * probs.p_ab;
    Ok((-a).exp_m1() * (-b).exp_m1() + (-a - b).exp() * both.exp_m1())
}

/// Low-transmittance approximation `μη²(p_AB + μ p_A p_B)`.
pub fn approx_coincidence(mu: f64, eta: f64, probs: &MeasurementProbs) -> Result<f64> {
    check_mu(mu)?;
    check_eta(eta)?;
    Ok(mu * eta * eta * (probs.p_ab + mu * probs.p_a * probs.p_b))
}

/// Fringe visibility limited by multi-pair accidentals for a ququart state
/// with modulation factor γ: `(1+γ)² / ((1+γ)² + μ(1+γ²))`.
pub fn multiphoton_visibility(mu: f64, gamma: f64) -> Result<f64> {
    check_mu(mu)?;
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::out_of_range("gamma", gamma, "(0, 1]"));
    }
    let peak = (1.0 + gamma).powi(2);
    Ok(peak / (peak + mu * (1.0 + gamma * gamma)))
}

/// Equivalent white-noise weight of multi-pair accidentals, `1/(1+μ)`.
pub fn multiphoton_lambda(mu: f64) -> Result<f64> {
    check_mu(mu)?;
    Ok(1.0 / (1.0 + mu))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oes() -> BipartiteState {
        BipartiteState::gamma_state(0.739).unwrap()
    }

    #[test]
    fn oes_single_side_probabilities() {
        let psi = oes();
        for (a, la, b, lb) in [(0, 0, 0, 0), (1, 2, 0, 3), (0, 3, 1, 1)] {
            let sa = MeasurementSetting::alice(a, la, 4).unwrap();
            let sb = MeasurementSetting::bob(b, lb, 4).unwrap();
            let probs = measurement_probs(&psi, &sa, &sb).unwrap();
            assert!((probs.p_a - 1.0 / 16.0).abs() < 1e-12);
            assert!((probs.p_b - 1.0 / 16.0).abs() < 1e-12);
            let p_joint = crate::measurement::joint_outcome_probability(&psi, &sa, &sb).unwrap();
            assert!((probs.p_ab - p_joint / 16.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mes_fringe_zero() {
        let psi = BipartiteState::maximally_entangled(4).unwrap();
        let analyzer = Analyzer::ideal(4).unwrap();
        let probs = measurement_probs_at(&psi, &analyzer, 0.4, std::f64::consts::PI - 0.4).unwrap();
        assert!(probs.p_ab < 1e-15);
        assert!((probs.p_a - 1.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn measurement_probs_rejects_inconsistent_values() {
        assert!(MeasurementProbs::new(0.1, 0.1, 0.2).is_err());
        assert!(MeasurementProbs::new(1.2, 0.1, 0.0).is_err());
        let psi = oes();
        let sa = MeasurementSetting::alice(0, 0, 2).unwrap();
        let sb = MeasurementSetting::bob(0, 0, 4).unwrap();
        assert!(measurement_probs(&psi, &sa, &sb).is_err());
    }

    #[test]
    fn closed_form_limits() {
        let probs = MeasurementProbs::new(1.0 / 16.0, 1.0 / 16.0, 0.2445 / 16.0).unwrap();
        assert_eq!(exact_coincidence(0.0, 0.5, &probs).unwrap(), 0.0);

        let accidental = MeasurementProbs::new(1.0 / 16.0, 1.0 / 16.0, 0.0).unwrap();
        let (mu, eta) = (1e-3, 1e-2);
        let exact = exact_coincidence(mu, eta, &accidental).unwrap();
        let series = (mu * eta).powi(2) / 256.0;
        assert!((exact / series - 1.0).abs() < 1e-4);
        assert_eq!(approx_coincidence(mu, eta, &accidental).unwrap(), series);
        assert!(exact_coincidence(-1.0, 0.5, &probs).is_err());
        assert!(exact_coincidence(0.1, 0.0, &probs).is_err());
    }

    #[test]
    fn multiphoton_examples() {
        assert_eq!(multiphoton_visibility(0.0, 0.739).unwrap(), 1.0);
        assert!((multiphoton_visibility(0.01, 0.739).unwrap() - 0.99491).abs() < 5e-6);
        assert!((multiphoton_visibility(0.02, 1.0).unwrap() - 4.0 / 4.04).abs() < 1e-15);
        assert_eq!(multiphoton_lambda(0.0).unwrap(), 1.0);
        let lambda = multiphoton_lambda(0.01).unwrap();
        assert_eq!((lambda * 1000.0).round() / 1000.0, 0.990);
        assert!((lambda * 2.9727 - 2.943).abs() < 1e-3);
    }
}

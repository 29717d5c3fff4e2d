//! Slow reference implementations used to cross-check the closed forms.

use crate::cglmp::{quantum_table, s_value};
use crate::error::Result;
use crate::photon::MeasurementProbs;
use crate::qudit::BipartiteState;

fn binomial_pmf(n: u64, k: u64, p: f64) -> f64 {
    let mut coeff = 1.0;
    for i in 0..k {
        coeff *= (n - i) as f64 / (i + 1) as f64;
    }
    coeff * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

/// Coincidence probability per gate by explicit summation over the pair
/// number `N ~ Poisson(μ)`, the number `n ~ Bin(N, η_A)` of Alice photons
/// surviving loss, and the number `n_A ~ Bin(n, p_A)` of those landing in
/// her postselected slot. Given `(N, n, n_A)`, Bob fires with probability
/// `1 − (1 − η_B p_{B|A})^{n_A} (1 − η_B p_{B|Ā})^{n − n_A} (1 − η_B p_B)^{N − n}`.
///
/// The Poisson sum stops once its geometric tail bound drops below
/// `1e-18` of the accumulated value.
pub fn brute_force_coincidence(mu: f64, eta_a: f64, eta_b: f64, probs: &MeasurementProbs) -> f64 {
    let log_a = (-eta_b * probs.p_b_given_a()).ln_1p();
    let log_not_a = (-eta_b * probs.p_b_given_not_a()).ln_1p();
    let log_lost = (-eta_b * probs.p_b).ln_1p();

    let mut total = 0.0;
    let mut poisson = (-mu).exp();
    for big_n in 0u64.. {
        if big_n > 0 {
            poisson *= mu / big_n as f64;
        }
        if poisson == 0.0 {
            break;
        }
        let mut inner = 0.0;
        for n in 1..=big_n {
            let survive = binomial_pmf(big_n, n, eta_a);
            let mut given_n = 0.0;
            for n_a in 1..=n {
                let log_miss = n_a as f64 * log_a
                    + (n - n_a) as f64 * log_not_a
                    + (big_n - n) as f64 * log_lost;
                given_n += binomial_pmf(n, n_a, probs.p_a) * -log_miss.exp_m1();
            }
            inner += survive * given_n;
        }
        total += poisson * inner;

        let ratio = mu / (big_n + 1) as f64;
        if big_n as f64 > mu && ratio < 1.0 {
            let tail = poisson * ratio / (1.0 - ratio);
            if tail < 1e-18 * total {
                break;
            }
        }
    }
    total
}

/// Depolarization threshold found by bisecting `S_d` of the mixed state
/// `λ|ψ⟩⟨ψ| + (1 − λ)I/d²` evaluated from its full probability table.
pub fn bisect_critical_lambda(state: &BipartiteState, tol: f64) -> Result<f64> {
    let s_at = |lambda: f64| -> Result<f64> {
        Ok(s_value(&quantum_table(&state.depolarize(lambda)?)?).value)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if s_at(mid)? > 2.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

use cglmp::oracles::bisect_critical_lambda;
use cglmp::{
    bell_operator, critical_lambda, lambda_from_visibility, optimize_state, quantum_table, s_value,
    visibility_from_lambda, BipartiteState, ProbabilityTable,
};
use nalgebra::SymmetricEigen;
use proptest::prelude::*;

fn random_table(d: usize) -> impl Strategy<Value = ProbabilityTable> {
    prop::collection::vec(0.0f64..1.0, 4 * d * d).prop_filter_map("empty block", move |raw| {
        let mut probs = Vec::with_capacity(raw.len());
        for block in raw.chunks(d * d) {
            let total: f64 = block.iter().sum();
            if total < 1e-6 {
                return None;
            }
            probs.extend(block.iter().map(|p| p / total));
        }
        ProbabilityTable::new(d, probs).ok()
    })
}

/// `R[a][b][l_A][l_B] = T[a][1−b][σ_a(l_A)][−l_B]` with `σ₀(l) = −l` and
/// `σ₁(l) = −(l + 1)`: outcomes mirrored and Bob's bases swapped.
fn reflect(table: &ProbabilityTable) -> ProbabilityTable {
    let d = table.dim();
    let m = |x: i64| x.rem_euclid(d as i64) as usize;
    let mut probs = Vec::with_capacity(4 * d * d);
    for a in 0..2 {
        for b in 0..2 {
            for la in 0..d as i64 {
                for lb in 0..d as i64 {
                    let sa = if a == 0 { m(-la) } else { m(-(la + 1)) };
                    probs.push(table.get(a, 1 - b, sa, m(-lb)));
                }
            }
        }
    }
    ProbabilityTable::new(d, probs).unwrap()
}

proptest! {
    #[test]
    fn s_is_invariant_under_outcome_reflection(table in (2usize..7).prop_flat_map(random_table)) {
        let s = s_value(&table).value;
        prop_assert!((s_value(&reflect(&table)).value - s).abs() < 1e-10);
    }

    #[test]
    fn visibility_round_trip(lambda in 0.0f64..=1.0, delta_p in 0.05f64..=0.25) {
        let v = visibility_from_lambda(lambda, delta_p).unwrap();
        prop_assert!((lambda_from_visibility(v, delta_p).unwrap() - lambda).abs() < 1e-10);
    }
}

#[test]
fn reflection_maps_quantum_tables_to_themselves_in_value() {
    for d in [2, 3, 4, 5] {
        let table = quantum_table(&BipartiteState::maximally_entangled(d).unwrap()).unwrap();
        assert!((s_value(&reflect(&table)).value - s_value(&table).value).abs() < 1e-10);
    }
}

#[test]
fn s_is_linear_in_depolarization() {
    for psi in [
        BipartiteState::maximally_entangled(3).unwrap(),
        BipartiteState::gamma_state(0.739).unwrap(),
    ] {
        let pure = s_value(&quantum_table(&psi).unwrap()).value;
        for lambda in [0.25, 0.5, 0.75] {
            let mixed = s_value(&quantum_table(&psi.depolarize(lambda).unwrap()).unwrap()).value;
            assert!((mixed - lambda * pure).abs() < 1e-9);
        }
    }
}

#[test]
fn operator_expectation_matches_table_evaluation() {
    for d in [2, 3, 4, 5] {
        let op = bell_operator(d).unwrap();
        let coeffs: Vec<f64> = (0..d).map(|k| 1.0 + 0.3 * k as f64).collect();
        let psi = BipartiteState::schmidt_diagonal(&coeffs).unwrap();
        let from_table = s_value(&quantum_table(&psi).unwrap()).value;
        assert!((op.expectation(&psi).unwrap() - from_table).abs() < 1e-10);
    }
}

#[test]
fn power_iteration_agrees_with_dense_eigensolver() {
    for d in [2, 3, 4, 5, 8] {
        let op = bell_operator(d).unwrap();
        let reference = SymmetricEigen::new(op.matrix().clone());
        let top = reference
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let opt = optimize_state(d).unwrap();
        assert!(
            (opt.max_s - top).abs() < 1e-9,
            "d = {d}: {} vs {top}",
            opt.max_s
        );

        let mes = BipartiteState::maximally_entangled(d).unwrap();
        assert!(opt.max_s >= op.expectation(&mes).unwrap() - 1e-12);

        // The returned vector is an eigenvector of the top eigenvalue.
        let v = opt.state.amplitudes();
        let residual = (op.matrix() * v - v * num_complex::Complex64::from(opt.max_s)).norm();
        assert!(residual < 1e-9);
    }
}

#[test]
fn optimized_ququart_structure() {
    let opt = optimize_state(4).unwrap();
    let c = opt.schmidt_coefficients();
    assert!((c[0] - c[3]).abs() < 1e-6);
    assert!((c[1] - c[2]).abs() < 1e-6);
    assert!(opt.state.max_off_diagonal() < 1e-6);
    assert!((opt.gamma() - 0.739).abs() < 1e-3);
    // The (1, γ, γ, 1) state with this γ attains the same value.
    let rebuilt = BipartiteState::gamma_state(opt.gamma()).unwrap();
    assert!((s_value(&quantum_table(&rebuilt).unwrap()).value - opt.max_s).abs() < 1e-9);
}

#[test]
fn critical_lambda_matches_bisection() {
    for psi in [
        BipartiteState::maximally_entangled(4).unwrap(),
        BipartiteState::gamma_state(0.739).unwrap(),
        BipartiteState::maximally_entangled(3).unwrap(),
    ] {
        let closed = critical_lambda(&psi).unwrap();
        let bisected = bisect_critical_lambda(&psi, 1e-12).unwrap();
        assert!((closed - bisected).abs() < 1e-10);
    }
    let mes = critical_lambda(&BipartiteState::maximally_entangled(4).unwrap()).unwrap();
    assert!((mes - 0.69055).abs() < 1e-4);
}

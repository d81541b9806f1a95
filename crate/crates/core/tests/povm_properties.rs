use proptest::prelude::*;
use qmud::povm::{
    branch_pair, build_povm, determinant, measurement_block, outcome_probabilities, sample_outcome,
    solve_alpha_for_beta, symmetric_gain, Outcome,
};
use qmud::registers::QubitState;
use qmud::{rng, BasisIndex, SparseRegister};

const POPULATIONS: [usize; 5] = [1, 2, 4, 16, 256];

fn betas() -> impl Iterator<Item = f64> {
    (0..=10).map(|i| f64::from(i) / 10.0)
}

#[test]
fn boundary_triples_are_complete_and_singular() {
    for n in POPULATIONS {
        for beta in betas() {
            let alpha = solve_alpha_for_beta(beta, n).unwrap();
            let t = build_povm(alpha, beta, n).unwrap();
            assert!(t.completeness_error() <= 1e-12, "n={n} beta={beta}");
            assert!(t.min_eigenvalue() >= -1e-12, "n={n} beta={beta}");
            assert!(determinant(&t.e3).abs() <= 1e-10, "n={n} beta={beta}");
        }
    }
}

#[test]
fn forbidden_outcomes_are_never_sampled() {
    let mut stream = rng::stream(2024);
    for n in [2usize, 4, 16] {
        let a = symmetric_gain(n);
        let t = build_povm(a, a, n).unwrap();
        for _ in 0..200_000 {
            assert_ne!(
                sample_outcome(&t, &QubitState::ABSENT, &mut stream),
                Outcome::E1
            );
            assert_ne!(
                sample_outcome(&t, &QubitState::present(n), &mut stream),
                Outcome::E2
            );
        }
    }
}

#[test]
fn symmetric_gain_follows_series() {
    let mut previous = f64::INFINITY;
    for n in 1..=2000usize {
        let a = symmetric_gain(n);
        assert!(a < previous);
        previous = a;
        if n >= 50 {
            // a = 1/2 + 1/(8N) + O(1/N^2)
            let series = 0.5 + 1.0 / (8.0 * n as f64);
            assert!((a - series).abs() < 1.0 / (n as f64).powi(2), "n={n}");
        }
    }
    assert!(symmetric_gain(1000) - 0.5 < 2e-4);
}

#[test]
fn confirm_branch_doubles_detection_probability() {
    let mut previous = 0.0;
    for n in [100usize, 1000, 1_000_000] {
        let pair = branch_pair(n).unwrap();
        let a = symmetric_gain(n);
        let sym = build_povm(a, a, n).unwrap();
        let present = QubitState::present(n);
        let ratio = outcome_probabilities(&pair.confirm, &present).p1
            / outcome_probabilities(&sym, &present).p1;
        assert!((ratio - 1.0 / a).abs() < 1e-9 * ratio);
        assert!(ratio > 1.8 && ratio < 2.0);
        assert!(ratio > previous);
        previous = ratio;
    }
}

#[test]
fn blocks_repeat_with_geometric_decay() {
    let reg = SparseRegister::new(8, (0..4).map(BasisIndex)).unwrap();
    let mut stream = rng::stream(5);
    let runs = 100_000u32;
    for m in [1u32, 2, 3, 5] {
        let mut inconclusive = 0u32;
        for _ in 0..runs {
            if (0..m).all(|_| {
                measurement_block(&reg, BasisIndex(2), &mut stream).unwrap() == Outcome::E3
            }) {
                inconclusive += 1;
            }
        }
        let p = 0.75f64.powi(m as i32);
        let sd = (f64::from(runs) * p * (1.0 - p)).sqrt();
        assert!(
            (f64::from(inconclusive) - f64::from(runs) * p).abs() <= 3.0 * sd,
            "m={m}"
        );
    }
}

proptest! {
    #[test]
    fn boundary_triples_are_valid_povms(beta in 0.0f64..=1.0, n in 1usize..10_000) {
        let alpha = solve_alpha_for_beta(beta, n).unwrap();
        prop_assert!((0.0..=1.0).contains(&alpha));
        let t = build_povm(alpha, beta, n).unwrap();
        prop_assert!(t.completeness_error() <= 1e-12);
        prop_assert!(t.min_eigenvalue() >= -1e-9);
        for state in [QubitState::ABSENT, QubitState::present(n)] {
            let p = outcome_probabilities(&t, &state);
            prop_assert!((p.total() - 1.0).abs() <= 1e-12);
            prop_assert!(p.p1 >= 0.0 && p.p2 >= 0.0 && p.p3 >= 0.0);
        }
        prop_assert_eq!(outcome_probabilities(&t, &QubitState::ABSENT).p1, 0.0);
        prop_assert!(outcome_probabilities(&t, &QubitState::present(n)).p2 <= 1e-12);
        // Gains as seen by the two states.
        let nf = n as f64;
        prop_assert!((outcome_probabilities(&t, &QubitState::present(n)).p1 - alpha / nf).abs() <= 1e-12);
        if n > 1 {
            prop_assert!((outcome_probabilities(&t, &QubitState::ABSENT).p2 - beta / nf).abs() <= 1e-12);
        }
    }

    #[test]
    fn gains_beyond_the_boundary_are_rejected(beta in 0.05f64..=1.0, n in 2usize..1000, excess in 0.01f64..0.5) {
        let alpha = solve_alpha_for_beta(beta, n).unwrap() + excess;
        prop_assume!(alpha <= 1.0);
        prop_assert!(build_povm(alpha, beta, n).is_err());
    }
}

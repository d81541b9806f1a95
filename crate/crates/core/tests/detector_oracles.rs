mod common;

use proptest::prelude::*;
use qmud::cdma::{self, CorrelationMatrix, SoftOutputs};
use qmud::detectors::{decorrelate_detect, mlse_objective, mmse_detect, optimal_search};
use qmud::BitVector;

/// Positive definite correlation matrix from random signatures.
fn correlation(users: usize, chips: &[f64], energies: &[f64]) -> CorrelationMatrix {
    let pg = 8;
    let sigs: Vec<Vec<f64>> = (0..users)
        .map(|k| {
            let v = &chips[k * pg..(k + 1) * pg];
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter().map(|x| x / n).collect()
        })
        .collect();
    let mut cfg = common::config(sigs, 2);
    cfg.energies = Some(energies[..users].to_vec());
    cdma::correlation_matrix(&common::scenario(cfg))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn optimal_matches_brute_force_and_dominates(
        users in 1usize..=4,
        chips in prop::collection::vec(prop_oneof![-1.0f64..-0.05, 0.05f64..1.0], 32),
        energies in prop::collection::vec(0.25f64..4.0, 4),
        soft in prop::collection::vec(-3.0f64..3.0, 4),
    ) {
        let r = correlation(users, &chips, &energies);
        let soft = SoftOutputs(soft[..users].to_vec());
        let got = optimal_search(&soft, &r).unwrap();
        let (want, want_value) = common::brute_force_mlse(&r.to_rows(), soft.values());
        prop_assert_eq!(got.bits.as_f64(), want);
        prop_assert!((got.objective - want_value).abs() <= 1e-8 * want_value.max(1.0));
        for index in 0..(1u64 << users) {
            let y = BitVector::from_index(users, index);
            let v = mlse_objective(&y, &soft, &r).unwrap();
            prop_assert!(v >= 0.0);
            prop_assert!(got.objective <= v + 1e-9);
        }
    }

    #[test]
    fn noiseless_linear_detectors_recover_truth(
        users in 1usize..=4,
        chips in prop::collection::vec(prop_oneof![-1.0f64..-0.05, 0.05f64..1.0], 32),
        energies in prop::collection::vec(0.25f64..4.0, 4),
    ) {
        let r = correlation(users, &chips, &energies);
        for index in 0..(1u64 << users) {
            let b = BitVector::from_index(users, index);
            let soft = SoftOutputs(r.apply(&b.as_f64()));
            let dec = decorrelate_detect(&soft, &r);
            // Nearly collinear random draws may trip the singularity guard.
            prop_assume!(dec.is_ok());
            let dec = dec.unwrap();
            prop_assert_eq!(&dec, &b);
            prop_assert_eq!(mmse_detect(&soft, &r, 0.0).unwrap(), dec);
            let opt = optimal_search(&soft, &r).unwrap();
            prop_assert_eq!(&opt.bits, &b);
            prop_assert!(opt.objective <= 1e-9);
            prop_assert!(mlse_objective(&b, &soft, &r).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn mmse_without_regularizer_is_decorrelator(
        chips in prop::collection::vec(prop_oneof![-1.0f64..-0.05, 0.05f64..1.0], 32),
        soft in prop::collection::vec(-3.0f64..3.0, 3),
    ) {
        let r = correlation(3, &chips, &[1.0, 2.0, 0.5]);
        let soft = SoftOutputs(soft);
        if let Ok(d) = decorrelate_detect(&soft, &r) {
            prop_assert_eq!(mmse_detect(&soft, &r, 0.0).unwrap(), d);
        }
    }
}

#[test]
fn three_user_instance_matches_oracle() {
    let r = CorrelationMatrix::from_rows(&[
        vec![1.0, 0.3, -0.2],
        vec![0.3, 2.0, 0.4],
        vec![-0.2, 0.4, 0.8],
    ])
    .unwrap();
    let soft = [0.9, -1.7, 0.35];
    let got = optimal_search(&SoftOutputs(soft.to_vec()), &r).unwrap();
    let (want, _) = common::brute_force_mlse(&r.to_rows(), &soft);
    assert_eq!(got.bits.as_f64(), want);
}

#[test]
fn worked_pair_objective_landscape() {
    let r = CorrelationMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
    let soft = [0.5, -0.5];
    let r_inv = common::invert(&r.to_rows());
    let values: Vec<f64> = common::all_candidates(2)
        .iter()
        .map(|y| common::quadratic_objective(&r.to_rows(), &r_inv, &soft, y))
        .collect();
    // Candidates (-,-), (-,+), (+,-), (+,+).
    for (v, want) in values.iter().zip([4.0, 4.0, 0.0, 4.0]) {
        assert!((v - want).abs() < 1e-12);
    }
}

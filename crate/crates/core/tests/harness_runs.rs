mod common;

use qmud::harness::{run_trials, sweep, DetectorSet, PreparedScenario, SweepParameter};
use qmud::registers::{enumerate_hypotheses, RegisterView};
use qmud::{DetectorKind, Verdict};

fn covered_pair() -> qmud::Scenario {
    let mut cfg = common::correlated_pair();
    cfg.gamma = 1;
    // Step is 0.375: sigma = gamma * step / 2.
    cfg.noise_sigma = 0.1875;
    cfg.reps_max = 256;
    common::scenario(cfg)
}

#[test]
fn decisions_are_sound_against_register_membership() {
    let s = covered_pair();
    let prepared = PreparedScenario::new(&s, true).unwrap();
    let regs = prepared.registers();
    for i in 0..2000 {
        let t = prepared.run_trial(&[], i, 77).unwrap();
        for (k, d) in t.qmud.iter().enumerate() {
            let v = t.received_index[k];
            let (in_one, in_zero) = (regs[k].one.contains(v), regs[k].zero.contains(v));
            match d.verdict {
                Verdict::BitOne => assert!(in_one && !in_zero),
                Verdict::BitZero => assert!(!in_one && in_zero),
                Verdict::NoMessage => assert!(!in_one && !in_zero),
                Verdict::Ambiguous => assert!(in_one && in_zero),
                Verdict::Inconclusive => {}
            }
            assert!(d.reps_used >= 1 && d.reps_used <= s.reps_max());
        }
    }
}

#[test]
fn category_accounting_and_soundness() {
    let s = covered_pair();
    let r = run_trials(&s, &DetectorSet::all(), 3000, 5).unwrap();
    let q = r.qmud.as_ref().unwrap();
    assert_eq!(q.total(), r.decisions());
    assert_eq!(q.false_decisions, 0);
    assert!(q.correct > 0);
    for t in &r.detectors {
        assert!(t.bit_errors <= r.decisions());
    }
}

#[test]
fn full_chip_view_is_also_sound() {
    let mut cfg = common::correlated_pair();
    cfg.gamma = 1;
    cfg.noise_sigma = 0.1;
    cfg.reps_max = 64;
    cfg.register_view = Some(RegisterView::Chips);
    let s = common::scenario(cfg);
    let r = run_trials(
        &s,
        &DetectorSet {
            classical: vec![],
            include_qmud: true,
        },
        2000,
        8,
    )
    .unwrap();
    let q = r.qmud.unwrap();
    assert_eq!(q.false_decisions, 0);
    assert_eq!(q.total(), 4000);
}

#[test]
fn coverage_holds_for_bounded_noise() {
    // With every chip offset inside half a step the received state is always
    // in the true-bit register.
    let mut cfg = common::correlated_pair();
    cfg.gamma = 1;
    cfg.noise_sigma = 0.02;
    let s = common::scenario(cfg);
    let r = run_trials(
        &s,
        &DetectorSet {
            classical: vec![],
            include_qmud: true,
        },
        2000,
        1,
    )
    .unwrap();
    assert_eq!(r.qmud.unwrap().coverage_miss, 0);
}

#[test]
fn registers_are_deterministic() {
    let s = covered_pair();
    for k in 0..2 {
        for bit in [1, -1] {
            assert_eq!(
                enumerate_hypotheses(&s, k, bit).unwrap(),
                enumerate_hypotheses(&s, k, bit).unwrap()
            );
        }
    }
}

#[test]
fn qmud_matches_sud_in_the_trivial_regime() {
    let s = common::scenario(common::walsh(3, 4, 3));
    let prepared = PreparedScenario::new(&s, true).unwrap();
    for i in 0..500 {
        let t = prepared.run_trial(&[DetectorKind::Sud], i, 21).unwrap();
        let qmud: Vec<i8> = t
            .qmud
            .iter()
            .map(|d| d.verdict.bit().expect("decided"))
            .collect();
        assert_eq!(qmud, t.decisions[0].1.bits());
        assert_eq!(qmud, t.true_bits.bits());
    }
}

#[test]
fn inconclusive_rate_falls_with_budget() {
    let s = covered_pair();
    let out = sweep(
        &s,
        SweepParameter::RepsMax,
        &[1.0, 2.0, 4.0, 8.0, 64.0],
        &DetectorSet {
            classical: vec![],
            include_qmud: true,
        },
        2000,
        13,
    )
    .unwrap();
    let rates: Vec<u64> = out
        .iter()
        .map(|r| r.qmud.as_ref().unwrap().inconclusive)
        .collect();
    assert!(rates.windows(2).all(|w| w[1] <= w[0]), "{rates:?}");
    assert!(rates[4] < rates[0]);
    for (r, v) in out.iter().zip([1.0, 2.0, 4.0, 8.0, 64.0]) {
        assert_eq!(r.param, Some((SweepParameter::RepsMax, v)));
    }
}

#[test]
fn sud_errors_grow_with_noise_on_common_numbers() {
    let s = common::scenario(common::correlated_pair());
    let out = sweep(
        &s,
        SweepParameter::NoiseSigma,
        &[0.0, 0.1, 0.3, 0.6],
        &DetectorSet {
            classical: vec![DetectorKind::Sud],
            include_qmud: false,
        },
        4000,
        3,
    )
    .unwrap();
    let ber: Vec<f64> = out
        .iter()
        .map(|r| r.ber(DetectorKind::Sud).unwrap())
        .collect();
    assert_eq!(ber[0], 0.0);
    assert!(ber.windows(2).all(|w| w[1] >= w[0]), "{ber:?}");
    assert!(ber[3] > 0.0);
}

#[test]
fn unknown_parameter_is_reported() {
    assert!(matches!(
        "snr_db".parse::<SweepParameter>(),
        Err(qmud::Error::UnknownParameter(_))
    ));
}

//! Test-only helpers: scenario builders and an independent brute-force
//! maximum-likelihood oracle.

#![allow(dead_code)]

use qmud::cdma::{ScenarioConfig, SignatureSpec};
use qmud::Scenario;

pub fn scenario(config: ScenarioConfig) -> Scenario {
    Scenario::from_config(&config)
        .expect("valid test scenario")
        .0
}

pub fn config(signatures: Vec<Vec<f64>>, bits_per_chip: u32) -> ScenarioConfig {
    let pg = signatures[0].len();
    ScenarioConfig {
        users: signatures.len(),
        processing_gain: pg,
        signatures: SignatureSpec::Explicit(signatures),
        energies: None,
        gains: None,
        noise_sigma: 0.0,
        bits_per_chip,
        amplitude: None,
        gamma: 0,
        delays: vec![0],
        reps_max: 8,
        seed: 0,
        register_view: None,
    }
}

/// The two-user pair with cross-correlation 0.5.
pub fn correlated_pair() -> ScenarioConfig {
    config(vec![vec![0.5, 0.5, 0.5, 0.5], vec![0.5, 0.5, -0.5, 0.5]], 3)
}

pub fn walsh(users: usize, pg: usize, bits_per_chip: u32) -> ScenarioConfig {
    ScenarioConfig {
        signatures: SignatureSpec::Family("walsh".into()),
        users,
        processing_gain: pg,
        ..config(vec![vec![0.0; pg]; users], bits_per_chip)
    }
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn invert(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        let p = a[col][col];
        assert!(p.abs() > 1e-14, "singular oracle input");
        for v in a[col].iter_mut() {
            *v /= p;
        }
        for row in 0..n {
            if row != col {
                let f = a[row][col];
                let pivot_row = a[col].clone();
                for (v, pv) in a[row].iter_mut().zip(pivot_row) {
                    *v -= f * pv;
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Direct evaluation of `(b - R y)' R^-1 (b - R y)`.
pub fn quadratic_objective(r: &[Vec<f64>], r_inv: &[Vec<f64>], soft: &[f64], y: &[f64]) -> f64 {
    let n = r.len();
    let res: Vec<f64> = (0..n)
        .map(|i| soft[i] - (0..n).map(|j| r[i][j] * y[j]).sum::<f64>())
        .collect();
    (0..n)
        .map(|i| res[i] * (0..n).map(|j| r_inv[i][j] * res[j]).sum::<f64>())
        .sum()
}

/// All antipodal vectors of length `k`, recursively generated in
/// lexicographic order (`-1` before `+1`).
pub fn all_candidates(k: usize) -> Vec<Vec<f64>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for head in [-1.0, 1.0] {
        for tail in all_candidates(k - 1) {
            let mut v = vec![head];
            v.extend(tail);
            out.push(v);
        }
    }
    out
}

/// Brute-force minimizer; ties keep the earliest candidate.
pub fn brute_force_mlse(r: &[Vec<f64>], soft: &[f64]) -> (Vec<f64>, f64) {
    let r_inv = invert(r);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for y in all_candidates(r.len()) {
        let v = quadratic_objective(r, &r_inv, soft, &y);
        if best.as_ref().is_none_or(|(_, b)| v < *b) {
            best = Some((y, v));
        }
    }
    best.unwrap()
}

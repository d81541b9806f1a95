//! Classical multi-user detectors operating on matched-filter outputs.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::cdma::{BitVector, CorrelationMatrix, SoftOutputs};
use crate::error::{Error, Result};

/// Condition number above which a correlation matrix counts as singular.
pub const CONDITION_LIMIT: f64 = 1e12;
/// Largest user count accepted by the exhaustive search.
pub const MAX_EXHAUSTIVE_USERS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DetectorKind {
    Sud,
    Decorrelator,
    Mmse,
    OptimalExhaustive,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 4] = [
        DetectorKind::Sud,
        DetectorKind::Decorrelator,
        DetectorKind::Mmse,
        DetectorKind::OptimalExhaustive,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            DetectorKind::Sud => "sud",
            DetectorKind::Decorrelator => "decorrelator",
            DetectorKind::Mmse => "mmse",
            DetectorKind::OptimalExhaustive => "optimal",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DetectorKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::validation("detector", format!("unknown detector `{s}`")))
    }
}

fn sign(x: f64) -> i8 {
    if x < 0.0 {
        -1
    } else {
        1
    }
}

fn signs(values: &[f64]) -> BitVector {
    BitVector::new(values.iter().map(|&x| sign(x)).collect()).expect("signs are antipodal")
}

fn check_users(soft: &SoftOutputs, r: &CorrelationMatrix) -> Result<()> {
    if soft.values().len() != r.users() {
        return Err(Error::validation(
            "soft",
            format!(
                "{} outputs for a {}-user matrix",
                soft.values().len(),
                r.users()
            ),
        ));
    }
    Ok(())
}

fn to_matrix(r: &CorrelationMatrix, ridge: f64) -> DMatrix<f64> {
    let k = r.users();
    DMatrix::from_fn(k, k, |i, j| r.get(i, j) + if i == j { ridge } else { 0.0 })
}

/// Solves `(R + ridge I) x = b` after a condition-number guard.
fn guarded_solve(r: &CorrelationMatrix, ridge: f64, b: &[f64]) -> Result<Vec<f64>> {
    let m = to_matrix(r, ridge);
    let eig = m.clone().symmetric_eigenvalues();
    let largest = eig.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let smallest = eig.iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
    let condition = if smallest > 0.0 {
        largest / smallest
    } else {
        f64::INFINITY
    };
    // A NaN condition number also lands here.
    if condition.is_nan() || condition > CONDITION_LIMIT {
        return Err(Error::SingularMatrix { condition });
    }
    m.lu()
        .solve(&DVector::from_column_slice(b))
        .map(|x| x.iter().copied().collect())
        .ok_or(Error::SingularMatrix { condition })
}

/// Single-user detector: componentwise sign, with `sign(0) = +1`.
pub fn sud_detect(soft: &SoftOutputs) -> BitVector {
    signs(soft.values())
}

/// `sign(R^-1 b~)`.
pub fn decorrelate_detect(soft: &SoftOutputs, r: &CorrelationMatrix) -> Result<BitVector> {
    check_users(soft, r)?;
    Ok(signs(&guarded_solve(r, 0.0, soft.values())?))
}

/// `sign((R + sigma^2 I)^-1 b~)`.
pub fn mmse_detect(
    soft: &SoftOutputs,
    r: &CorrelationMatrix,
    noise_variance: f64,
) -> Result<BitVector> {
    check_users(soft, r)?;
    if !(noise_variance >= 0.0 && noise_variance.is_finite()) {
        return Err(Error::Domain(format!(
            "noise variance {noise_variance} must be finite and >= 0"
        )));
    }
    Ok(signs(&guarded_solve(r, noise_variance, soft.values())?))
}

/// `(b~ - R y)^T R^-1 (b~ - R y)`.
pub fn mlse_objective(y: &BitVector, soft: &SoftOutputs, r: &CorrelationMatrix) -> Result<f64> {
    check_users(soft, r)?;
    if y.len() != r.users() {
        return Err(Error::validation("y", "length differs from user count"));
    }
    let ry = r.apply(&y.as_f64());
    let residual: Vec<f64> = soft.values().iter().zip(&ry).map(|(b, v)| b - v).collect();
    let weighted = guarded_solve(r, 0.0, &residual)?;
    Ok(residual
        .iter()
        .zip(&weighted)
        .map(|(a, b)| a * b)
        .sum::<f64>()
        .max(0.0))
}

/// Winner of the exhaustive search.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimalDecision {
    pub bits: BitVector,
    /// Objective value at `bits`.
    pub objective: f64,
}

/// Minimizes the quadratic objective over all `2^K` antipodal vectors.
///
/// The objective expands to `b~'R^-1 b~ - 2 y'b~ + y'R y`, so the search only
/// needs the last two terms. Candidates are visited in lexicographic order
/// (`-1 < +1`, user 0 first) and only a strictly smaller value replaces the
/// incumbent, which makes ties resolve to the lexicographically smallest.
pub fn optimal_search(soft: &SoftOutputs, r: &CorrelationMatrix) -> Result<OptimalDecision> {
    check_users(soft, r)?;
    let users = r.users();
    if users > MAX_EXHAUSTIVE_USERS {
        return Err(Error::KTooLarge {
            users,
            cap: MAX_EXHAUSTIVE_USERS,
        });
    }
    let b = soft.values();
    let constant: f64 = guarded_solve(r, 0.0, b)?
        .iter()
        .zip(b)
        .map(|(x, y)| x * y)
        .sum();

    let mut y = vec![0.0; users];
    let mut best: Option<(u64, f64)> = None;
    for index in 0..(1u64 << users) {
        for (j, yj) in y.iter_mut().enumerate() {
            *yj = if (index >> (users - 1 - j)) & 1 == 1 {
                1.0
            } else {
                -1.0
            };
        }
        let mut value = 0.0;
        for i in 0..users {
            let row = r.row(i);
            let ry: f64 = row.iter().zip(&y).map(|(a, c)| a * c).sum();
            value += y[i] * (ry - 2.0 * b[i]);
        }
        if best.is_none_or(|(_, v)| value < v) {
            best = Some((index, value));
        }
    }
    let (index, value) = best.expect("at least one candidate");
    Ok(OptimalDecision {
        bits: BitVector::from_index(users, index),
        objective: (constant + value).max(0.0),
    })
}

pub fn optimal_detect(soft: &SoftOutputs, r: &CorrelationMatrix) -> Result<BitVector> {
    optimal_search(soft, r).map(|d| d.bits)
}

/// Runs detector `kind`. `noise_variance` is only read by MMSE.
pub fn detect(
    kind: DetectorKind,
    soft: &SoftOutputs,
    r: &CorrelationMatrix,
    noise_variance: f64,
) -> Result<BitVector> {
    match kind {
        DetectorKind::Sud => Ok(sud_detect(soft)),
        DetectorKind::Decorrelator => decorrelate_detect(soft, r),
        DetectorKind::Mmse => mmse_detect(soft, r, noise_variance),
        DetectorKind::OptimalExhaustive => optimal_detect(soft, r),
    }
}

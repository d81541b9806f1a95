//! Unambiguous discrimination of the two reduced register states with a
//! three-outcome POVM, the two-branch measurement block and the per-user
//! receiver built on top of it.
//!
//! For a register of `N` members the queried basis state reduces either to
//! `|0>` (absent) or to `sqrt((N-1)/N)|0> + sqrt(1/N)|1>` (present). The
//! operators are
//!
//! ```text
//! E1 = alpha |1><1|
//! E2 = beta  |psi><psi|,   psi = sqrt(1/N)|0> - sqrt(1-1/N)|1>
//! E3 = I - E1 - E2
//! ```
//!
//! so `E1` never fires on an absent state and `E2` never fires on a present
//! one.

use crate::error::{Error, Result};
use crate::registers::{
    present_amplitudes, reduce_to_qubit, BasisIndex, QubitState, SparseRegister,
};
use crate::rng::{self, RandomStream};

/// Real symmetric 2x2 operator, row major.
pub type Operator = [[f64; 2]; 2];

/// Nominal completeness / positivity tolerance.
pub const NOMINAL_TOLERANCE: f64 = 1e-12;
/// Minimum eigenvalue below which an operator is rejected as not positive.
pub const REJECT_TOLERANCE: f64 = 1e-9;

/// Eigenvalues of a symmetric 2x2 matrix, ascending.
pub fn symmetric_eigenvalues(m: &Operator) -> [f64; 2] {
    let mean = 0.5 * (m[0][0] + m[1][1]);
    let half_diff = 0.5 * (m[0][0] - m[1][1]);
    let radius = half_diff.hypot(m[0][1]);
    [mean - radius, mean + radius]
}

pub fn determinant(m: &Operator) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn quadratic_form(m: &Operator, s: &QubitState) -> f64 {
    s.c0 * s.c0 * m[0][0] + s.c0 * s.c1 * (m[0][1] + m[1][0]) + s.c1 * s.c1 * m[1][1]
}

/// Gain of `E1` that puts `E3` on the boundary of positivity (`det E3 = 0`)
/// for a given `E2` gain: `alpha = (1 - beta) / (1 - beta / N)`.
///
/// At `N = 1` the expression is identically one for `beta < 1`; the
/// continuous extension `alpha = 1` is used at `beta = 1` as well.
pub fn solve_alpha_for_beta(beta: f64, population: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Domain(format!("beta = {beta} outside [0, 1]")));
    }
    if population == 0 {
        return Err(Error::EmptyRegister);
    }
    if population == 1 {
        return Ok(1.0);
    }
    let n = population as f64;
    Ok((1.0 - beta) / (1.0 - beta / n))
}

/// The gain with `alpha = beta` on the positivity boundary, i.e. the smaller
/// root of `alpha^2 - 2N alpha + N = 0`: `N - sqrt(N(N-1))`.
///
/// Evaluated as `N / (N + sqrt(N(N-1)))` to avoid cancellation for large `N`.
pub fn symmetric_gain(population: usize) -> f64 {
    let n = population.max(1) as f64;
    n / (n + (n * (n - 1.0)).sqrt())
}

/// Three-outcome measurement tuned to registers of `population` members.
#[derive(Clone, Debug, PartialEq)]
pub struct PovmTriple {
    pub e1: Operator,
    pub e2: Operator,
    pub e3: Operator,
    /// Gain of the confirming operator `E1`.
    pub alpha: f64,
    /// Gain of the rejecting operator `E2`.
    pub beta: f64,
    pub population: usize,
}

impl PovmTriple {
    pub fn operators(&self) -> [&Operator; 3] {
        [&self.e1, &self.e2, &self.e3]
    }

    /// Entrywise maximum of `|E1 + E2 + E3 - I|`.
    pub fn completeness_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                let sum = self.e1[i][j] + self.e2[i][j] + self.e3[i][j];
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((sum - target).abs());
            }
        }
        worst
    }

    /// Smallest eigenvalue over the three operators.
    pub fn min_eigenvalue(&self) -> f64 {
        self.operators()
            .iter()
            .map(|m| symmetric_eigenvalues(m)[0])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Builds the operator triple for gains `(alpha, beta)`.
pub fn build_povm(alpha: f64, beta: f64, population: usize) -> Result<PovmTriple> {
    if !(0.0..=1.0).contains(&alpha) || !(0.0..=1.0).contains(&beta) {
        return Err(Error::Domain(format!(
            "gains ({alpha}, {beta}) outside [0, 1]"
        )));
    }
    if population == 0 {
        return Err(Error::EmptyRegister);
    }
    let (c0, c1) = present_amplitudes(population);
    // psi is orthogonal to the present state (c0, c1).
    let psi = [c1, -c0];
    let e1 = [[0.0, 0.0], [0.0, alpha]];
    let e2 = [
        [beta * psi[0] * psi[0], beta * psi[0] * psi[1]],
        [beta * psi[1] * psi[0], beta * psi[1] * psi[1]],
    ];
    let e3 = [
        [1.0 - e1[0][0] - e2[0][0], -e1[0][1] - e2[0][1]],
        [-e1[1][0] - e2[1][0], 1.0 - e1[1][1] - e2[1][1]],
    ];
    let min_eigenvalue = symmetric_eigenvalues(&e3)[0];
    if min_eigenvalue < -REJECT_TOLERANCE {
        return Err(Error::NotPositive { min_eigenvalue });
    }
    Ok(PovmTriple {
        e1,
        e2,
        e3,
        alpha,
        beta,
        population,
    })
}

/// Outcome probabilities `(p1, p2, p3)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutcomeProbabilities {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
}

impl OutcomeProbabilities {
    pub fn total(&self) -> f64 {
        self.p1 + self.p2 + self.p3
    }

    pub fn conclusive(&self) -> f64 {
        self.p1 + self.p2
    }
}

/// `p_m = <state| E_m |state>`, with round-off negatives clamped to zero.
pub fn outcome_probabilities(povm: &PovmTriple, state: &QubitState) -> OutcomeProbabilities {
    let p = |m: &Operator| quadratic_form(m, state).max(0.0);
    OutcomeProbabilities {
        p1: p(&povm.e1),
        p2: p(&povm.e2),
        p3: p(&povm.e3),
    }
}

/// The two parallel measurements of a block: one maximizing the chance of
/// confirming a present state, one maximizing the chance of rejecting an
/// absent state. Each reaches `1/N`, twice the symmetric-gain value for
/// large `N`.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchPair {
    /// `alpha = 1, beta = 0`.
    pub confirm: PovmTriple,
    /// `alpha = 0, beta = 1`.
    pub reject: PovmTriple,
}

pub fn branch_pair(population: usize) -> Result<BranchPair> {
    Ok(BranchPair {
        confirm: build_povm(1.0, 0.0, population)?,
        reject: build_povm(0.0, 1.0, population)?,
    })
}

/// Measurement result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    /// The queried state is surely in the register.
    E1,
    /// The queried state is surely not in the register.
    E2,
    /// No conclusion.
    E3,
}

/// Inverse CDF over `(p1, p2, p3)` in that order.
pub fn outcome_from_uniform(probs: &OutcomeProbabilities, u: f64) -> Outcome {
    if u < probs.p1 {
        Outcome::E1
    } else if u < probs.p1 + probs.p2 {
        Outcome::E2
    } else {
        Outcome::E3
    }
}

/// Samples one outcome from a single uniform draw.
pub fn sample_outcome(povm: &PovmTriple, state: &QubitState, rng: &mut RandomStream) -> Outcome {
    outcome_from_uniform(&outcome_probabilities(povm, state), rng::uniform(rng))
}

/// Decision logic of a measurement block: any `E1` wins, then any `E2`,
/// otherwise `E3`. `E1` together with `E2` means the arithmetic is broken.
pub fn combine_branches(confirm: Outcome, reject: Outcome) -> Result<Outcome> {
    use Outcome::*;
    match (confirm, reject) {
        (E1, E2) | (E2, E1) => Err(Error::InternalInconsistency(
            "measurement block observed E1 and E2 together".into(),
        )),
        (E1, _) | (_, E1) => Ok(E1),
        (E2, _) | (_, E2) => Ok(E2),
        (E3, E3) => Ok(E3),
    }
}

/// One register queried at one basis state, with both branch distributions
/// precomputed. The register content never changes during detection, so
/// repeated blocks are independent redraws from the same distributions.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementBlock {
    pub state: QubitState,
    pub confirm: OutcomeProbabilities,
    pub reject: OutcomeProbabilities,
}

impl MeasurementBlock {
    pub fn new(reg: &SparseRegister, v: BasisIndex) -> Result<Self> {
        let state = reduce_to_qubit(reg, v)?;
        let pair = branch_pair(reg.population())?;
        Ok(Self {
            state,
            confirm: outcome_probabilities(&pair.confirm, &state),
            reject: outcome_probabilities(&pair.reject, &state),
        })
    }

    /// Two uniform draws: confirm branch first, then reject branch.
    pub fn sample(&self, rng: &mut RandomStream) -> Result<Outcome> {
        let a = outcome_from_uniform(&self.confirm, rng::uniform(rng));
        let b = outcome_from_uniform(&self.reject, rng::uniform(rng));
        combine_branches(a, b)
    }

    /// Probability that one block is conclusive.
    pub fn conclusive_probability(&self) -> f64 {
        1.0 - self.confirm.p3 * self.reject.p3
    }
}

pub fn measurement_block(
    reg: &SparseRegister,
    v: BasisIndex,
    rng: &mut RandomStream,
) -> Result<Outcome> {
    MeasurementBlock::new(reg, v)?.sample(rng)
}

/// Receiver verdict for one user.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    /// Present in the bit-1 register only.
    BitOne,
    /// Present in the bit-0 register only.
    BitZero,
    /// Present in neither register.
    NoMessage,
    /// Present in both registers; no decision is possible.
    Ambiguous,
    /// A bank was still inconclusive when the repetition budget ran out.
    Inconclusive,
}

impl Verdict {
    /// The decided antipodal bit, if any.
    pub fn bit(&self) -> Option<i8> {
        match self {
            Verdict::BitOne => Some(1),
            Verdict::BitZero => Some(-1),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UserDecision {
    pub verdict: Verdict,
    /// Blocks spent by the slower of the two banks.
    pub reps_used: u32,
}

/// Per-user receiver: a bank of measurement blocks on each register,
/// repeated until each bank is conclusive or `reps_max` blocks were spent,
/// followed by the selection table.
///
/// Within a round the stream is consumed as: bank 1 confirm, bank 1 reject,
/// bank 0 confirm, bank 0 reject. A bank that already concluded draws
/// nothing.
pub fn detect_user(
    reg_one: &SparseRegister,
    reg_zero: &SparseRegister,
    v: BasisIndex,
    reps_max: u32,
    rng: &mut RandomStream,
) -> Result<UserDecision> {
    if reps_max == 0 {
        return Err(Error::Domain("reps_max must be at least 1".into()));
    }
    let bank_one = MeasurementBlock::new(reg_one, v)?;
    let bank_zero = MeasurementBlock::new(reg_zero, v)?;
    detect_with_blocks(&bank_one, &bank_zero, reps_max, rng)
}

pub(crate) fn detect_with_blocks(
    bank_one: &MeasurementBlock,
    bank_zero: &MeasurementBlock,
    reps_max: u32,
    rng: &mut RandomStream,
) -> Result<UserDecision> {
    let mut one: Option<(Outcome, u32)> = None;
    let mut zero: Option<(Outcome, u32)> = None;
    for round in 1..=reps_max {
        if one.is_none() {
            let o = bank_one.sample(rng)?;
            if o != Outcome::E3 {
                one = Some((o, round));
            }
        }
        if zero.is_none() {
            let o = bank_zero.sample(rng)?;
            if o != Outcome::E3 {
                zero = Some((o, round));
            }
        }
        if one.is_some() && zero.is_some() {
            break;
        }
    }
    let reps_of = |bank: Option<(Outcome, u32)>| bank.map_or(reps_max, |(_, r)| r);
    let reps_used = reps_of(one).max(reps_of(zero));
    let verdict = match (one.map(|b| b.0), zero.map(|b| b.0)) {
        (Some(Outcome::E1), Some(Outcome::E2)) => Verdict::BitOne,
        (Some(Outcome::E2), Some(Outcome::E1)) => Verdict::BitZero,
        (Some(Outcome::E2), Some(Outcome::E2)) => Verdict::NoMessage,
        (Some(Outcome::E1), Some(Outcome::E1)) => Verdict::Ambiguous,
        _ => Verdict::Inconclusive,
    };
    Ok(UserDecision { verdict, reps_used })
}

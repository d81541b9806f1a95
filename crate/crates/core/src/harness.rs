//! Reproducible Monte Carlo runs comparing the quantum receiver against the
//! classical detectors.
//!
//! Trial `i` owns the stream `rng::trial_stream(master_seed, i)` and draws, in
//! order: `K` bits, `PG` noise samples, then the receiver's measurement
//! draws user by user. Registers are built once per scenario. Sweep points
//! reuse the same master seed, so trial `i` sees the same bits and
//! normalized noise at every point.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::cdma::{self, BitVector, CorrelationMatrix, Scenario};
use crate::detectors::{self, DetectorKind};
use crate::error::{Error, Result};
use crate::povm::{self, MeasurementBlock, UserDecision, Verdict};
use crate::registers::{self, BasisIndex, UserRegisters};
use crate::rng::{self, RandomStream};

/// Everything observed in one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub true_bits: BitVector,
    /// Classical decisions in the order the detectors were requested.
    pub decisions: Vec<(DetectorKind, BitVector)>,
    /// Basis state observed by each user's receiver.
    pub received_index: Vec<BasisIndex>,
    /// Per-user receiver output, empty when the receiver is disabled.
    pub qmud: Vec<UserDecision>,
    /// Per-user flag: the received state is missing from the true-bit register.
    pub coverage_miss: Vec<bool>,
}

impl TrialRecord {
    pub fn any_coverage_miss(&self) -> bool {
        self.coverage_miss.iter().any(|&m| m)
    }
}

/// Classical detector tally.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DetectorTally {
    pub kind: DetectorKind,
    pub bit_errors: u64,
}

/// Quantum receiver tally over `trials * K` user decisions.
///
/// Decisions for users whose received state fell outside the true-bit
/// register are counted only under `coverage_miss` (and, when the verdict is
/// a wrong bit, also under `miss_bit_errors`).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct QmudTally {
    pub correct: u64,
    /// Wrong-bit verdicts despite full coverage. Must stay zero.
    pub false_decisions: u64,
    pub no_message: u64,
    pub ambiguous: u64,
    pub inconclusive: u64,
    pub coverage_miss: u64,
    pub miss_bit_errors: u64,
    pub reps_total: u64,
}

impl QmudTally {
    fn add(&mut self, other: &QmudTally) {
        self.correct += other.correct;
        self.false_decisions += other.false_decisions;
        self.no_message += other.no_message;
        self.ambiguous += other.ambiguous;
        self.inconclusive += other.inconclusive;
        self.coverage_miss += other.coverage_miss;
        self.miss_bit_errors += other.miss_bit_errors;
        self.reps_total += other.reps_total;
    }

    pub fn total(&self) -> u64 {
        self.correct
            + self.false_decisions
            + self.no_message
            + self.ambiguous
            + self.inconclusive
            + self.coverage_miss
    }
}

/// Aggregated outcome of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub scenario_id: String,
    /// Swept parameter and its value, absent for plain runs.
    pub param: Option<(SweepParameter, f64)>,
    pub trials: u64,
    pub users: usize,
    pub seed: u64,
    pub detectors: Vec<DetectorTally>,
    pub qmud: Option<QmudTally>,
}

impl MetricsReport {
    pub fn decisions(&self) -> u64 {
        self.trials * self.users as u64
    }

    pub fn ber(&self, kind: DetectorKind) -> Option<f64> {
        self.detectors
            .iter()
            .find(|t| t.kind == kind)
            .map(|t| t.bit_errors as f64 / self.decisions() as f64)
    }

    pub fn mean_reps(&self) -> Option<f64> {
        self.qmud
            .as_ref()
            .map(|q| q.reps_total as f64 / self.decisions() as f64)
    }
}

/// What one run evaluates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DetectorSet {
    pub classical: Vec<DetectorKind>,
    pub include_qmud: bool,
}

impl DetectorSet {
    pub fn all() -> Self {
        Self {
            classical: DetectorKind::ALL.to_vec(),
            include_qmud: true,
        }
    }
}

/// Scenario-dependent state shared read-only by all trials.
pub struct PreparedScenario<'a> {
    scenario: &'a Scenario,
    correlation: CorrelationMatrix,
    registers: Vec<UserRegisters>,
}

impl<'a> PreparedScenario<'a> {
    pub fn new(scenario: &'a Scenario, build_registers: bool) -> Result<Self> {
        Ok(Self {
            scenario,
            correlation: cdma::correlation_matrix(scenario),
            registers: if build_registers {
                registers::build_all(scenario)?
            } else {
                Vec::new()
            },
        })
    }

    pub fn registers(&self) -> &[UserRegisters] {
        &self.registers
    }

    pub fn correlation(&self) -> &CorrelationMatrix {
        &self.correlation
    }

    /// Runs trial `index` under `master_seed`.
    pub fn run_trial(
        &self,
        detectors: &[DetectorKind],
        index: u64,
        master_seed: u64,
    ) -> Result<TrialRecord> {
        let mut rng = rng::trial_stream(master_seed, index);
        let true_bits = BitVector::random(self.scenario.users(), &mut rng);
        let mut record = self.run_bits(detectors, true_bits, &mut rng)?;
        record.trial_index = index;
        Ok(record)
    }

    /// Transmits `true_bits` and runs every detector, drawing noise and
    /// measurements from `rng`.
    pub fn run_bits(
        &self,
        detectors: &[DetectorKind],
        true_bits: BitVector,
        rng: &mut RandomStream,
    ) -> Result<TrialRecord> {
        let s = self.scenario;
        let received = cdma::transmit(s, &true_bits, rng)?;
        let soft = cdma::matched_filter(&received, s)?;
        let noise_variance = s.noise_sigma() * s.noise_sigma();
        let decisions = detectors
            .iter()
            .map(|&k| {
                Ok((
                    k,
                    detectors::detect(k, &soft, &self.correlation, noise_variance)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;

        let users = self.registers.len();
        let mut received_index = Vec::with_capacity(users);
        let mut qmud = Vec::with_capacity(users);
        let mut coverage_miss = Vec::with_capacity(users);
        for (regs, &bit) in self.registers.iter().zip(true_bits.bits()) {
            let v = regs.projector.observe(received.chips(), &s.quantizer())?;
            let one = MeasurementBlock::new(&regs.one, v)?;
            let zero = MeasurementBlock::new(&regs.zero, v)?;
            qmud.push(povm::detect_with_blocks(&one, &zero, s.reps_max(), rng)?);
            coverage_miss.push(!regs.for_bit(bit).contains(v));
            received_index.push(v);
        }
        Ok(TrialRecord {
            trial_index: 0,
            true_bits,
            decisions,
            received_index,
            qmud,
            coverage_miss,
        })
    }
}

#[derive(Clone, Debug, Default)]
struct Tally {
    bit_errors: Vec<u64>,
    qmud: QmudTally,
}

impl Tally {
    fn from_record(record: &TrialRecord) -> Self {
        let bit_errors = record
            .decisions
            .iter()
            .map(|(_, b)| b.hamming(&record.true_bits) as u64)
            .collect();
        let mut q = QmudTally::default();
        for ((decision, &miss), &bit) in record
            .qmud
            .iter()
            .zip(&record.coverage_miss)
            .zip(record.true_bits.bits())
        {
            q.reps_total += u64::from(decision.reps_used);
            let wrong_bit = decision.verdict.bit().is_some_and(|b| b != bit);
            if miss {
                q.coverage_miss += 1;
                q.miss_bit_errors += u64::from(wrong_bit);
                continue;
            }
            match decision.verdict {
                Verdict::BitOne | Verdict::BitZero if wrong_bit => q.false_decisions += 1,
                Verdict::BitOne | Verdict::BitZero => q.correct += 1,
                Verdict::NoMessage => q.no_message += 1,
                Verdict::Ambiguous => q.ambiguous += 1,
                Verdict::Inconclusive => q.inconclusive += 1,
            }
        }
        Self {
            bit_errors,
            qmud: q,
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        if self.bit_errors.is_empty() {
            self.bit_errors = other.bit_errors;
        } else {
            for (a, b) in self.bit_errors.iter_mut().zip(other.bit_errors) {
                *a += b;
            }
        }
        self.qmud.add(&other.qmud);
        self
    }
}

/// Runs `trials` independent trials and aggregates their counts.
///
/// Trials execute in parallel; the report only holds sums, so it does not
/// depend on scheduling.
pub fn run_trials(
    scenario: &Scenario,
    set: &DetectorSet,
    trials: u64,
    master_seed: u64,
) -> Result<MetricsReport> {
    if trials == 0 {
        return Err(Error::validation(
            "trials",
            "at least one trial is required",
        ));
    }
    let prepared = PreparedScenario::new(scenario, set.include_qmud)?;
    let tally = (0..trials)
        .into_par_iter()
        .map(|i| {
            prepared
                .run_trial(&set.classical, i, master_seed)
                .map(|r| Tally::from_record(&r))
                .map_err(|e| Error::Trial {
                    index: i,
                    source: Box::new(e),
                })
        })
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;

    let bit_errors = if tally.bit_errors.is_empty() {
        vec![0; set.classical.len()]
    } else {
        tally.bit_errors
    };
    Ok(MetricsReport {
        scenario_id: scenario.label(),
        param: None,
        trials,
        users: scenario.users(),
        seed: master_seed,
        detectors: set
            .classical
            .iter()
            .zip(bit_errors)
            .map(|(&kind, bit_errors)| DetectorTally { kind, bit_errors })
            .collect(),
        qmud: set.include_qmud.then_some(tally.qmud),
    })
}

/// Scenario knob varied by [`sweep`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SweepParameter {
    NoiseSigma,
    RepsMax,
    Gamma,
    BitsPerChip,
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParameter::NoiseSigma => "noise_sigma",
            SweepParameter::RepsMax => "reps_max",
            SweepParameter::Gamma => "gamma",
            SweepParameter::BitsPerChip => "N_ch",
        }
    }

    /// Copy of `scenario` with this parameter set to `value`.
    pub fn apply(&self, scenario: &Scenario, value: f64) -> Result<Scenario> {
        let mut cfg = scenario.to_config();
        let whole = |min: f64, max: f64| -> Result<u32> {
            if value.fract() != 0.0 || value < min || value > max {
                return Err(Error::validation(
                    self.name(),
                    format!("{value} is not an integer in [{min}, {max}]"),
                ));
            }
            Ok(value as u32)
        };
        match self {
            SweepParameter::NoiseSigma => cfg.noise_sigma = value,
            SweepParameter::RepsMax => cfg.reps_max = whole(1.0, f64::from(u32::MAX))?,
            SweepParameter::Gamma => cfg.gamma = whole(0.0, 1e6)?,
            SweepParameter::BitsPerChip => cfg.bits_per_chip = whole(1.0, 8.0)?,
        }
        Ok(Scenario::from_config(&cfg)?.0)
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            SweepParameter::NoiseSigma,
            SweepParameter::RepsMax,
            SweepParameter::Gamma,
            SweepParameter::BitsPerChip,
        ]
        .into_iter()
        .find(|p| p.name() == s)
        .ok_or_else(|| Error::UnknownParameter(s.to_string()))
    }
}

/// One report per value, in input order, all under `master_seed`.
pub fn sweep(
    scenario: &Scenario,
    parameter: SweepParameter,
    values: &[f64],
    set: &DetectorSet,
    trials: u64,
    master_seed: u64,
) -> Result<Vec<MetricsReport>> {
    values
        .iter()
        .map(|&value| {
            let point = parameter.apply(scenario, value)?;
            let mut report = run_trials(&point, set, trials, master_seed)?;
            report.scenario_id = scenario.label();
            report.param = Some((parameter, value));
            Ok(report)
        })
        .collect()
}

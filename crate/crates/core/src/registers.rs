//! Chip quantization and the per-user hypothesis registers.
//!
//! A register is a uniform superposition over a set of computational basis
//! states. Amplitudes are implicit (`1/sqrt(N_s)` on every member), so a
//! register is stored as the sorted set of member indices.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cdma::{BitVector, Scenario};
use crate::error::{Error, Result};

/// Upper bound on the number of candidate waveforms one register may be
/// built from.
pub const ENUMERATION_BUDGET: u128 = 1_000_000;

/// Residual norm below which a delayed signature adds no new direction.
const RANK_TOLERANCE: f64 = 1e-10;

/// Which received chips user `k`'s registers describe.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegisterView {
    /// The received chips projected onto the span of user `k`'s delayed
    /// signatures. Interference orthogonal to that span drops out.
    #[default]
    Subspace,
    /// The raw received chips.
    Chips,
}

/// Per-user linear map applied to received chips before quantization.
#[derive(Clone, Debug, PartialEq)]
pub struct UserProjector {
    /// Orthonormal basis of the user's signal subspace; `None` is identity.
    basis: Option<Vec<Vec<f64>>>,
}

impl UserProjector {
    pub fn identity() -> Self {
        Self { basis: None }
    }

    /// Projector onto the span of the delay variants of user `user`'s
    /// signature (modified Gram-Schmidt, in delay order).
    pub fn for_user(scenario: &Scenario, user: usize) -> Result<Self> {
        if scenario.register_view() == RegisterView::Chips {
            return Ok(Self::identity());
        }
        let variants = shift_variants(&scenario.signatures()[user], scenario.delays())?;
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for mut v in variants {
            for q in &basis {
                let c: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (x, qi) in v.iter_mut().zip(q) {
                    *x -= c * qi;
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > RANK_TOLERANCE {
                if (norm - 1.0).abs() > f64::EPSILON {
                    v.iter_mut().for_each(|x| *x /= norm);
                }
                basis.push(v);
            }
        }
        Ok(Self { basis: Some(basis) })
    }

    pub fn project(&self, chips: &[f64]) -> Vec<f64> {
        let Some(basis) = &self.basis else {
            return chips.to_vec();
        };
        let mut out = vec![0.0; chips.len()];
        for q in basis {
            let c: f64 = q.iter().zip(chips).map(|(a, b)| a * b).sum();
            for (o, qi) in out.iter_mut().zip(q) {
                *o += c * qi;
            }
        }
        out
    }

    /// Basis state observed by this user for received `chips`.
    pub fn observe(&self, chips: &[f64], spec: &QuantizerSpec) -> Result<BasisIndex> {
        quantize_waveform(&self.project(chips), spec)
    }
}

/// Uniform mid-rise quantizer with saturation over `[-A, A)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantizerSpec {
    bits_per_chip: u32,
    amplitude: f64,
}

impl QuantizerSpec {
    pub fn new(bits_per_chip: u32, amplitude: f64) -> Result<Self> {
        if !(1..=8).contains(&bits_per_chip) {
            return Err(Error::validation("N_ch", "bits per chip must lie in 1..=8"));
        }
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(Error::validation("amplitude_A", "must be finite and > 0"));
        }
        Ok(Self {
            bits_per_chip,
            amplitude,
        })
    }

    pub fn bits_per_chip(&self) -> u32 {
        self.bits_per_chip
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn levels(&self) -> u32 {
        1 << self.bits_per_chip
    }

    /// Step `2A / 2^N_ch`.
    pub fn step(&self) -> f64 {
        2.0 * self.amplitude / f64::from(self.levels())
    }
}

/// `clamp(floor((x + A) / step), 0, 2^N_ch - 1)`.
pub fn quantize_chip(x: f64, spec: &QuantizerSpec) -> u32 {
    let top = spec.levels() - 1;
    let raw = ((x + spec.amplitude) / spec.step()).floor();
    if raw.is_nan() || raw <= 0.0 {
        0
    } else if raw >= f64::from(top) {
        top
    } else {
        raw as u32
    }
}

/// Index of a computational basis state of an `N_ch * PG` qubit register.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisIndex(pub u32);

/// Packs chip codes into a basis index, chip 0 in the most significant bits.
pub fn pack_basis(codes: &[u32], spec: &QuantizerSpec) -> Result<BasisIndex> {
    let bits = spec.bits_per_chip;
    if codes.len() as u32 * bits > 32 {
        return Err(Error::validation("codes", "packed index exceeds 32 bits"));
    }
    let mut index = 0u32;
    for &code in codes {
        if code >= spec.levels() {
            return Err(Error::CodeOutOfRange { code, bits });
        }
        index = (index << bits) | code;
    }
    Ok(BasisIndex(index))
}

/// Quantizes every chip and packs the codes.
pub fn quantize_waveform(chips: &[f64], spec: &QuantizerSpec) -> Result<BasisIndex> {
    let codes: Vec<u32> = chips.iter().map(|&x| quantize_chip(x, spec)).collect();
    pack_basis(&codes, spec)
}

/// Zero-filled right shifts of `chips`, one per delay, duplicates removed in
/// first-seen order.
pub fn shift_variants(chips: &[f64], delays: &[usize]) -> Result<Vec<Vec<f64>>> {
    let pg = chips.len();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(delays.len());
    for &d in delays {
        if d >= pg {
            return Err(Error::DelayOutOfRange {
                delay: d,
                processing_gain: pg,
            });
        }
        let mut shifted = vec![0.0; pg];
        shifted[d..].copy_from_slice(&chips[..pg - d]);
        if !out.contains(&shifted) {
            out.push(shifted);
        }
    }
    Ok(out)
}

/// Uniform-amplitude superposition over a sorted set of basis states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseRegister {
    qubits: u32,
    members: Vec<BasisIndex>,
}

impl SparseRegister {
    pub fn new(qubits: u32, members: impl IntoIterator<Item = BasisIndex>) -> Result<Self> {
        let set: BTreeSet<BasisIndex> = members.into_iter().collect();
        if let Some(bad) = set.iter().find(|m| qubits < 32 && m.0 >> qubits != 0) {
            return Err(Error::validation(
                "members",
                format!("index {} does not fit in {qubits} qubits", bad.0),
            ));
        }
        Ok(Self {
            qubits,
            members: set.into_iter().collect(),
        })
    }

    pub fn qubits(&self) -> u32 {
        self.qubits
    }

    /// Number of stored states `N_s`.
    pub fn population(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self) -> &[BasisIndex] {
        &self.members
    }

    pub fn contains(&self, v: BasisIndex) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    /// Debug dump: a header line `N_Q=<n> N_s=<m>` followed by one decimal
    /// index per line.
    pub fn to_text_dump(&self) -> String {
        let mut out = format!("N_Q={} N_s={}\n", self.qubits, self.members.len());
        for m in &self.members {
            let _ = writeln!(out, "{}", m.0);
        }
        out
    }

    pub fn from_text_dump(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty register dump".into()))?;
        let field = |name: &str| -> Result<u64> {
            header
                .split_whitespace()
                .find_map(|part| part.strip_prefix(name))
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Parse(format!("register dump header lacks `{name}`")))
        };
        let qubits = field("N_Q=")? as u32;
        let count = field("N_s=")? as usize;
        let members = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.trim()
                    .parse::<u32>()
                    .map(BasisIndex)
                    .map_err(|e| Error::Parse(format!("bad register index `{l}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let reg = Self::new(qubits, members)?;
        if reg.population() != count {
            return Err(Error::Parse(format!(
                "header announces {count} members, found {}",
                reg.population()
            )));
        }
        Ok(reg)
    }
}

/// Candidate waveforms needed to build one register of `scenario`.
pub fn enumeration_size(scenario: &Scenario) -> u128 {
    let lattice = u128::from(2 * scenario.noise_bound_steps() + 1);
    let per_chip = lattice.checked_pow(scenario.processing_gain() as u32);
    let interferers = 1u128.checked_shl(scenario.users() as u32 - 1);
    per_chip
        .zip(interferers)
        .and_then(|(p, i)| p.checked_mul(i))
        .and_then(|x| x.checked_mul(scenario.delays().len() as u128))
        .unwrap_or(u128::MAX)
}

/// Register of every quantized waveform consistent with user `user` sending
/// `bit` (`+1` or `-1`).
///
/// Covers every delay variant of the user's own signature, every bit pattern
/// of the other users, and every per-chip noise offset in
/// `{-gamma*step, ..., +gamma*step}`. Noiseless candidates pass through the
/// user's [`UserProjector`] before the offsets are added.
pub fn enumerate_hypotheses(scenario: &Scenario, user: usize, bit: i8) -> Result<SparseRegister> {
    if user >= scenario.users() {
        return Err(Error::validation("user", format!("no user {user}")));
    }
    if bit != 1 && bit != -1 {
        return Err(Error::validation("bit", "must be -1 or +1"));
    }
    let required = enumeration_size(scenario);
    if required > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded {
            required,
            budget: ENUMERATION_BUDGET,
        });
    }

    let pg = scenario.processing_gain();
    let spec = scenario.quantizer();
    let gamma = scenario.noise_bound_steps() as i32;
    let own_scale = scenario.amplitude_of(user) * f64::from(bit);
    let own: Vec<f64> = scenario.signatures()[user]
        .iter()
        .map(|s| own_scale * s)
        .collect();
    let own_variants = shift_variants(&own, scenario.delays())?;
    let projector = UserProjector::for_user(scenario, user)?;

    let others: Vec<usize> = (0..scenario.users()).filter(|&l| l != user).collect();
    let mut members = BTreeSet::new();
    for pattern in 0..(1u64 << others.len()) {
        let interferers = BitVector::from_index(others.len(), pattern);
        let mut mai = vec![0.0; pg];
        for (&l, &b) in others.iter().zip(interferers.bits()) {
            let scale = scenario.amplitude_of(l) * f64::from(b);
            for (m, s) in mai.iter_mut().zip(&scenario.signatures()[l]) {
                *m += scale * s;
            }
        }
        for variant in &own_variants {
            let noiseless: Vec<f64> = variant.iter().zip(&mai).map(|(v, m)| v + m).collect();
            // Quantization acts chip by chip, so the lattice of offset
            // waveforms maps onto a Cartesian product of per-chip code sets.
            let code_sets: Vec<Vec<u32>> = projector
                .project(&noiseless)
                .into_iter()
                .map(|clean| {
                    (-gamma..=gamma)
                        .map(|j| quantize_chip(clean + f64::from(j) * spec.step(), &spec))
                        .collect::<BTreeSet<_>>()
                        .into_iter()
                        .collect()
                })
                .collect();
            insert_product(&code_sets, &spec, &mut members)?;
        }
    }
    SparseRegister::new(scenario.register_qubits(), members)
}

fn insert_product(
    code_sets: &[Vec<u32>],
    spec: &QuantizerSpec,
    out: &mut BTreeSet<BasisIndex>,
) -> Result<()> {
    let mut cursor = vec![0usize; code_sets.len()];
    let mut codes: Vec<u32> = code_sets.iter().map(|s| s[0]).collect();
    loop {
        out.insert(pack_basis(&codes, spec)?);
        // Odometer increment, last chip fastest.
        let mut pos = code_sets.len();
        loop {
            if pos == 0 {
                return Ok(());
            }
            pos -= 1;
            cursor[pos] += 1;
            if cursor[pos] < code_sets[pos].len() {
                codes[pos] = code_sets[pos][cursor[pos]];
                break;
            }
            cursor[pos] = 0;
            codes[pos] = code_sets[pos][0];
        }
    }
}

/// The pair of hypothesis registers for one user, with the map from
/// received chips to the user's basis state.
#[derive(Clone, Debug, PartialEq)]
pub struct UserRegisters {
    /// Bit "1" (`+1`) hypotheses.
    pub one: SparseRegister,
    /// Bit "0" (`-1`) hypotheses.
    pub zero: SparseRegister,
    pub projector: UserProjector,
}

impl UserRegisters {
    pub fn for_bit(&self, bit: i8) -> &SparseRegister {
        if bit == 1 {
            &self.one
        } else {
            &self.zero
        }
    }
}

/// Builds both registers of every user.
pub fn build_all(scenario: &Scenario) -> Result<Vec<UserRegisters>> {
    (0..scenario.users())
        .map(|k| {
            Ok(UserRegisters {
                one: enumerate_hypotheses(scenario, k, 1)?,
                zero: enumerate_hypotheses(scenario, k, -1)?,
                projector: UserProjector::for_user(scenario, k)?,
            })
        })
        .collect()
}

/// `1/sqrt(N_s)` for members, zero otherwise.
pub fn membership_amplitude(reg: &SparseRegister, v: BasisIndex) -> Result<f64> {
    if reg.population() == 0 {
        return Err(Error::EmptyRegister);
    }
    Ok(if reg.contains(v) {
        1.0 / (reg.population() as f64).sqrt()
    } else {
        0.0
    })
}

/// Real qubit `c0|0> + c1|1>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitState {
    pub c0: f64,
    pub c1: f64,
}

impl QubitState {
    /// `|0>`: the queried state is absent from the register.
    pub const ABSENT: QubitState = QubitState { c0: 1.0, c1: 0.0 };

    /// `sqrt((N_s-1)/N_s)|0> + sqrt(1/N_s)|1>`: the queried state is one of
    /// `N_s` members.
    pub fn present(population: usize) -> Self {
        let (c0, c1) = present_amplitudes(population);
        Self { c0, c1 }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c0 * self.c0 + self.c1 * self.c1
    }
}

/// `(sqrt((N-1)/N), sqrt(1/N))`. Shared with the POVM construction so that
/// orthogonality relations hold bit for bit.
pub(crate) fn present_amplitudes(population: usize) -> (f64, f64) {
    let n = population as f64;
    (((n - 1.0) / n).sqrt(), (1.0 / n).sqrt())
}

/// Collapses the register, seen from basis state `v`, onto one qubit:
/// `|1>` carries the overlap with `v` and `|0>` the weight of all other
/// members.
pub fn reduce_to_qubit(reg: &SparseRegister, v: BasisIndex) -> Result<QubitState> {
    if reg.population() == 0 {
        return Err(Error::EmptyRegister);
    }
    Ok(if reg.contains(v) {
        QubitState::present(reg.population())
    } else {
        QubitState::ABSENT
    })
}

//! Chip-level synchronous DS-CDMA: scenario description, transmitter and
//! matched filter bank.
//!
//! Continuous-time integrals over one symbol are replaced by unit-weight chip
//! dot products, so a unit-energy signature is a chip vector of unit
//! Euclidean norm.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::registers::{QuantizerSpec, RegisterView};
use crate::rng::{self, RandomStream};

/// Largest register width `N_ch * PG` accepted at load.
pub const MAX_REGISTER_QUBITS: u32 = 24;

/// Signatures whose norm is further than this from one are rescaled.
const RENORMALIZE_TOLERANCE: f64 = 1e-12;
/// Rescaling beyond this distance is reported as a warning.
const RENORMALIZE_WARNING: f64 = 1e-6;

/// Antipodal (BPSK) bit vector, one entry in `{-1, +1}` per user.
///
/// Bit "1" is `+1` and bit "0" is `-1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitVector(Vec<i8>);

impl BitVector {
    pub fn new(bits: Vec<i8>) -> Result<Self> {
        if let Some(bad) = bits.iter().find(|&&b| b != 1 && b != -1) {
            return Err(Error::validation(
                "bits",
                format!("{bad} is not in {{-1, +1}}"),
            ));
        }
        Ok(Self(bits))
    }

    /// Candidate `index` of the `2^users` antipodal vectors in lexicographic
    /// order with `-1 < +1`; user 0 is the most significant position.
    pub fn from_index(users: usize, index: u64) -> Self {
        Self(
            (0..users)
                .map(|j| {
                    if (index >> (users - 1 - j)) & 1 == 1 {
                        1
                    } else {
                        -1
                    }
                })
                .collect(),
        )
    }

    /// Inverse of [`BitVector::from_index`].
    pub fn index(&self) -> u64 {
        self.0
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | u64::from(b == 1))
    }

    pub fn bits(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&b| f64::from(b)).collect()
    }

    /// Number of positions in which `self` and `other` disagree.
    pub fn hamming(&self, other: &BitVector) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }

    /// Independent fair bits, one uniform draw per user in user order.
    pub fn random(users: usize, rng: &mut RandomStream) -> Self {
        use rand::Rng;
        Self(
            (0..users)
                .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                .collect(),
        )
    }
}

/// Received baseband chip samples of one symbol interval.
#[derive(Clone, Debug, PartialEq)]
pub struct ChipWaveform(pub Vec<f64>);

impl ChipWaveform {
    pub fn chips(&self) -> &[f64] {
        &self.0
    }
}

/// Matched-filter bank outputs, one decision variable per user.
#[derive(Clone, Debug, PartialEq)]
pub struct SoftOutputs(pub Vec<f64>);

impl SoftOutputs {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Energy- and gain-weighted cross-correlations between user signatures.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMatrix {
    users: usize,
    entries: Vec<f64>,
}

impl CorrelationMatrix {
    /// Builds a matrix from row-major entries. The input must already be
    /// symmetric; only the upper triangle is read.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let users = rows.len();
        if users == 0 || rows.iter().any(|r| r.len() != users) {
            return Err(Error::validation(
                "R",
                "matrix must be square and non-empty",
            ));
        }
        let mut m = Self {
            users,
            entries: vec![0.0; users * users],
        };
        for (k, row) in rows.iter().enumerate() {
            for (l, &value) in row.iter().enumerate().skip(k) {
                m.set_symmetric(k, l, value);
            }
        }
        Ok(m)
    }

    pub fn identity(users: usize) -> Self {
        let mut m = Self {
            users,
            entries: vec![0.0; users * users],
        };
        for k in 0..users {
            m.entries[k * users + k] = 1.0;
        }
        m
    }

    fn set_symmetric(&mut self, k: usize, l: usize, value: f64) {
        self.entries[k * self.users + l] = value;
        self.entries[l * self.users + k] = value;
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.entries[k * self.users + l]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.entries[k * self.users..(k + 1) * self.users]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.users).map(|k| self.row(k).to_vec()).collect()
    }

    /// `R * x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.users)
            .map(|k| self.row(k).iter().zip(x).map(|(r, v)| r * v).sum())
            .collect()
    }

    /// Strict diagonal dominance by absolute value in every row. Reported,
    /// never enforced.
    pub fn is_diagonally_dominant(&self) -> bool {
        (0..self.users).all(|k| {
            let off: f64 = (0..self.users)
                .filter(|&l| l != k)
                .map(|l| self.get(k, l).abs())
                .sum();
            self.get(k, k).abs() > off
        })
    }
}

/// Signature source in a scenario document: explicit chip lists or the name
/// of a built-in family (`"walsh"`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SignatureSpec {
    Explicit(Vec<Vec<f64>>),
    Family(String),
}

/// Scenario document as it appears on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(rename = "K")]
    pub users: usize,
    #[serde(rename = "PG")]
    pub processing_gain: usize,
    pub signatures: SignatureSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energies: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains: Option<Vec<f64>>,
    pub noise_sigma: f64,
    #[serde(rename = "N_ch")]
    pub bits_per_chip: u32,
    #[serde(
        rename = "amplitude_A",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub amplitude: Option<f64>,
    #[serde(default)]
    pub gamma: u32,
    #[serde(default = "default_delays")]
    pub delays: Vec<usize>,
    #[serde(default = "default_reps_max")]
    pub reps_max: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub register_view: Option<RegisterView>,
}

fn default_delays() -> Vec<usize> {
    vec![0]
}

fn default_reps_max() -> u32 {
    16
}

/// Validated experiment description.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    processing_gain: usize,
    signatures: Vec<Vec<f64>>,
    energies: Vec<f64>,
    gains: Vec<f64>,
    noise_sigma: f64,
    quantizer: QuantizerSpec,
    noise_bound_steps: u32,
    delays: Vec<usize>,
    reps_max: u32,
    seed: u64,
    register_view: RegisterView,
}

/// `size x size` Sylvester-Hadamard matrix, rows scaled to unit norm.
pub fn walsh_hadamard_rows(size: usize) -> Result<Vec<Vec<f64>>> {
    if size == 0 || !size.is_power_of_two() {
        return Err(Error::validation(
            "PG",
            format!("Walsh-Hadamard rows need a power-of-two length, got {size}"),
        ));
    }
    let scale = 1.0 / (size as f64).sqrt();
    Ok((0..size)
        .map(|i| {
            (0..size)
                .map(|j| {
                    if (i & j).count_ones() % 2 == 0 {
                        scale
                    } else {
                        -scale
                    }
                })
                .collect()
        })
        .collect())
}

fn check_len(key: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::validation(
            key,
            format!("expected {want} entries, found {got}"),
        ));
    }
    Ok(())
}

impl Scenario {
    /// Validates a scenario document. Returned warnings describe signatures
    /// that had to be rescaled to unit norm.
    pub fn from_config(config: &ScenarioConfig) -> Result<(Self, Vec<String>)> {
        let users = config.users;
        let pg = config.processing_gain;
        if users == 0 {
            return Err(Error::validation("K", "at least one user is required"));
        }
        if pg == 0 {
            return Err(Error::validation(
                "PG",
                "processing gain must be at least 1",
            ));
        }
        if !(1..=8).contains(&config.bits_per_chip) {
            return Err(Error::validation("N_ch", "bits per chip must lie in 1..=8"));
        }
        let n_q = config.bits_per_chip as usize * pg;
        if n_q > MAX_REGISTER_QUBITS as usize {
            return Err(Error::validation(
                "N_ch",
                format!("N_ch * PG = {n_q} exceeds the register cap of {MAX_REGISTER_QUBITS}"),
            ));
        }

        let mut warnings = Vec::new();
        let raw = match &config.signatures {
            SignatureSpec::Explicit(rows) => rows.clone(),
            SignatureSpec::Family(name) if name.eq_ignore_ascii_case("walsh") => {
                if users > pg {
                    return Err(Error::validation(
                        "signatures",
                        format!("only {pg} Walsh-Hadamard rows exist for PG = {pg}"),
                    ));
                }
                let mut rows = walsh_hadamard_rows(pg)?;
                rows.truncate(users);
                rows
            }
            SignatureSpec::Family(name) => {
                return Err(Error::validation(
                    "signatures",
                    format!("unknown signature family `{name}`"),
                ))
            }
        };
        check_len("signatures", raw.len(), users)?;
        let mut signatures = Vec::with_capacity(users);
        for (k, sig) in raw.into_iter().enumerate() {
            let key = format!("signatures[{k}]");
            check_len(&key, sig.len(), pg)?;
            if sig.iter().any(|c| !c.is_finite()) {
                return Err(Error::validation(key, "chips must be finite"));
            }
            let norm = sig.iter().map(|c| c * c).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::validation(key, "signature has zero norm"));
            }
            if (norm - 1.0).abs() > RENORMALIZE_TOLERANCE {
                if (norm - 1.0).abs() > RENORMALIZE_WARNING {
                    warnings.push(format!("{key} had norm {norm}, rescaled to unit norm"));
                }
                signatures.push(sig.iter().map(|c| c / norm).collect());
            } else {
                signatures.push(sig);
            }
        }

        let energies = config.energies.clone().unwrap_or_else(|| vec![1.0; users]);
        check_len("energies", energies.len(), users)?;
        if energies.iter().any(|e| !e.is_finite() || *e < 0.0) {
            return Err(Error::validation(
                "energies",
                "energies must be finite and >= 0",
            ));
        }
        let gains = config.gains.clone().unwrap_or_else(|| vec![1.0; users]);
        check_len("gains", gains.len(), users)?;
        if gains.iter().any(|a| !a.is_finite()) {
            return Err(Error::validation("gains", "gains must be finite"));
        }
        if !config.noise_sigma.is_finite() || config.noise_sigma < 0.0 {
            return Err(Error::validation("noise_sigma", "must be finite and >= 0"));
        }

        let amplitude = match config.amplitude {
            Some(a) if a.is_finite() && a > 0.0 => a,
            Some(_) => return Err(Error::validation("amplitude_A", "must be finite and > 0")),
            None => default_amplitude(&signatures, &energies, &gains),
        };

        if config.delays.is_empty() {
            return Err(Error::validation(
                "delays",
                "at least one delay is required",
            ));
        }
        if let Some(&d) = config.delays.iter().find(|&&d| d >= pg) {
            return Err(Error::validation(
                "delays",
                format!("delay {d} outside [0, {pg})"),
            ));
        }
        let delays: Vec<usize> = config
            .delays
            .iter()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();

        if config.reps_max == 0 {
            return Err(Error::validation("reps_max", "must be at least 1"));
        }

        Ok((
            Self {
                processing_gain: pg,
                signatures,
                energies,
                gains,
                noise_sigma: config.noise_sigma,
                quantizer: QuantizerSpec::new(config.bits_per_chip, amplitude)?,
                noise_bound_steps: config.gamma,
                delays,
                reps_max: config.reps_max,
                seed: config.seed,
                register_view: config.register_view.unwrap_or_default(),
            },
            warnings,
        ))
    }

    /// Explicit document reproducing this scenario under [`Scenario::from_config`].
    pub fn to_config(&self) -> ScenarioConfig {
        ScenarioConfig {
            users: self.users(),
            processing_gain: self.processing_gain,
            signatures: SignatureSpec::Explicit(self.signatures.clone()),
            energies: Some(self.energies.clone()),
            gains: Some(self.gains.clone()),
            noise_sigma: self.noise_sigma,
            bits_per_chip: self.quantizer.bits_per_chip(),
            amplitude: Some(self.quantizer.amplitude()),
            gamma: self.noise_bound_steps,
            delays: self.delays.clone(),
            reps_max: self.reps_max,
            seed: self.seed,
            register_view: Some(self.register_view),
        }
    }

    pub fn users(&self) -> usize {
        self.signatures.len()
    }
    pub fn processing_gain(&self) -> usize {
        self.processing_gain
    }
    pub fn signatures(&self) -> &[Vec<f64>] {
        &self.signatures
    }
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }
    pub fn gains(&self) -> &[f64] {
        &self.gains
    }
    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }
    pub fn quantizer(&self) -> QuantizerSpec {
        self.quantizer
    }
    pub fn noise_bound_steps(&self) -> u32 {
        self.noise_bound_steps
    }
    pub fn delays(&self) -> &[usize] {
        &self.delays
    }
    pub fn reps_max(&self) -> u32 {
        self.reps_max
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn register_view(&self) -> RegisterView {
        self.register_view
    }

    /// Width of the computational basis, `N_ch * PG`.
    pub fn register_qubits(&self) -> u32 {
        self.quantizer.bits_per_chip() * self.processing_gain as u32
    }

    /// `sqrt(E_k) * a_k`.
    pub fn amplitude_of(&self, user: usize) -> f64 {
        self.energies[user].sqrt() * self.gains[user]
    }

    /// Short identifier built from the scenario dimensions.
    pub fn label(&self) -> String {
        format!(
            "k{}-pg{}-nch{}-g{}",
            self.users(),
            self.processing_gain,
            self.quantizer.bits_per_chip(),
            self.noise_bound_steps
        )
    }
}

/// 1.5 times the largest noiseless received chip magnitude over all bit
/// patterns. Falls back to 1 when every user is silent.
fn default_amplitude(signatures: &[Vec<f64>], energies: &[f64], gains: &[f64]) -> f64 {
    let pg = signatures.first().map_or(0, Vec::len);
    let peak = (0..pg)
        .map(|n| {
            signatures
                .iter()
                .zip(energies.iter().zip(gains))
                .map(|(s, (e, a))| e.sqrt() * a.abs() * s[n].abs())
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    if peak > 0.0 {
        1.5 * peak
    } else {
        1.0
    }
}

/// Matrix of `rho_kl = sqrt(E_k E_l) a_k a_l <s_k, s_l>`, built from its
/// upper triangle.
pub fn correlation_matrix(scenario: &Scenario) -> CorrelationMatrix {
    let users = scenario.users();
    let mut m = CorrelationMatrix {
        users,
        entries: vec![0.0; users * users],
    };
    for k in 0..users {
        for l in k..users {
            let dot: f64 = scenario.signatures[k]
                .iter()
                .zip(&scenario.signatures[l])
                .map(|(a, b)| a * b)
                .sum();
            let value = scenario.amplitude_of(k) * scenario.amplitude_of(l) * dot;
            m.set_symmetric(k, l, value);
        }
    }
    m
}

/// Noiseless superposition `sum_k sqrt(E_k) a_k b_k s_k[n]`.
pub fn noiseless_waveform(scenario: &Scenario, bits: &BitVector) -> ChipWaveform {
    let mut chips = vec![0.0; scenario.processing_gain];
    for (k, &b) in bits.bits().iter().enumerate() {
        let scale = scenario.amplitude_of(k) * f64::from(b);
        for (c, s) in chips.iter_mut().zip(&scenario.signatures[k]) {
            *c += scale * s;
        }
    }
    ChipWaveform(chips)
}

/// Received chips: noiseless superposition plus i.i.d. Gaussian noise.
///
/// Exactly `PG` standard normal draws are consumed, in chip order, even when
/// `noise_sigma` is zero, so streams stay aligned across noise levels.
pub fn transmit(
    scenario: &Scenario,
    bits: &BitVector,
    rng: &mut RandomStream,
) -> Result<ChipWaveform> {
    check_len("bits", bits.len(), scenario.users())?;
    let mut wave = noiseless_waveform(scenario, bits);
    for c in wave.0.iter_mut() {
        *c += scenario.noise_sigma * rng::standard_normal(rng);
    }
    Ok(wave)
}

/// `b~_k = sqrt(E_k) a_k <r, s_k>`.
pub fn matched_filter(received: &ChipWaveform, scenario: &Scenario) -> Result<SoftOutputs> {
    check_len("received", received.0.len(), scenario.processing_gain)?;
    Ok(SoftOutputs(
        (0..scenario.users())
            .map(|k| {
                let dot: f64 = received
                    .0
                    .iter()
                    .zip(&scenario.signatures[k])
                    .map(|(r, s)| r * s)
                    .sum();
                scenario.amplitude_of(k) * dot
            })
            .collect(),
    ))
}

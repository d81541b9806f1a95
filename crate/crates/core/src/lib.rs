//! Quantum-assisted multi-user detection for synchronous DS-CDMA.
//!
//! The crate simulates a chip-level CDMA uplink, encodes every user's
//! transmit hypotheses as uniform superpositions over quantized received
//! waveforms, and decides each bit with a zero-error three-outcome POVM
//! receiver. Classical detectors (single-user sign, decorrelator, MMSE and
//! exhaustive maximum likelihood) run on the same trials for comparison.
//!
//! Module map:
//!
//! - [`cdma`]: scenario, transmitter, matched filter, correlation matrix
//! - [`detectors`]: classical detectors
//! - [`registers`]: chip quantizer and hypothesis registers
//! - [`povm`]: operator construction, sampling and the quantum receiver
//! - [`harness`]: Monte Carlo runs and parameter sweeps
//! - [`cli`]: command-line front end and CSV output

pub mod cdma;
pub mod cli;
pub mod detectors;
pub mod error;
pub mod harness;
pub mod povm;
pub mod registers;
pub mod rng;

pub use cdma::{
    correlation_matrix, matched_filter, transmit, BitVector, ChipWaveform, CorrelationMatrix,
    Scenario, ScenarioConfig, SoftOutputs,
};
pub use detectors::DetectorKind;
pub use error::{Error, Result};
pub use harness::{run_trials, sweep, DetectorSet, MetricsReport, SweepParameter};
pub use povm::{detect_user, UserDecision, Verdict};
pub use registers::{BasisIndex, QuantizerSpec, SparseRegister};

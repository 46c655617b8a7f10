//! State-vector dynamics, noise channels and detection.

pub mod bichromatic;
pub mod detection;
pub mod noise;
mod runner;
pub mod state;

pub use bichromatic::{apply_ms_bichromatic, calibrate_rabi, BichromaticParams, IntegratorOptions};
pub use detection::{DetectionModel, DetectionParams};
pub use noise::{HeatingLaw, NoiseConfig};
pub use runner::{EngineConfig, MeasurementRecord, MsModel, RunResult, ShotRecord, Simulator, Trajectory};
pub use state::{PhononMode, RegisterState};

use thiserror::Error;

use crate::chain::ChainError;
use crate::compiler::CompileError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("qubit {qubit} out of range for {n_qubits} qubits")]
    TargetOutOfRange { qubit: usize, n_qubits: usize },
    #[error("invalid targets: {0}")]
    InvalidTargets(String),
    #[error("state needs {needed} bytes, cap is {cap}")]
    MemoryCap { needed: usize, cap: usize },
    #[error("Fock cutoff population {population:e} above threshold")]
    FockLeakage { population: f64 },
    #[error("integration step {step:e} s coarser than bound {bound:e} s")]
    StepTooCoarse { step: f64, bound: f64 },
    #[error("operation needs an attached phonon mode")]
    NoPhonon,
    #[error("schedule drives more than one bus mode in one shot")]
    MixedBus,
    #[error("invalid noise configuration: {0}")]
    InvalidNoise(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Compile(#[from] CompileError),
}

//! Pulse-level simulation of a linear-Paul-trap quantum computer with
//! 40Ca+ optical qubits.
//!
//! The crate is organised bottom-up:
//!
//! * [`chain`]: crystal geometry, normal modes, Lamb-Dicke parameters.
//! * [`compiler`]: circuit IR, pulse schedules and their timing rules.
//! * [`engine`]: state-vector dynamics, noise channels and detection.
//! * [`addressing`]: single-site beam profiles and crosstalk.
//! * [`experiments`]: the characterization experiments built on the above.
//! * [`analysis`]: fitting, configuration and result files.

pub mod addressing;
pub mod analysis;
pub mod chain;
pub mod cli;
pub mod compiler;
pub mod constants;
pub mod engine;
pub mod experiments;
pub mod rng;

//! Characterization experiments: circuits in, fitted parameters out.
//!
//! Each experiment compiles its sequences, runs shots through the
//! [`Simulator`](crate::engine::Simulator) and reduces the records to
//! [`Dataset`]s for the fitters. Sweep point `k` always uses random stream
//! `(seed, k, shot)`.

mod addressing_scan;
mod clifford;
mod ghz;
mod motion;
mod ramsey;
mod rb;

pub use addressing_scan::{run_addressing_scan, run_aod_calibration, AddressingScanResult, AodCalibration};
pub use clifford::{clifford_table, Clifford, CliffordTable, Pulse};
pub use ghz::{ghz_preparation, parity_curve_exact, run_gate_decay, run_ghz, run_ghz_with, GateDecayResult, GhzResult};
pub use motion::{default_heating_waits, run_heating_scan, run_sideband_thermometry, HeatingResult, ThermometryResult};
pub use ramsey::{ramsey_contrast, run_gradient_scan, run_ramsey, GradientResult, RamseyResult};
pub use rb::{run_rb, RbResult};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::addressing::{AddressingKind, AddressingUnit};
use crate::analysis::{Config, Dataset, FitError};
use crate::compiler::{compile, Bus, CircuitIR, CompileError, Instruction, MachineConfig, QubitKind};
use crate::engine::{EngineConfig, EngineError, NoiseConfig, RunResult, Simulator};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error("fit failed: {0}")]
    Fit(#[from] FitError),
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error("sideband ratio {ratio} >= 1, thermometry estimator undefined")]
    EstimatorUndefined { ratio: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Ramsey,
    Gradient,
    Rb,
    Thermometry,
    Heating,
    Ghz,
    GateDecay,
    AddressingScan,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Ramsey,
        ExperimentKind::Gradient,
        ExperimentKind::Rb,
        ExperimentKind::Thermometry,
        ExperimentKind::Heating,
        ExperimentKind::Ghz,
        ExperimentKind::GateDecay,
        ExperimentKind::AddressingScan,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Ramsey => "ramsey",
            ExperimentKind::Gradient => "gradient",
            ExperimentKind::Rb => "rb",
            ExperimentKind::Thermometry => "thermometry",
            ExperimentKind::Heating => "heating",
            ExperimentKind::Ghz => "ghz",
            ExperimentKind::GateDecay => "gate_decay",
            ExperimentKind::AddressingScan => "addressing_scan",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s.replace('-', "_"))
    }
}

/// Everything an experiment needs besides its sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Setup {
    pub machine: MachineConfig,
    pub noise: NoiseConfig,
    pub engine: EngineConfig,
    pub addressing: AddressingUnit,
    /// Microoptics channel offset from the ion it serves, um.
    pub channel_offset_um: f64,
    pub shots: u64,
    pub seed: u64,
    pub qubit_kind: QubitKind,
    pub bus: Bus,
}

impl Setup {
    pub fn from_config(cfg: &Config, seed: u64) -> Self {
        Self {
            machine: cfg.machine(),
            noise: cfg.noise(),
            engine: cfg.engine(),
            addressing: cfg.addressing(&[]),
            channel_offset_um: cfg.float("addressing.channel_offset_um"),
            shots: cfg.shots(),
            seed,
            qubit_kind: if cfg.choice("experiment.qubit_kind") == "optical" { QubitKind::Optical } else { QubitKind::Ground },
            bus: if cfg.choice("experiment.bus") == "radial" { Bus::Radial } else { Bus::Axial },
        }
    }

    /// Default configuration with the given noise model.
    pub fn with_noise(noise: NoiseConfig, shots: u64, seed: u64) -> Self {
        let mut s = Self::from_config(&Config::default(), seed);
        s.noise = noise;
        s.shots = shots;
        s
    }

    /// Same setup resized to `n` qubits.
    pub fn with_qubits(&self, n: usize) -> Self {
        let mut s = self.clone();
        s.machine.n_qubits = n;
        s.machine.addressed_channels = n;
        s
    }

    pub fn simulator(&self) -> Result<Simulator, ExperimentError> {
        Ok(Simulator::new(self.machine.clone(), self.noise.clone(), self.engine.clone())?)
    }

    /// Addressing unit with microoptics channels placed next to `positions`.
    pub fn addressing_for(&self, positions: &[f64]) -> AddressingUnit {
        let mut u = self.addressing.clone();
        if u.kind == AddressingKind::Microoptics {
            u.channel_centers = positions.iter().map(|x| x + self.channel_offset_um).collect();
        }
        u
    }
}

pub(crate) fn run_circuit(sim: &Simulator, instructions: Vec<Instruction>, shots: u64, seed: u64, point: u64) -> Result<RunResult, ExperimentError> {
    let schedule = compile(&CircuitIR { instructions }, &sim.machine)?;
    Ok(sim.run(&schedule, shots, seed, point)?)
}

pub(crate) fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Series and summary handed to the result writer.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub kind: ExperimentKind,
    pub series: Vec<(String, Dataset)>,
    pub summary: serde_json::Value,
}

/// Runs one experiment with its default sweep when `sweep` is empty.
pub fn run_experiment(kind: ExperimentKind, setup: &Setup, sweep: &[f64]) -> Result<ExperimentOutput, ExperimentError> {
    use serde_json::json;
    let sweep_or = |d: Vec<f64>| if sweep.is_empty() { d } else { sweep.to_vec() };
    let (series, summary) = match kind {
        ExperimentKind::Ramsey => {
            let t2 = setup.noise.t2(setup.qubit_kind);
            let span = if t2.is_finite() { 2.0 * t2 } else { 0.02 };
            let r = run_ramsey(setup, setup.qubit_kind, &sweep_or(linspace(0.0, span, 8)), 8)?;
            let s = json!({"qubit_kind": setup.qubit_kind, "t2_s": r.t2, "fit": r.fit});
            (vec![("contrast".to_string(), r.contrast)], s)
        }
        ExperimentKind::Gradient => {
            let r = run_gradient_scan(setup, &sweep_or(vec![-80.0, -40.0, 0.0, 40.0, 80.0]), 1e-3)?;
            let s = json!({"slope_hz_per_um": r.slope, "compensated": setup.noise.gradient_compensation, "fit": r.fit});
            (vec![("frequency".to_string(), r.frequencies)], s)
        }
        ExperimentKind::Rb => {
            let lengths: Vec<usize> = sweep_or(vec![1.0, 10.0, 25.0, 50.0, 75.0, 100.0]).iter().map(|&v| v.round() as usize).collect();
            let r = run_rb(setup, &lengths)?;
            let s = json!({
                "p": r.p, "r_clifford": r.r_clifford, "gate_fidelity": r.gate_fidelity,
                "eps_per_pulse": r.eps, "average_cost": r.average_cost, "fit": r.fit,
            });
            (vec![("survival".to_string(), r.survival)], s)
        }
        ExperimentKind::Thermometry => {
            let mut x = Vec::new();
            let mut y = Vec::new();
            let mut e = Vec::new();
            let mut points = Vec::new();
            for (k, &nb) in sweep_or(vec![setup.noise.n_bar]).iter().enumerate() {
                let r = run_sideband_thermometry(setup, nb, k as u64)?;
                x.push(nb);
                y.push(r.n_bar.0);
                e.push(r.n_bar.1.max(f64::MIN_POSITIVE));
                points.push(r);
            }
            let ds = Dataset::new(x, y, e)?;
            (vec![("n_bar".to_string(), ds)], json!({"points": points}))
        }
        ExperimentKind::Heating => {
            let freqs = sweep_or(vec![0.6e6, 0.8e6, 1.05e6, 1.3e6, 1.6e6]);
            let waits = default_heating_waits(&setup.noise, &freqs, 5);
            let r = run_heating_scan(setup, &waits, &freqs)?;
            let series = freqs.iter().zip(&r.series).map(|(f, d)| (format!("{:.0}Hz", f), d.clone())).collect();
            let s = json!({"frequencies_hz": freqs, "rates": r.rates, "alpha": r.alpha, "power_law": r.power_law});
            (series, s)
        }
        ExperimentKind::Ghz => {
            let mut series = Vec::new();
            let mut results = Vec::new();
            for &nv in &sweep_or(vec![setup.machine.n_qubits as f64]) {
                let n = nv.round() as usize;
                let phases = linspace(0.0, 2.0 * std::f64::consts::PI * (1.0 - 1.0 / (4 * n) as f64), 4 * n);
                let r = run_ghz(setup, n, &phases)?;
                series.push((format!("parity_n{n}"), r.parity.clone()));
                results.push(r);
            }
            (series, json!({"results": results}))
        }
        ExperimentKind::GateDecay => {
            let counts: Vec<u32> = sweep_or(vec![1.0, 5.0, 11.0, 21.0, 41.0, 61.0, 81.0, 101.0]).iter().map(|&v| v.round() as u32).collect();
            let r = run_gate_decay(setup, &counts, setup.bus)?;
            let s = json!({"bus": r.bus, "per_gate_fidelity": r.per_gate, "fit": r.fit});
            (vec![("fidelity".to_string(), r.fidelity)], s)
        }
        ExperimentKind::AddressingScan => {
            let offsets = sweep_or(linspace(-3.0, 3.0, 61));
            let unit = setup.addressing.clone();
            let r = run_addressing_scan(setup, &unit, &offsets)?;
            let matrix: Vec<Vec<f64>> = (0..r.crosstalk.nrows()).map(|i| r.crosstalk.row(i).iter().copied().collect()).collect();
            let s = json!({"waist_um": r.waist, "center_um": r.center, "fit": r.fit, "crosstalk": matrix});
            (vec![("omega2".to_string(), r.profile)], s)
        }
    };
    Ok(ExperimentOutput { kind, series, summary })
}

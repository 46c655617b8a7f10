//! Single-qubit randomized benchmarking.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::clifford::{clifford_table, sequence_unitary, CliffordTable, Pulse};
use super::{ExperimentError, Setup};
use crate::analysis::{fit_decay, Dataset, DecayForm, FitResult};
use crate::compiler::{compile, CircuitIR, Instruction, Targets};
use crate::engine::Simulator;
use crate::rng::{derive_seed, shot_rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbResult {
    /// x = sequence length, y = survival probability.
    pub survival: Dataset,
    pub fit: FitResult,
    /// Depolarizing parameter per Clifford, (value, 1 sigma).
    pub p: (f64, f64),
    /// Error per Clifford, (1 - p)(1 - 1/d) with d = 2.
    pub r_clifford: (f64, f64),
    /// Average fidelity per pulse, 1 - r_clifford / cost.
    pub gate_fidelity: (f64, f64),
    /// Depolarizing probability per pulse that reproduces the decay.
    pub eps: (f64, f64),
    pub average_cost: f64,
}

const SEQUENCE_STREAM: u64 = 0x5eed_c11f;

/// `m` random Cliffords followed by the inverting one, as pulses.
fn random_sequence<R: Rng>(table: &CliffordTable, m: usize, rng: &mut R) -> Vec<Pulse> {
    let mut pulses = Vec::new();
    for _ in 0..m {
        let k = rng.random_range(0..table.len());
        pulses.extend_from_slice(&table.elements[k].pulses);
    }
    let inv = table.inverse_of(&sequence_unitary(&pulses)).expect("Clifford table is closed");
    pulses.extend_from_slice(&table.elements[inv].pulses);
    pulses
}

fn survival_count(sim: &Simulator, table: &CliffordTable, m: usize, shots: u64, seed: u64, point: u64) -> Result<u64, ExperimentError> {
    let seq_seed = derive_seed(seed, SEQUENCE_STREAM);
    let outcomes = (0..shots)
        .into_par_iter()
        .map(|k| -> Result<bool, ExperimentError> {
            let mut seq_rng = shot_rng(seq_seed, point, k);
            let mut instructions = vec![Instruction::PrepareAll];
            for q in random_sequence(table, m, &mut seq_rng) {
                instructions.push(Instruction::R { theta: q.theta, phi: q.phi, targets: Targets::All });
            }
            instructions.push(Instruction::MeasureAll { label: "rb".into() });
            let schedule = compile(&CircuitIR { instructions }, &sim.machine)?;
            let mut rng = shot_rng(seed, point, k);
            let tr = sim.execute_shot(&schedule, &mut rng, true)?;
            Ok(tr.measurements.last().map(|r| r.bits[0]).unwrap_or(false))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(outcomes.into_iter().filter(|&b| b).count() as u64)
}

/// Survival after each sequence length, a fresh random sequence per shot,
/// fitted with A p^m + 1/2.
pub fn run_rb(setup: &Setup, lengths: &[usize]) -> Result<RbResult, ExperimentError> {
    let mut distinct = lengths.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 4 || distinct.iter().any(|&m| m > 100) {
        return Err(ExperimentError::Invalid("need at least four distinct lengths, each at most 100".into()));
    }
    let sim = setup.with_qubits(1).simulator()?;
    let table = clifford_table();
    let mut ks = Vec::new();
    for (i, &m) in lengths.iter().enumerate() {
        ks.push(survival_count(&sim, &table, m, setup.shots, setup.seed, i as u64)?);
    }
    let x: Vec<f64> = lengths.iter().map(|&m| m as f64).collect();
    let survival = Dataset::from_counts(x, &ks, &vec![setup.shots; lengths.len()])?.with_meta("x", "cliffords").with_meta("y", "survival");
    let fit = fit_decay(&survival, DecayForm::RbSurvival)?;
    let (p, pe) = (fit.value("p"), fit.error("p"));
    let cost = table.average_cost();
    let r = ((1.0 - p) / 2.0, pe / 2.0);
    Ok(RbResult {
        survival,
        fit,
        p: (p, pe),
        r_clifford: r,
        gate_fidelity: (1.0 - r.0 / cost, r.1 / cost),
        eps: (2.0 * r.0 / cost, 2.0 * r.1 / cost),
        average_cost: cost,
    })
}

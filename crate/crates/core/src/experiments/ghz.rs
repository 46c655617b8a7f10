//! GHZ fidelity from populations and parity, and repeated-gate decay.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use super::{linspace, run_circuit, ExperimentError, Setup};
use crate::addressing::crosstalk_matrix;
use crate::analysis::{binomial, fit_decay, fit_fringe, Dataset, DecayForm, FitResult};
use crate::compiler::{Bus, Instruction, Targets};
use crate::engine::{RegisterState, RunResult, Simulator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhzResult {
    pub n: usize,
    /// Population in all-bright plus all-dark, (value, 1 sigma).
    pub population: (f64, f64),
    /// Parity oscillation amplitude.
    pub coherence: (f64, f64),
    /// (P + C)/2.
    pub fidelity: (f64, f64),
    pub witness: bool,
    /// x = analysis phase, y = parity.
    pub parity: Dataset,
    pub fit: FitResult,
}

/// One MS(pi/4) on all qubits; odd `n` needs a trailing collective pi/2
/// about X to land on the GHZ state.
pub fn ghz_preparation(n: usize) -> Vec<Instruction> {
    let mut v = vec![Instruction::Ms { chi: FRAC_PI_4, targets: Targets::All, bus: Bus::Axial }];
    if n % 2 == 1 {
        v.push(Instruction::R { theta: FRAC_PI_2, phi: 0.0, targets: Targets::All });
    }
    v
}

fn ideal_ghz(n: usize) -> RegisterState {
    let mut st = RegisterState::new(n);
    let all: Vec<usize> = (0..n).collect();
    st.apply_ms_ideal(&all, FRAC_PI_4).expect("n >= 2");
    if n % 2 == 1 {
        st.apply_rotation(&all, FRAC_PI_2, 0.0, None).expect("valid targets");
    }
    st
}

/// Exact parity after analysis pulses R(pi/2, phi) on the ideal state.
pub fn parity_curve_exact(n: usize, phases: &[f64]) -> Vec<f64> {
    let base = ideal_ghz(n);
    let all: Vec<usize> = (0..n).collect();
    phases
        .iter()
        .map(|&phi| {
            let mut st = base.clone();
            st.apply_rotation(&all, FRAC_PI_2, phi, None).expect("valid targets");
            st.spin_probabilities()
                .iter()
                .enumerate()
                .map(|(i, p)| if i.count_ones() % 2 == 0 { *p } else { -*p })
                .sum()
        })
        .collect()
}

fn subset_bits(res: &RunResult, targets: &[usize]) -> Vec<Vec<bool>> {
    res.shots.iter().map(|s| targets.iter().map(|&q| s.final_measurement().bits[q]).collect()).collect()
}

fn measure_ghz(sim: &Simulator, setup: &Setup, prep: &[Instruction], phases: &[f64], targets: &[usize]) -> Result<GhzResult, ExperimentError> {
    let n = targets.len();
    if n < 2 {
        return Err(ExperimentError::Invalid("GHZ analysis needs at least two qubits".into()));
    }
    if phases.len() < 3 {
        return Err(ExperimentError::Invalid("need at least three analysis phases".into()));
    }
    let lo = phases.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = phases.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let period = 2.0 * PI / n as f64;
    let m = phases.len() as f64;
    let span = (hi - lo) * m / (m - 1.0);
    if span < period - 1e-9 {
        return Err(ExperimentError::Invalid("analysis phases must span one parity period".into()));
    }
    let all_targets = targets.len() == sim.machine.n_qubits && targets.iter().enumerate().all(|(i, &q)| i == q);
    let analysis = if all_targets { Targets::All } else { Targets::List(targets.to_vec()) };

    let mut circuit = vec![Instruction::PrepareAll];
    circuit.extend_from_slice(prep);
    circuit.push(Instruction::MeasureAll { label: "populations".into() });
    let res = run_circuit(sim, circuit, setup.shots, setup.seed, 0)?;
    let k = subset_bits(&res, targets).iter().filter(|b| b.iter().all(|&x| x) || b.iter().all(|&x| !x)).count() as u64;
    let population = binomial(k, setup.shots);

    let mut y = Vec::new();
    let mut e = Vec::new();
    for (j, &phi) in phases.iter().enumerate() {
        let mut circuit = vec![Instruction::PrepareAll];
        circuit.extend_from_slice(prep);
        circuit.push(Instruction::R { theta: FRAC_PI_2, phi, targets: analysis.clone() });
        circuit.push(Instruction::MeasureAll { label: "parity".into() });
        let res = run_circuit(sim, circuit, setup.shots, setup.seed, 1 + j as u64)?;
        // Even number of bright ions in the subset means parity +1.
        let even = subset_bits(&res, targets).iter().filter(|b| b.iter().filter(|&&x| x).count() % 2 == 0).count() as u64;
        let (p, pe) = binomial(even, setup.shots);
        y.push(2.0 * p - 1.0);
        e.push(2.0 * pe);
    }
    let mut parity = Dataset::new(phases.to_vec(), y, e)?.with_meta("x", "analysis_phase").with_meta("y", "parity");
    parity.shots = vec![setup.shots; phases.len()];
    let fit = fit_fringe(&parity, n as f64)?;
    let coherence = (fit.value("contrast"), fit.error("contrast"));
    let f = (population.0 + coherence.0) / 2.0;
    let fe = 0.5 * population.1.hypot(coherence.1);
    Ok(GhzResult { n, population, coherence, fidelity: (f, fe), witness: f > 0.5, parity, fit })
}

/// GHZ state of `n` ions from a single MS gate.
pub fn run_ghz(setup: &Setup, n: usize, phases: &[f64]) -> Result<GhzResult, ExperimentError> {
    if n < 2 {
        return Err(ExperimentError::Invalid("GHZ needs n >= 2".into()));
    }
    run_ghz_with(setup, n, &ghz_preparation(n), phases, &(0..n).collect::<Vec<_>>())
}

/// Same analysis with an arbitrary preparation, evaluated on `targets`.
pub fn run_ghz_with(setup: &Setup, n: usize, prep: &[Instruction], phases: &[f64], targets: &[usize]) -> Result<GhzResult, ExperimentError> {
    if targets.iter().any(|&q| q >= n) {
        return Err(ExperimentError::Invalid("analysis target outside the register".into()));
    }
    let sim = setup.with_qubits(n).simulator()?;
    measure_ghz(&sim, setup, prep, phases, targets)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateDecayResult {
    /// x = number of gates, y = Bell-state fidelity.
    pub fidelity: Dataset,
    /// Fidelity per gate f from A f^k.
    pub per_gate: (f64, f64),
    pub fit: FitResult,
    pub bus: Bus,
}

/// Bell-state fidelity after `counts` (odd) MS(pi/4) gates. On the radial
/// bus the pair sits in a three-ion chain and feels addressing crosstalk.
pub fn run_gate_decay(setup: &Setup, counts: &[u32], bus: Bus) -> Result<GateDecayResult, ExperimentError> {
    if counts.len() < 4 || counts.iter().any(|k| k % 2 == 0) || counts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ExperimentError::Invalid("need at least four odd, ascending gate counts".into()));
    }
    let (sim, targets) = match bus {
        Bus::Axial => (setup.with_qubits(2).simulator()?, Targets::All),
        Bus::Radial => {
            let sim = setup.with_qubits(3).simulator()?;
            let unit = setup.addressing_for(&sim.positions_um);
            let xt = crosstalk_matrix(&unit, &sim.positions_um);
            (sim.with_crosstalk(xt), Targets::List(vec![0, 1]))
        }
    };
    let phases = linspace(0.0, 2.0 * PI * 7.0 / 8.0, 8);
    let mut y = Vec::new();
    let mut e = Vec::new();
    for (i, &k) in counts.iter().enumerate() {
        let prep = vec![Instruction::Ms { chi: FRAC_PI_4, targets: targets.clone(), bus }; k as usize];
        let mut s = setup.clone();
        s.seed = crate::rng::derive_seed(setup.seed, i as u64);
        let r = measure_ghz(&sim, &s, &prep, &phases, &[0, 1])?;
        y.push(r.fidelity.0);
        e.push(r.fidelity.1.max(1e-9));
    }
    let mut fidelity = Dataset::new(counts.iter().map(|&k| k as f64).collect(), y, e)?.with_meta("x", "gates").with_meta("y", "fidelity").with_meta("bus", &bus.to_string());
    fidelity.shots = vec![setup.shots; counts.len()];
    let fit = fit_decay(&fidelity, DecayForm::Geometric)?;
    Ok(GateDecayResult { per_gate: (fit.value("f"), fit.error("f")), fidelity, fit, bus })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::state::ghz_fidelity;
    use crate::engine::NoiseConfig;

    #[test]
    fn ideal_preparation_reaches_ghz_for_all_n() {
        for n in 2..=12 {
            let st = ideal_ghz(n);
            assert!(ghz_fidelity(&st.amplitudes, n) > 1.0 - 1e-9, "n = {n}");
        }
    }

    #[test]
    fn exact_parity_oscillates_at_n() {
        for n in 2..=6 {
            let phases = linspace(0.0, 2.0 * PI, 97);
            let p = parity_curve_exact(n, &phases);
            let amp = p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!((amp - 1.0).abs() < 1e-3, "n = {n}");
            // Shifting the analysis phase by 2pi/n leaves the parity unchanged.
            let shifted = parity_curve_exact(n, &phases.iter().map(|x| x + 2.0 * PI / n as f64).collect::<Vec<_>>());
            for (a, b) in p.iter().zip(&shifted) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn noise_off_ghz_is_perfect() {
        let s = Setup::with_noise(NoiseConfig::ideal(), 200, 9);
        for n in [2, 3] {
            let r = run_ghz(&s, n, &linspace(0.0, 2.0 * PI * (1.0 - 1.0 / (4 * n) as f64), 4 * n)).unwrap();
            assert_eq!(r.population.0, 1.0);
            assert!((r.coherence.0 - 1.0).abs() < 0.1, "{:?}", r.coherence);
            assert!(r.witness);
            assert_eq!(r.fidelity.0, (r.population.0 + r.coherence.0) / 2.0);
        }
    }

    #[test]
    fn noise_off_gate_decay_is_flat() {
        let s = Setup::with_noise(NoiseConfig::ideal(), 200, 9);
        let r = run_gate_decay(&s, &[1, 21, 41, 61], Bus::Axial).unwrap();
        assert!((r.per_gate.0 - 1.0).abs() < 1e-3, "{:?}", r.per_gate);
        assert!(run_gate_decay(&s, &[1, 2, 5, 7], Bus::Axial).is_err());
    }
}

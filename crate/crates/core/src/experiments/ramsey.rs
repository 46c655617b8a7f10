//! Ramsey contrast decay and field-gradient scans.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::{linspace, run_circuit, ExperimentError, Setup};
use crate::analysis::{fit_decay, fit_fringe, fit_linear, Dataset, DecayForm, FitResult};
use crate::compiler::{Instruction, QubitKind, Targets};
use crate::engine::Simulator;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RamseyResult {
    pub kind: QubitKind,
    /// x = wait (s), y = fringe contrast.
    pub contrast: Dataset,
    pub fit: FitResult,
    /// (T2, 1 sigma) in s.
    pub t2: (f64, f64),
}

fn r(theta: f64, phi: f64) -> Instruction {
    Instruction::R { theta, phi, targets: Targets::All }
}

/// Ramsey sequence with analysis phase `phase`. The ground-state variant
/// brackets the wait with transfer pi pulses.
fn sequence(kind: QubitKind, wait_s: f64, phase: f64) -> Vec<Instruction> {
    let wait = Instruction::Wait { duration_us: wait_s * 1e6, kind };
    let mut v = vec![Instruction::PrepareAll, r(FRAC_PI_2, 0.0)];
    match kind {
        QubitKind::Optical => v.push(wait),
        QubitKind::Ground => v.extend([r(PI, 0.0), wait, r(PI, 0.0)]),
    }
    v.push(r(FRAC_PI_2, phase));
    v.push(Instruction::MeasureAll { label: "ramsey".into() });
    v
}

/// Fringe fit over `phases` analysis phases: (contrast, error, fringe phase, error).
fn fringe(sim: &Simulator, setup: &Setup, kind: QubitKind, wait: f64, phases: usize, point: u64) -> Result<(f64, f64, f64, f64), ExperimentError> {
    let phis = linspace(0.0, 2.0 * PI * (1.0 - 1.0 / phases as f64), phases);
    let mut ks = Vec::new();
    for (j, &phi) in phis.iter().enumerate() {
        let res = run_circuit(sim, sequence(kind, wait, phi), setup.shots, setup.seed, point * 1000 + j as u64)?;
        ks.push(res.shots.iter().filter(|s| s.final_measurement().bits[0]).count() as u64);
    }
    let ds = Dataset::from_counts(phis, &ks, &vec![setup.shots; phases])?;
    let f = fit_fringe(&ds, 1.0)?;
    Ok((2.0 * f.value("contrast"), 2.0 * f.error("contrast"), f.value("phase"), f.error("phase")))
}

/// Contrast per wait, without the decay fit.
pub fn ramsey_contrast(setup: &Setup, kind: QubitKind, waits_s: &[f64], phases: usize) -> Result<Dataset, ExperimentError> {
    if waits_s.is_empty() || waits_s.windows(2).any(|w| w[1] < w[0]) || waits_s[0] < 0.0 {
        return Err(ExperimentError::Invalid("wait times must be non-negative and ascending".into()));
    }
    if phases < 3 {
        return Err(ExperimentError::Invalid("need at least three analysis phases".into()));
    }
    let sim = setup.with_qubits(1).simulator()?;
    let mut y = Vec::new();
    let mut e = Vec::new();
    for (i, &w) in waits_s.iter().enumerate() {
        let (c, ce, _, _) = fringe(&sim, setup, kind, w, phases, i as u64)?;
        y.push(c);
        e.push(ce.max(1e-9));
    }
    let mut ds = Dataset::new(waits_s.to_vec(), y, e)?.with_meta("x", "wait_s").with_meta("y", "contrast");
    ds.shots = vec![setup.shots * phases as u64; waits_s.len()];
    Ok(ds)
}

/// Ramsey contrast decay fitted with A exp(-t/T2).
pub fn run_ramsey(setup: &Setup, kind: QubitKind, waits_s: &[f64], phases: usize) -> Result<RamseyResult, ExperimentError> {
    let contrast = ramsey_contrast(setup, kind, waits_s, phases)?;
    let fit = fit_decay(&contrast, DecayForm::Exponential)?;
    let t2 = (fit.value("decay"), fit.error("decay"));
    Ok(RamseyResult { kind, contrast, fit, t2 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientResult {
    /// x = ion position (um), y = ground-qubit frequency offset (Hz).
    pub frequencies: Dataset,
    pub fit: FitResult,
    /// (slope, 1 sigma) in Hz/um.
    pub slope: (f64, f64),
}

/// Ground-state Ramsey at fixed `wait_s` for a single ion moved to each
/// position; the fringe phase gives the local frequency offset.
pub fn run_gradient_scan(setup: &Setup, positions_um: &[f64], wait_s: f64) -> Result<GradientResult, ExperimentError> {
    if positions_um.len() < 2 || positions_um.iter().any(|x| x.abs() > 100.0) {
        return Err(ExperimentError::Invalid("need at least two positions within +-100 um".into()));
    }
    let base = setup.with_qubits(1);
    let mut y = Vec::new();
    let mut e = Vec::new();
    for (i, &x) in positions_um.iter().enumerate() {
        let sim = base.simulator()?.with_positions(vec![x]);
        let (_, _, phase, phase_err) = fringe(&sim, setup, QubitKind::Ground, wait_s, 8, i as u64)?;
        // P(bright) = (1 - cos(phi - a))/2, a = accumulated phase; the transfer
        // pulses reverse its sign for the ground-state qubit.
        let acc = -(PI - phase);
        let acc = (acc + PI).rem_euclid(2.0 * PI) - PI;
        y.push(acc / (2.0 * PI * wait_s));
        e.push((phase_err / (2.0 * PI * wait_s)).max(1e-9));
    }
    let frequencies = Dataset::new(positions_um.to_vec(), y, e)?.with_meta("x", "position_um").with_meta("y", "frequency_hz");
    let fit = fit_linear(&frequencies)?;
    let slope = (fit.value("slope"), fit.error("slope"));
    Ok(GradientResult { frequencies, fit, slope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::NoiseConfig;

    #[test]
    fn noise_off_contrast_is_one() {
        let s = Setup::with_noise(NoiseConfig::ideal(), 200, 1);
        let d = ramsey_contrast(&s, QubitKind::Ground, &[0.0, 0.01, 0.03], 6).unwrap();
        for (c, e) in d.y.iter().zip(&d.yerr) {
            assert!((c - 1.0).abs() < 4.0 * e, "{c} {e}");
        }
    }

    #[test]
    fn ground_t2_recovered() {
        let mut noise = NoiseConfig::quiet();
        noise.t2_ground = 0.018;
        let s = Setup::with_noise(noise, 1000, 3);
        let r = run_ramsey(&s, QubitKind::Ground, &linspace(0.0, 0.036, 6), 8).unwrap();
        assert!((r.t2.0 / 0.018 - 1.0).abs() < 0.15, "{:?}", r.t2);
    }

    #[test]
    fn gradient_sign_and_size() {
        let mut noise = NoiseConfig::quiet();
        noise.gradient = 3.1;
        let s = Setup::with_noise(noise, 400, 5);
        let r = run_gradient_scan(&s, &[-60.0, 0.0, 60.0], 1e-3).unwrap();
        assert!((r.slope.0 - 3.1).abs() < 0.2, "{:?}", r.slope);
        assert!(run_gradient_scan(&s, &[0.0, 150.0], 1e-3).is_err());
    }
}

//! Beam-profile scans and AOD deflection calibration.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{run_circuit, ExperimentError, Setup};
use crate::addressing::{crosstalk_matrix, relative_rabi, AddressingKind, AddressingUnit};
use crate::analysis::{binomial, fit_gaussian, fit_linear, Dataset, FitResult};
use crate::compiler::{Instruction, Targets};

/// Pulse area on target; the excitation then maps to Omega^2 without ambiguity.
const SCAN_AREA: f64 = FRAC_PI_2;

#[derive(Debug, Clone, PartialEq)]
pub struct AddressingScanResult {
    /// x = ion position (um), y = relative Omega^2.
    pub profile: Dataset,
    pub fit: FitResult,
    pub waist: (f64, f64),
    pub center: (f64, f64),
    /// Crosstalk on the configured chain with the fitted waist.
    pub crosstalk: DMatrix<f64>,
}

fn omega2(p: f64) -> f64 {
    let a = 2.0 * p.clamp(0.0, 1.0).sqrt().asin() / SCAN_AREA;
    a * a
}

/// Excitation of a single ion moved to each position under a beam at `center`.
fn scan_profile(setup: &Setup, unit: &AddressingUnit, center: f64, positions: &[f64], point_base: u64) -> Result<(Dataset, FitResult), ExperimentError> {
    if positions.len() < 5 {
        return Err(ExperimentError::Invalid("need at least five scan positions".into()));
    }
    let lo = positions.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = positions.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo > center - 2.0 * unit.w0 || hi < center + 2.0 * unit.w0 {
        return Err(ExperimentError::Invalid("scan must cover two waists on each side of the beam".into()));
    }
    let base = setup.with_qubits(1);
    let circuit = vec![
        Instruction::PrepareAll,
        Instruction::R { theta: SCAN_AREA, phi: 0.0, targets: Targets::List(vec![0]) },
        Instruction::MeasureAll { label: "scan".into() },
    ];
    let mut y = Vec::new();
    let mut e = Vec::new();
    for (i, &x) in positions.iter().enumerate() {
        let xt = DMatrix::from_element(1, 1, relative_rabi(unit, center, x));
        let sim = base.simulator()?.with_positions(vec![x]).with_crosstalk(xt);
        let res = run_circuit(&sim, circuit.clone(), setup.shots, setup.seed, point_base + i as u64)?;
        let dark = res.shots.iter().filter(|s| !s.final_measurement().bits[0]).count() as u64;
        let (p, pe) = binomial(dark, setup.shots);
        y.push(omega2(p));
        e.push(((omega2(p + pe) - omega2(p - pe)) / 2.0).abs().max(1e-9));
    }
    let mut ds = Dataset::new(positions.to_vec(), y, e)?.with_meta("x", "position_um").with_meta("y", "omega2_rel");
    ds.shots = vec![setup.shots; positions.len()];
    let fit = fit_gaussian(&ds)?;
    Ok((ds, fit))
}

/// Scans one ion through the beam that serves the origin, fits the waist
/// and builds the crosstalk matrix of the configured chain from it.
pub fn run_addressing_scan(setup: &Setup, unit: &AddressingUnit, positions: &[f64]) -> Result<AddressingScanResult, ExperimentError> {
    unit.validate().map_err(|e| ExperimentError::Invalid(e.to_string()))?;
    let center = unit.beam_center(0.0);
    let (profile, fit) = scan_profile(setup, unit, center, positions, 0)?;
    let waist = (fit.value("waist"), fit.error("waist"));
    let chain = setup.simulator()?.positions_um;
    let mut fitted = unit.clone();
    fitted.w0 = waist.0;
    if fitted.kind == AddressingKind::Microoptics {
        fitted.channel_centers = chain.iter().map(|x| x + setup.channel_offset_um).collect();
    }
    let crosstalk = crosstalk_matrix(&fitted, &chain);
    Ok(AddressingScanResult { profile, center: (fit.value("center"), fit.error("center")), fit, waist, crosstalk })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AodCalibration {
    /// x = drive frequency offset (MHz), y = fitted beam centre (um).
    pub centers: Dataset,
    pub fit: FitResult,
    pub slope: (f64, f64),
    /// Mean fitted waist over the scans.
    pub waist: f64,
}

/// Profile scans at several AOD drive frequencies; the beam centres against
/// frequency give the deflection slope. `offsets` are relative to the
/// nominal position of each tone.
pub fn run_aod_calibration(setup: &Setup, unit: &AddressingUnit, freqs_mhz: &[f64], offsets: &[f64]) -> Result<AodCalibration, ExperimentError> {
    if unit.kind != AddressingKind::Aod {
        return Err(ExperimentError::Invalid("deflection calibration needs an AOD unit".into()));
    }
    if freqs_mhz.len() < 3 {
        return Err(ExperimentError::Invalid("need at least three drive frequencies".into()));
    }
    let mut y = Vec::new();
    let mut e = Vec::new();
    let mut waists = 0.0;
    for (k, &f) in freqs_mhz.iter().enumerate() {
        let c = unit.aod_position(f);
        let positions: Vec<f64> = offsets.iter().map(|o| c + o).collect();
        let (_, fit) = scan_profile(setup, unit, c, &positions, 1000 * k as u64)?;
        y.push(fit.value("center"));
        e.push(fit.error("center").max(1e-9));
        waists += fit.value("waist");
    }
    let centers = Dataset::new(freqs_mhz.to_vec(), y, e)?.with_meta("x", "frequency_mhz").with_meta("y", "center_um");
    let fit = fit_linear(&centers)?;
    Ok(AodCalibration { slope: (fit.value("slope"), fit.error("slope")), waist: waists / freqs_mhz.len() as f64, centers, fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::NoiseConfig;
    use crate::experiments::linspace;

    #[test]
    fn omega2_inverts_the_pulse() {
        for r in [0.1f64, 0.5, 0.9, 1.0] {
            let p = (r * SCAN_AREA / 2.0).sin().powi(2);
            assert!((omega2(p) - r * r).abs() < 1e-12);
        }
    }

    #[test]
    fn waist_recovered_noise_free() {
        let s = Setup::with_noise(NoiseConfig::ideal(), 2000, 3);
        let unit = AddressingUnit::aod();
        let r = run_addressing_scan(&s, &unit, &linspace(-3.0, 3.0, 41)).unwrap();
        assert!((r.waist.0 - 1.09).abs() < 0.03, "{:?}", r.waist);
        assert!(r.center.0.abs() < 0.05);
        for i in 0..r.crosstalk.nrows() {
            assert_eq!(r.crosstalk[(i, i)], 1.0);
        }
    }

    #[test]
    fn narrow_scan_is_rejected() {
        let s = Setup::with_noise(NoiseConfig::ideal(), 10, 3);
        assert!(run_addressing_scan(&s, &AddressingUnit::aod(), &linspace(-1.0, 1.0, 11)).is_err());
    }
}

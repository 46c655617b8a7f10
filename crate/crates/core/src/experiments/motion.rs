//! Sideband thermometry and motional heating rates.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{linspace, ExperimentError, Setup};
use crate::analysis::{binomial, fit_linear, fit_power_law, Dataset, FitResult};
use crate::compiler::Bus;
use crate::constants::angular;
use crate::engine::noise::{evolve_phonon_heating, sample_thermal};
use crate::engine::{NoiseConfig, PhononMode, RegisterState};
use crate::rng::shot_rng;

/// Fock cutoff used for the thermal states of these experiments.
pub const THERMAL_CUTOFF: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermometryResult {
    /// Mean phonon number the shots were prepared with.
    pub n_bar_true: f64,
    /// Excitation probability after the red and blue sideband pulse.
    pub p_red: (f64, f64),
    pub p_blue: (f64, f64),
    pub ratio: (f64, f64),
    /// Estimate R/(1-R) and its propagated error.
    pub n_bar: (f64, f64),
}

/// Excitation counts (red, blue) for a mode at `omega` prepared thermal at
/// `n_bar`, optionally heated for `wait` seconds first.
fn sideband_counts(setup: &Setup, omega: f64, n_bar: f64, wait: f64, point: u64) -> Result<(u64, u64), ExperimentError> {
    let sim = setup.with_qubits(1).simulator()?;
    let rate = if setup.noise.enabled { setup.noise.heating.rate(omega) } else { 0.0 };
    let mode = PhononMode { frequency: omega, n_max: THERMAL_CUTOFF, n_bar_initial: n_bar };
    let shots = setup.shots;
    let excited = (0..2 * shots)
        .into_par_iter()
        .map(|k| -> Result<(bool, bool), ExperimentError> {
            let blue = k >= shots;
            let mut rng = shot_rng(setup.seed, point, k);
            let fock = sample_thermal(n_bar, THERMAL_CUTOFF, &mut rng);
            let mut st = RegisterState::with_phonon(1, mode.clone(), fock, setup.engine.max_bytes)?;
            evolve_phonon_heating(&mut st, wait, rate, &mut rng)?;
            st.apply_sideband(0, PI, 0.0, blue)?;
            let rec = sim.readout(&mut st, "sideband", &mut rng);
            Ok((blue, !rec.bits[0]))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let red = excited.iter().filter(|&&(b, e)| !b && e).count() as u64;
    let blue = excited.iter().filter(|&&(b, e)| b && e).count() as u64;
    Ok((red, blue))
}

fn estimate(n_bar_true: f64, red: u64, blue: u64, shots: u64) -> Result<ThermometryResult, ExperimentError> {
    let pr = binomial(red, shots);
    let pb = binomial(blue, shots);
    let r = pr.0 / pb.0;
    if !(r < 1.0) {
        return Err(ExperimentError::EstimatorUndefined { ratio: r });
    }
    let re = ((pr.1 / pb.0).powi(2) + (r * pb.1 / pb.0).powi(2)).sqrt();
    let n = r / (1.0 - r);
    let ne = re / (1.0 - r).powi(2);
    Ok(ThermometryResult { n_bar_true, p_red: pr, p_blue: pb, ratio: (r, re), n_bar: (n, ne) })
}

/// Red/blue sideband pi pulses on a thermal axial mode.
pub fn run_sideband_thermometry(setup: &Setup, n_bar: f64, point: u64) -> Result<ThermometryResult, ExperimentError> {
    // The ratio estimator is only trusted for n_bar up to about 2.
    if !(0.0..=2.0).contains(&n_bar) {
        return Err(ExperimentError::Invalid("n_bar must lie in [0, 2]".into()));
    }
    let omega = setup.machine.bus_frequency(Bus::Axial);
    let (red, blue) = sideband_counts(setup, omega, n_bar, 0.0, point)?;
    estimate(n_bar, red, blue, setup.shots)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatingResult {
    /// One series per frequency: x = wait (s), y = estimated n_bar.
    pub series: Vec<Dataset>,
    /// Linear-fit heating rates, quanta/s, with 1 sigma.
    pub rates: Vec<(f64, f64)>,
    /// Exponent of rate ~ f^-alpha; None when a rate is not positive.
    pub alpha: Option<(f64, f64)>,
    /// Power-law fit of rate against frequency in MHz.
    pub power_law: Option<FitResult>,
}

/// Waits from 0 to one expected quantum of heating at each frequency (Hz).
pub fn default_heating_waits(noise: &NoiseConfig, freqs_hz: &[f64], n: usize) -> Vec<Vec<f64>> {
    freqs_hz
        .iter()
        .map(|&f| {
            let rate = noise.heating.rate(angular(f));
            let span = if rate > 0.0 { 1.0 / rate } else { 1.0 };
            linspace(0.0, span, n)
        })
        .collect()
}

/// Thermometry after each wait at each mode frequency (Hz), starting from
/// the configured n_bar.
pub fn run_heating_scan(setup: &Setup, waits: &[Vec<f64>], freqs_hz: &[f64]) -> Result<HeatingResult, ExperimentError> {
    if waits.len() != freqs_hz.len() || freqs_hz.len() < 3 {
        return Err(ExperimentError::Invalid("need at least three frequencies, one wait list each".into()));
    }
    if freqs_hz.iter().any(|&f| !(f > 0.0)) {
        return Err(ExperimentError::Invalid("frequencies must be positive".into()));
    }
    let n0 = setup.noise.n_bar;
    let mut series = Vec::new();
    let mut rates = Vec::new();
    for (i, (&f, ws)) in freqs_hz.iter().zip(waits).enumerate() {
        if ws.len() < 3 {
            return Err(ExperimentError::Invalid("need at least three waits per frequency".into()));
        }
        let mut y = Vec::new();
        let mut e = Vec::new();
        for (j, &w) in ws.iter().enumerate() {
            let (red, blue) = sideband_counts(setup, angular(f), n0, w, (i * 1000 + j) as u64)?;
            let t = estimate(n0, red, blue, setup.shots)?;
            y.push(t.n_bar.0);
            e.push(t.n_bar.1.max(1e-9));
        }
        let ds = Dataset::new(ws.clone(), y, e)?.with_meta("x", "wait_s").with_meta("y", "n_bar").with_meta("frequency_hz", &f.to_string());
        let fit = fit_linear(&ds)?;
        rates.push((fit.value("slope"), fit.error("slope")));
        series.push(ds);
    }
    let (alpha, power_law) = if rates.iter().all(|r| r.0 > 0.0) {
        let ds = Dataset::new(freqs_hz.iter().map(|f| f * 1e-6).collect(), rates.iter().map(|r| r.0).collect(), rates.iter().map(|r| r.1.max(1e-12)).collect())?;
        let fit = fit_power_law(&ds)?;
        (Some((fit.value("alpha"), fit.error("alpha"))), Some(fit))
    } else {
        (None, None)
    };
    Ok(HeatingResult { series, rates, alpha, power_law })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimator_recovers_n_bar() {
        let s = Setup::with_noise(NoiseConfig::ideal(), 20000, 4);
        let r = run_sideband_thermometry(&s, 0.5, 0).unwrap();
        assert!((r.n_bar.0 - 0.5).abs() < 3.0 * r.n_bar.1, "{:?}", r.n_bar);
        let exact = 0.5 / 1.5;
        assert!((r.ratio.0 - exact).abs() < 3.0 * r.ratio.1);
    }

    #[test]
    fn ground_state_has_no_red_sideband() {
        let s = Setup::with_noise(NoiseConfig::ideal(), 500, 4);
        let r = run_sideband_thermometry(&s, 0.0, 0).unwrap();
        assert!(r.p_red.0 < 0.01);
        assert!(r.p_blue.0 > 0.99);
    }

    #[test]
    fn ratio_at_one_is_rejected() {
        assert!(matches!(estimate(1.0, 100, 100, 200), Err(ExperimentError::EstimatorUndefined { .. })));
    }

    #[test]
    fn waits_span_one_quantum() {
        let w = default_heating_waits(&NoiseConfig::default(), &[1.05e6], 5);
        assert_eq!(w[0].len(), 5);
        assert!((w[0][4] - 1.0 / 0.221).abs() < 1e-9);
    }
}

//! Noise parameters and the stochastic trajectory channels.

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::detection::DetectionParams;
use super::state::{rz_matrix, RegisterState};
use super::EngineError;
use crate::compiler::QubitKind;
use crate::constants::{
    COLLISION_RATE, D_STATE_LIFETIME_S, GRADIENT_COMPENSATED_HZ_PER_UM, GRADIENT_HZ_PER_UM, HEATING_ALPHA,
    HEATING_FREQ_REF_HZ, HEATING_RATE_REF, N_BAR_INITIAL, T2_GROUND_S, T2_OPTICAL_S,
};

/// Heating rate law rate(omega) = rate_ref * (omega_ref / omega)^alpha.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatingLaw {
    /// Quanta per second at the reference frequency.
    pub rate_ref: f64,
    /// Reference frequency, rad/s.
    pub omega_ref: f64,
    pub alpha: f64,
}

impl HeatingLaw {
    pub fn rate(&self, omega: f64) -> f64 {
        if self.rate_ref == 0.0 {
            return 0.0;
        }
        self.rate_ref * (self.omega_ref / omega).powf(self.alpha)
    }
}

impl Default for HeatingLaw {
    fn default() -> Self {
        Self { rate_ref: HEATING_RATE_REF, omega_ref: crate::constants::angular(HEATING_FREQ_REF_HZ), alpha: HEATING_ALPHA }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Master switch; when false every channel below is skipped.
    pub enabled: bool,
    /// Ramsey coherence times, s. Infinite disables the channel.
    pub t2_optical: f64,
    pub t2_ground: f64,
    /// D-state lifetime, s.
    pub t1: f64,
    /// Depolarizing probability per single-qubit carrier pulse.
    pub eps_1q: f64,
    /// Depolarizing probability per MS gate.
    pub eps_2q: f64,
    /// Probability that a qubit starts in D after preparation.
    pub spam_prep: f64,
    /// Probability that a thresholded bit is flipped.
    pub spam_meas: f64,
    pub heating: HeatingLaw,
    pub detection: DetectionParams,
    /// Collisions per ion per second.
    pub collision_rate: f64,
    /// Field gradient seen by the ground-state qubit, Hz/um.
    pub gradient: f64,
    pub gradient_compensated: f64,
    pub gradient_compensation: bool,
    /// Mean phonon number after cooling.
    pub n_bar: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            t2_optical: T2_OPTICAL_S,
            t2_ground: T2_GROUND_S,
            t1: D_STATE_LIFETIME_S,
            eps_1q: 0.0,
            eps_2q: 0.0,
            spam_prep: 0.0,
            spam_meas: 0.0,
            heating: HeatingLaw::default(),
            detection: DetectionParams::default(),
            collision_rate: COLLISION_RATE,
            gradient: GRADIENT_HZ_PER_UM,
            gradient_compensated: GRADIENT_COMPENSATED_HZ_PER_UM,
            gradient_compensation: false,
            n_bar: N_BAR_INITIAL,
        }
    }
}

impl NoiseConfig {
    /// Everything off, including T1 decay during detection.
    pub fn ideal() -> Self {
        Self {
            enabled: false,
            t2_optical: f64::INFINITY,
            t2_ground: f64::INFINITY,
            t1: f64::INFINITY,
            eps_1q: 0.0,
            eps_2q: 0.0,
            spam_prep: 0.0,
            spam_meas: 0.0,
            heating: HeatingLaw { rate_ref: 0.0, ..HeatingLaw::default() },
            detection: DetectionParams { tau: f64::INFINITY, ..DetectionParams::default() },
            collision_rate: 0.0,
            gradient: 0.0,
            gradient_compensated: 0.0,
            gradient_compensation: false,
            n_bar: 0.0,
        }
    }

    /// Ideal except for the listed knobs, which callers set afterwards.
    pub fn quiet() -> Self {
        Self { enabled: true, ..Self::ideal() }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let positive = [
            ("t2_optical", self.t2_optical),
            ("t2_ground", self.t2_ground),
            ("t1", self.t1),
            ("detection.tau", self.detection.tau),
            ("detection.window", self.detection.window),
        ];
        for (k, v) in positive {
            if v.is_nan() || v <= 0.0 {
                return Err(EngineError::InvalidNoise(format!("{k} must be positive")));
            }
        }
        let rates = [
            ("collision_rate", self.collision_rate),
            ("heating.rate_ref", self.heating.rate_ref),
            ("detection.bright_rate", self.detection.bright_rate),
            ("detection.dark_mean", self.detection.dark_mean),
            ("n_bar", self.n_bar),
        ];
        for (k, v) in rates {
            if !(v.is_finite() && v >= 0.0) {
                return Err(EngineError::InvalidNoise(format!("{k} must be non-negative")));
            }
        }
        if !(self.heating.omega_ref > 0.0) {
            return Err(EngineError::InvalidNoise("heating reference frequency must be positive".into()));
        }
        for (k, v) in [("eps_1q", self.eps_1q), ("eps_2q", self.eps_2q), ("spam_prep", self.spam_prep), ("spam_meas", self.spam_meas)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(EngineError::InvalidNoise(format!("{k} must lie in [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn t2(&self, kind: QubitKind) -> f64 {
        match kind {
            QubitKind::Optical => self.t2_optical,
            QubitKind::Ground => self.t2_ground,
        }
    }

    /// Gradient acting on the ground-state qubit, Hz/um.
    pub fn effective_gradient(&self) -> f64 {
        if self.gradient_compensation {
            self.gradient_compensated
        } else {
            self.gradient
        }
    }
}

/// Random Z kick with variance 2 dt / T2 on each target, so that coherences
/// decay as exp(-dt/T2) on average.
pub fn apply_dephasing<R: Rng>(state: &mut RegisterState, targets: &[usize], dt: f64, t2: f64, rng: &mut R) {
    if dt <= 0.0 || !t2.is_finite() {
        return;
    }
    let sigma = (2.0 * dt / t2).sqrt();
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    for &q in targets {
        let phi = normal.sample(rng);
        state.apply_1q(q, rz_matrix(phi));
    }
}

/// With probability `eps`, a Pauli drawn uniformly from all 4^k on the targets (identity included).
pub fn apply_depolarizing<R: Rng>(state: &mut RegisterState, targets: &[usize], eps: f64, rng: &mut R) {
    if eps <= 0.0 || targets.is_empty() {
        return;
    }
    if rng.random::<f64>() < eps {
        for &q in targets {
            let p: u8 = rng.random_range(0..4);
            state.apply_pauli(q, p);
        }
    }
}

/// Amplitude damping D -> S unravelled as a jump / no-jump trajectory.
/// Returns the number of decays.
pub fn apply_t1_decay<R: Rng>(state: &mut RegisterState, targets: &[usize], dt: f64, tau: f64, rng: &mut R) -> usize {
    if dt <= 0.0 || !tau.is_finite() {
        return 0;
    }
    let gamma = -(-dt / tau).exp_m1();
    let keep = (1.0 - gamma).sqrt();
    let mut jumps = 0;
    for &q in targets {
        let bit = 1usize << q;
        let p_dark = state.dark_probability(q);
        if rng.random::<f64>() < gamma * p_dark {
            // Move the D component to S, drop the rest.
            for i in 0..state.amplitudes.len() {
                if i & bit == 0 {
                    state.amplitudes[i | bit] = state.amplitudes[i];
                    state.amplitudes[i] = num_complex::Complex64::new(0.0, 0.0);
                }
            }
            jumps += 1;
        } else {
            for i in 0..state.amplitudes.len() {
                if i & bit == 0 {
                    state.amplitudes[i] *= keep;
                }
            }
        }
        state.normalize();
    }
    jumps
}

/// Deterministic phase from a per-ion detuning (Hz) over `dt`.
pub fn apply_detuning(state: &mut RegisterState, detunings_hz: &[f64], dt: f64) {
    for (q, &df) in detunings_hz.iter().enumerate() {
        if df != 0.0 && dt > 0.0 {
            state.apply_1q(q, rz_matrix(2.0 * std::f64::consts::PI * df * dt));
        }
    }
}

/// Heating of the attached mode at `rate` quanta/s for `dt`, as an exact
/// waiting-time jump process with L = sqrt(rate) a^dag and sqrt(rate) a.
/// Returns the number of jumps.
pub fn evolve_phonon_heating<R: Rng>(state: &mut RegisterState, dt: f64, rate: f64, rng: &mut R) -> Result<usize, EngineError> {
    if dt <= 0.0 || rate <= 0.0 || state.phonon.is_none() {
        return Ok(0);
    }
    let spin = state.spin_dim();
    let levels = state.fock_levels();
    let n_max = levels - 1;
    // Decay constant of each Fock amplitude under the no-jump evolution.
    let k: Vec<f64> = (0..levels).map(|n| rate * (n as f64 + if n < n_max { n as f64 + 1.0 } else { 0.0 })).collect();
    let mut remaining = dt;
    let mut jumps = 0;
    loop {
        let pops = state.fock_probabilities();
        let survive = |t: f64| -> f64 { pops.iter().zip(&k).map(|(p, kn)| p * (-kn * t).exp()).sum() };
        let r: f64 = rng.random();
        if survive(remaining) >= r {
            // No further jump: damp and renormalise.
            for n in 0..levels {
                let f = (-k[n] * remaining / 2.0).exp();
                state.amplitudes[n * spin..(n + 1) * spin].iter_mut().for_each(|a| *a *= f);
            }
            state.normalize();
            return Ok(jumps);
        }
        // Jump time from survive(t) = r by bisection.
        let (mut lo, mut hi) = (0.0, remaining);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if survive(mid) > r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        for n in 0..levels {
            let f = (-k[n] * t / 2.0).exp();
            state.amplitudes[n * spin..(n + 1) * spin].iter_mut().for_each(|a| *a *= f);
        }
        state.normalize();
        remaining -= t;
        let pops = state.fock_probabilities();
        let up: f64 = (0..n_max).map(|n| (n as f64 + 1.0) * pops[n]).sum();
        let down: f64 = (1..levels).map(|n| n as f64 * pops[n]).sum();
        let old = state.amplitudes.clone();
        state.amplitudes.iter_mut().for_each(|a| *a = num_complex::Complex64::new(0.0, 0.0));
        if rng.random::<f64>() * (up + down) < up {
            for n in 0..n_max {
                let f = (n as f64 + 1.0).sqrt();
                for s in 0..spin {
                    state.amplitudes[s + (n + 1) * spin] = old[s + n * spin] * f;
                }
            }
        } else {
            for n in 1..levels {
                let f = (n as f64).sqrt();
                for s in 0..spin {
                    state.amplitudes[s + (n - 1) * spin] = old[s + n * spin] * f;
                }
            }
        }
        state.normalize();
        jumps += 1;
    }
}

/// Number of background-gas collisions for `n_ions` over `duration` seconds.
pub fn sample_collisions<R: Rng>(rate: f64, n_ions: usize, duration: f64, rng: &mut R) -> u64 {
    let mean = rate * n_ions as f64 * duration;
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|p| p.sample(rng) as u64).unwrap_or(0)
}

/// Thermal Fock-state sample with mean `n_bar`, truncated at `n_max`.
pub fn sample_thermal<R: Rng>(n_bar: f64, n_max: usize, rng: &mut R) -> usize {
    if n_bar <= 0.0 {
        return 0;
    }
    let q = n_bar / (1.0 + n_bar);
    let u: f64 = rng.random();
    // Geometric distribution by inversion.
    let n = ((1.0 - u).ln() / q.ln()).floor();
    if n.is_finite() && n >= 0.0 {
        (n as usize).min(n_max)
    } else {
        0
    }
}

//! Fluorescence detection: Poisson photon counts, D-state decay during the
//! window, and a threshold that minimises the total readout error.

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use crate::constants::{BRIGHT_RATE_CPS, DARK_MEAN_COUNTS, DETECTION_WINDOW_US, D_STATE_LIFETIME_S};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionParams {
    /// Counts per second from a bright ion.
    pub bright_rate: f64,
    /// Detection window, s.
    pub window: f64,
    /// Mean background counts per window from a dark ion.
    pub dark_mean: f64,
    /// D-state lifetime, s.
    pub tau: f64,
    /// Fixed threshold; `None` picks the error-minimising one.
    pub threshold: Option<u32>,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            bright_rate: BRIGHT_RATE_CPS,
            window: DETECTION_WINDOW_US * 1e-6,
            dark_mean: DARK_MEAN_COUNTS,
            tau: D_STATE_LIFETIME_S,
            threshold: None,
        }
    }
}

const QUADRATURE_PANELS: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionModel {
    pub bright_mean: f64,
    pub dark_mean: f64,
    pub window: f64,
    pub tau: f64,
    /// Counts at or above the threshold read as bright.
    pub threshold: u32,
}

impl DetectionModel {
    pub fn new(p: &DetectionParams) -> Self {
        let mut m = Self { bright_mean: p.bright_rate * p.window, dark_mean: p.dark_mean, window: p.window, tau: p.tau, threshold: 1 };
        m.threshold = p.threshold.unwrap_or_else(|| m.optimal_threshold());
        m
    }

    /// Mean counts for an ion that decays to S at time `t` into the window.
    fn decayed_mean(&self, t: f64) -> f64 {
        let f = (t / self.window).clamp(0.0, 1.0);
        self.dark_mean * f + self.bright_mean * (1.0 - f)
    }

    /// Probability that the D state decays inside the window.
    pub fn decay_probability(&self) -> f64 {
        if !self.tau.is_finite() {
            return 0.0;
        }
        -(-self.window / self.tau).exp_m1()
    }

    /// Composite Simpson rule over the decay time, weight (1/tau) exp(-t/tau).
    fn integrate_decay(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.integrate_decay_vec(1, |t| vec![f(t)])[0]
    }

    /// Same rule applied componentwise to a vector-valued integrand of length `len`.
    fn integrate_decay_vec(&self, len: usize, f: impl Fn(f64) -> Vec<f64>) -> Vec<f64> {
        if !self.tau.is_finite() {
            return vec![0.0; len];
        }
        let n = QUADRATURE_PANELS;
        let h = self.window / n as f64;
        let weight = |t: f64| (-t / self.tau).exp() / self.tau;
        let mut acc = vec![0.0; len];
        let (w0, w1) = (weight(0.0), weight(self.window));
        for ((a, x), y) in acc.iter_mut().zip(f(0.0)).zip(f(self.window)) {
            *a = w0 * x + w1 * y;
        }
        for i in 1..n {
            let t = i as f64 * h;
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            let g = weight(t);
            for (a, v) in acc.iter_mut().zip(f(t)) {
                *a += w * (g * v);
            }
        }
        acc.iter().map(|a| a * h / 3.0).collect()
    }

    /// Decay probability by quadrature; checks the integrator against the closed form.
    pub fn decay_mass(&self) -> f64 {
        self.integrate_decay(|_| 1.0)
    }

    /// P(bright ion reads dark) at threshold `th`.
    pub fn bright_error(&self, th: u32) -> f64 {
        if th == 0 {
            0.0
        } else {
            poisson_cdf(th - 1, self.bright_mean)
        }
    }

    /// P(dark ion reads bright) at threshold `th`, including decay in the window.
    pub fn dark_error(&self, th: u32) -> f64 {
        let tail = |lambda: f64| if th == 0 { 1.0 } else { 1.0 - poisson_cdf(th - 1, lambda) };
        let survive = 1.0 - self.decay_probability();
        survive * tail(self.dark_mean) + self.integrate_decay(|t| tail(self.decayed_mean(t)))
    }

    /// Mean of the bright and dark error probabilities.
    pub fn total_error(&self, th: u32) -> f64 {
        0.5 * (self.bright_error(th) + self.dark_error(th))
    }

    /// Threshold minimising `total_error`. All candidates are evaluated in a
    /// single pass over the quadrature nodes.
    pub fn optimal_threshold(&self) -> u32 {
        let hi = (self.bright_mean.max(self.dark_mean) * 2.0).ceil().max(2.0) as u32;
        let len = hi as usize;
        // Index th - 1 holds the value for threshold th.
        let tails = |lambda: f64| -> Vec<f64> { cdf_table(lambda, len).iter().map(|c| 1.0 - c).collect() };
        let bright = cdf_table(self.bright_mean, len);
        let dark = tails(self.dark_mean);
        let decayed = self.integrate_decay_vec(len, |t| tails(self.decayed_mean(t)));
        let survive = 1.0 - self.decay_probability();
        let total = |th: u32| {
            let k = th as usize - 1;
            0.5 * (bright[k] + (survive * dark[k] + decayed[k]))
        };
        (1..=hi).min_by(|&a, &b| total(a).total_cmp(&total(b))).unwrap_or(1)
    }

    /// Counts for an ion in S.
    pub fn sample_bright<R: Rng>(&self, rng: &mut R) -> u32 {
        poisson(self.bright_mean, rng)
    }

    /// Counts for an ion in D, and whether it decayed to S during the window.
    pub fn sample_dark<R: Rng>(&self, rng: &mut R) -> (u32, bool) {
        if self.tau.is_finite() {
            let t: f64 = Exp::new(1.0 / self.tau).expect("positive lifetime").sample(rng);
            if t < self.window {
                return (poisson(self.decayed_mean(t), rng), true);
            }
        }
        (poisson(self.dark_mean, rng), false)
    }

    /// Counts for an ion in D that cannot decay.
    pub fn sample_dark_no_decay<R: Rng>(&self, rng: &mut R) -> u32 {
        poisson(self.dark_mean, rng)
    }

    pub fn is_bright(&self, counts: u32) -> bool {
        counts >= self.threshold
    }
}

fn poisson<R: Rng>(lambda: f64, rng: &mut R) -> u32 {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).map(|p| p.sample(rng) as u32).unwrap_or(0)
}

/// P(X <= k) for k = 0..len, with the same summation as `poisson_cdf`.
fn cdf_table(lambda: f64, len: usize) -> Vec<f64> {
    if lambda <= 0.0 {
        return vec![1.0; len];
    }
    let mut out = Vec::with_capacity(len);
    let mut log_term = -lambda;
    let mut acc = log_term.exp();
    for i in 0..len {
        if i > 0 {
            log_term += lambda.ln() - (i as f64).ln();
            acc += log_term.exp();
        }
        out.push(acc.min(1.0));
    }
    out
}

/// P(X <= k) for X ~ Poisson(lambda), summed in log space.
pub fn poisson_cdf(k: u32, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut log_term = -lambda;
    let mut acc = log_term.exp();
    for i in 1..=k {
        log_term += lambda.ln() - (i as f64).ln();
        acc += log_term.exp();
    }
    acc.min(1.0)
}

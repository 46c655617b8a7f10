//! Register state vector with an optional truncated phonon mode.
//!
//! Amplitude index = spin pattern + 2^n * Fock level. Bit q of the spin
//! pattern is qubit q: 1 = S (bright), 0 = D (dark).

use num_complex::Complex64 as C64;

use super::EngineError;

/// Truncated harmonic oscillator attached to the register.
#[derive(Debug, Clone, PartialEq)]
pub struct PhononMode {
    /// Mode frequency, rad/s.
    pub frequency: f64,
    /// Highest Fock level kept.
    pub n_max: usize,
    pub n_bar_initial: f64,
}

#[derive(Debug, Clone)]
pub struct RegisterState {
    pub n_qubits: usize,
    pub amplitudes: Vec<C64>,
    pub phonon: Option<PhononMode>,
    /// Virtual-Z frames not yet applied to the amplitudes.
    pub frames: Vec<f64>,
}

const I: C64 = C64::new(0.0, 1.0);

impl RegisterState {
    /// All qubits in S, no phonon.
    pub fn new(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        amplitudes[dim - 1] = C64::new(1.0, 0.0);
        Self { n_qubits, amplitudes, phonon: None, frames: vec![0.0; n_qubits] }
    }

    /// All qubits in S, phonon in Fock state `fock`.
    pub fn with_phonon(n_qubits: usize, mode: PhononMode, fock: usize, max_bytes: usize) -> Result<Self, EngineError> {
        let levels = mode.n_max + 1;
        let dim = (1usize << n_qubits)
            .checked_mul(levels)
            .ok_or(EngineError::MemoryCap { needed: usize::MAX, cap: max_bytes })?;
        let needed = dim.saturating_mul(std::mem::size_of::<C64>());
        if needed > max_bytes {
            return Err(EngineError::MemoryCap { needed, cap: max_bytes });
        }
        if fock > mode.n_max {
            return Err(EngineError::FockLeakage { population: 1.0 });
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        amplitudes[(1usize << n_qubits) - 1 + (fock << n_qubits)] = C64::new(1.0, 0.0);
        Ok(Self { n_qubits, amplitudes, phonon: Some(mode), frames: vec![0.0; n_qubits] })
    }

    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<C64>) -> Self {
        assert_eq!(amplitudes.len(), 1usize << n_qubits);
        Self { n_qubits, amplitudes, phonon: None, frames: vec![0.0; n_qubits] }
    }

    pub fn spin_dim(&self) -> usize {
        1usize << self.n_qubits
    }

    pub fn fock_levels(&self) -> usize {
        self.amplitudes.len() >> self.n_qubits
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            let inv = 1.0 / n;
            self.amplitudes.iter_mut().for_each(|a| *a *= inv);
        }
    }

    pub(crate) fn check_target(&self, q: usize) -> Result<(), EngineError> {
        if q >= self.n_qubits {
            Err(EngineError::TargetOutOfRange { qubit: q, n_qubits: self.n_qubits })
        } else {
            Ok(())
        }
    }

    /// Applies a 2x2 matrix in the (D, S) basis to qubit `q`.
    pub fn apply_1q(&mut self, q: usize, m: [[C64; 2]; 2]) {
        let bit = 1usize << q;
        for i in 0..self.amplitudes.len() {
            if i & bit == 0 {
                let j = i | bit;
                let (a0, a1) = (self.amplitudes[i], self.amplitudes[j]);
                self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    /// R(theta, phi) on each target, with the angle scaled per qubit.
    pub fn apply_rotation(&mut self, targets: &[usize], theta: f64, phi: f64, rabi_scale: Option<&[f64]>) -> Result<(), EngineError> {
        for (k, &q) in targets.iter().enumerate() {
            self.check_target(q)?;
            let s = rabi_scale.map(|r| r[k]).unwrap_or(1.0);
            self.apply_1q(q, rotation_matrix(theta * s, phi));
        }
        Ok(())
    }

    pub fn apply_rz(&mut self, targets: &[usize], theta: f64) -> Result<(), EngineError> {
        for &q in targets {
            self.check_target(q)?;
            self.apply_1q(q, rz_matrix(theta));
        }
        Ok(())
    }

    /// Pauli on one qubit: 0 = I, 1 = X, 2 = Y, 3 = Z.
    pub fn apply_pauli(&mut self, q: usize, which: u8) {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        match which {
            1 => self.apply_1q(q, [[o, l], [l, o]]),
            2 => self.apply_1q(q, [[o, -I], [I, o]]),
            3 => self.apply_1q(q, [[l, o], [o, -l]]),
            _ => {}
        }
    }

    /// Applies the accumulated virtual frames as physical Z rotations and clears them.
    pub fn apply_frames(&mut self) {
        let frames = std::mem::take(&mut self.frames);
        for (q, &f) in frames.iter().enumerate() {
            if f != 0.0 {
                self.apply_1q(q, rz_matrix(f));
            }
        }
        self.frames = vec![0.0; self.n_qubits];
    }

    /// Sideband pulse on qubit `q`. Red couples |S,n> with |D,n-1>, blue couples
    /// |S,n> with |D,n+1>; `theta` is the angle on the |S,0> - |D,1> transition
    /// and other pairs rotate faster by the square-root matrix element.
    pub fn apply_sideband(&mut self, q: usize, theta: f64, phi: f64, blue: bool) -> Result<(), EngineError> {
        self.check_target(q)?;
        if self.phonon.is_none() {
            return Err(EngineError::NoPhonon);
        }
        let spin = self.spin_dim();
        let n_max = self.fock_levels() - 1;
        let bit = 1usize << q;
        for n in 0..=n_max {
            let (m, factor) = if blue {
                if n == n_max {
                    continue;
                }
                (n + 1, ((n + 1) as f64).sqrt())
            } else {
                if n == 0 {
                    continue;
                }
                (n - 1, (n as f64).sqrt())
            };
            let u = rotation_matrix(theta * factor, phi);
            for s in (0..spin).filter(|s| s & bit != 0) {
                let is = s + spin * n;
                let id = (s ^ bit) + spin * m;
                let (d, b) = (self.amplitudes[id], self.amplitudes[is]);
                self.amplitudes[id] = u[0][0] * d + u[0][1] * b;
                self.amplitudes[is] = u[1][0] * d + u[1][1] * b;
            }
        }
        Ok(())
    }

    /// Ideal MS gate exp(-i chi sum_{i<j} w_i w_j s_i s_j), s_j = cos(phi_j) X + sin(phi_j) Y.
    ///
    /// With unit weights and zero phases this is exp(-i chi/2 (S_x^2 - N)).
    pub fn apply_ms_ideal(&mut self, targets: &[usize], chi: f64) -> Result<(), EngineError> {
        self.apply_ms_weighted(targets, chi, None, None)
    }

    pub fn apply_ms_weighted(
        &mut self,
        targets: &[usize],
        chi: f64,
        weights: Option<&[f64]>,
        phases: Option<&[f64]>,
    ) -> Result<(), EngineError> {
        if targets.len() < 2 {
            return Err(EngineError::InvalidTargets("MS needs at least two targets".into()));
        }
        let mut seen = 0usize;
        for &q in targets {
            self.check_target(q)?;
            if seen & (1 << q) != 0 {
                return Err(EngineError::InvalidTargets(format!("duplicate target {q}")));
            }
            seen |= 1 << q;
        }
        let w: Vec<f64> = weights.map(|w| w.to_vec()).unwrap_or_else(|| vec![1.0; targets.len()]);
        let ph: Vec<f64> = phases.map(|p| p.to_vec()).unwrap_or_else(|| vec![0.0; targets.len()]);
        // Rotate each axis onto X, then X onto Z.
        let h = hadamard();
        for (k, &q) in targets.iter().enumerate() {
            if ph[k] != 0.0 {
                self.apply_1q(q, rz_matrix(-ph[k]));
            }
            self.apply_1q(q, h);
        }
        let sum_w2: f64 = w.iter().map(|x| x * x).sum();
        let mask = self.spin_dim() - 1;
        for (idx, a) in self.amplitudes.iter_mut().enumerate() {
            let s = idx & mask;
            // Z eigenvalue: +1 for bit 0, -1 for bit 1.
            let m: f64 = targets
                .iter()
                .zip(&w)
                .map(|(&q, &wq)| if s & (1 << q) == 0 { wq } else { -wq })
                .sum();
            let angle = -chi * (m * m - sum_w2) / 2.0;
            *a *= C64::from_polar(1.0, angle);
        }
        for (k, &q) in targets.iter().enumerate() {
            self.apply_1q(q, h);
            if ph[k] != 0.0 {
                self.apply_1q(q, rz_matrix(ph[k]));
            }
        }
        Ok(())
    }

    /// Probability of each spin pattern, summed over Fock levels.
    pub fn spin_probabilities(&self) -> Vec<f64> {
        let dim = self.spin_dim();
        let mut p = vec![0.0; dim];
        for (i, a) in self.amplitudes.iter().enumerate() {
            p[i & (dim - 1)] += a.norm_sqr();
        }
        p
    }

    /// Probability of each Fock level.
    pub fn fock_probabilities(&self) -> Vec<f64> {
        let dim = self.spin_dim();
        let mut p = vec![0.0; self.fock_levels()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            p[i / dim] += a.norm_sqr();
        }
        p
    }

    /// Probability that qubit `q` is in D.
    pub fn dark_probability(&self, q: usize) -> f64 {
        let bit = 1usize << q;
        self.amplitudes.iter().enumerate().filter(|(i, _)| i & bit == 0).map(|(_, a)| a.norm_sqr()).sum()
    }

    /// Reduced spin density matrix (row-major, dim 2^n), tracing out the phonon.
    pub fn reduced_spin(&self) -> Vec<C64> {
        let dim = self.spin_dim();
        let mut rho = vec![C64::new(0.0, 0.0); dim * dim];
        for f in 0..self.fock_levels() {
            let block = &self.amplitudes[f * dim..(f + 1) * dim];
            for r in 0..dim {
                if block[r] == C64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..dim {
                    rho[r * dim + c] += block[r] * block[c].conj();
                }
            }
        }
        rho
    }

    /// Reduced phonon density matrix (row-major), tracing out the spins.
    pub fn reduced_phonon(&self) -> Vec<C64> {
        let dim = self.spin_dim();
        let lv = self.fock_levels();
        let mut rho = vec![C64::new(0.0, 0.0); lv * lv];
        for m in 0..lv {
            for n in 0..lv {
                let mut acc = C64::new(0.0, 0.0);
                for s in 0..dim {
                    acc += self.amplitudes[s + m * dim] * self.amplitudes[s + n * dim].conj();
                }
                rho[m * lv + n] = acc;
            }
        }
        rho
    }

    /// Spin part when the phonon is in a product state; phase fixed by the largest entry.
    pub fn spin_vector(&self) -> Vec<C64> {
        if self.fock_levels() == 1 {
            return self.amplitudes.clone();
        }
        let dim = self.spin_dim();
        let p = self.fock_probabilities();
        let f = p.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0);
        let mut v = self.amplitudes[f * dim..(f + 1) * dim].to_vec();
        let n: f64 = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= n);
        v
    }

    /// Projects onto a spin pattern and renormalises. Returns false if the pattern has no weight.
    pub fn collapse_to(&mut self, pattern: usize) -> bool {
        let mask = self.spin_dim() - 1;
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            if i & mask != pattern {
                *a = C64::new(0.0, 0.0);
            }
        }
        let n = self.norm();
        if n == 0.0 {
            return false;
        }
        self.normalize();
        true
    }

    /// Flips qubit `q` in every amplitude (an X without phase).
    pub fn flip(&mut self, q: usize) {
        self.apply_pauli(q, 1);
    }
}

pub fn rotation_matrix(theta: f64, phi: f64) -> [[C64; 2]; 2] {
    let c = C64::new((theta / 2.0).cos(), 0.0);
    let s = (theta / 2.0).sin();
    [
        [c, -I * C64::from_polar(s, -phi)],
        [-I * C64::from_polar(s, phi), c],
    ]
}

pub fn rz_matrix(theta: f64) -> [[C64; 2]; 2] {
    let z = C64::new(0.0, 0.0);
    [[C64::from_polar(1.0, -theta / 2.0), z], [z, C64::from_polar(1.0, theta / 2.0)]]
}

fn hadamard() -> [[C64; 2]; 2] {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

/// |<a|b>|^2 for two normalised vectors.
pub fn overlap(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>().norm_sqr()
}

/// <psi| rho |psi> for a row-major density matrix.
pub fn expectation(rho: &[C64], psi: &[C64]) -> f64 {
    let d = psi.len();
    let mut acc = C64::new(0.0, 0.0);
    for r in 0..d {
        for c in 0..d {
            acc += psi[r].conj() * rho[r * d + c] * psi[c];
        }
    }
    acc.re
}

/// Tr(rho^2).
pub fn purity(rho: &[C64]) -> f64 {
    rho.iter().map(|x| x.norm_sqr()).sum()
}

/// Fidelity to the closest GHZ state (|0..0> + e^{ia}|1..1>)/sqrt(2).
pub fn ghz_fidelity(amplitudes: &[C64], n_qubits: usize) -> f64 {
    let all = (1usize << n_qubits) - 1;
    let (a, b) = (amplitudes[0], amplitudes[all]);
    0.5 * (a.norm_sqr() + b.norm_sqr()) + a.norm() * b.norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn pi_rotation_of_dark_gives_minus_i_bright() {
        let mut s = RegisterState::from_amplitudes(1, vec![c(1.0, 0.0), c(0.0, 0.0)]);
        s.apply_rotation(&[0], PI, 0.0, None).unwrap();
        assert!(close(s.amplitudes[1], c(0.0, -1.0), 1e-15));
        assert!(s.amplitudes[0].norm() < 1e-15);
    }

    #[test]
    fn zero_angle_is_identity() {
        let v = vec![c(0.6, 0.1), c(-0.2, 0.768_114_574_786_860_9)];
        let mut s = RegisterState::from_amplitudes(1, v.clone());
        s.apply_rotation(&[0], 0.0, 1.3, None).unwrap();
        s.apply_rz(&[0], 0.0).unwrap();
        for (a, b) in s.amplitudes.iter().zip(&v) {
            assert!(close(*a, *b, 1e-15));
        }
    }

    #[test]
    fn rz_pi_maps_plus_to_minus() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut s = RegisterState::from_amplitudes(1, vec![c(h, 0.0), c(h, 0.0)]);
        s.apply_rz(&[0], PI).unwrap();
        let minus = [c(h, 0.0), c(-h, 0.0)];
        assert!((overlap(&s.amplitudes, &minus) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rz_from_three_rotations() {
        // Time order: R(pi/2, pi/2), then R(theta, 0), then R(pi/2, -pi/2).
        for &theta in &[0.3, 1.1, -2.0, PI] {
            let v = vec![c(0.28, -0.5), c(0.7, 0.4125)];
            let n: f64 = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            let v: Vec<C64> = v.iter().map(|a| a / n).collect();
            let mut a = RegisterState::from_amplitudes(1, v.clone());
            a.apply_rz(&[0], theta).unwrap();
            let mut b = RegisterState::from_amplitudes(1, v);
            b.apply_rotation(&[0], FRAC_PI_2, FRAC_PI_2, None).unwrap();
            b.apply_rotation(&[0], theta, 0.0, None).unwrap();
            b.apply_rotation(&[0], FRAC_PI_2, -FRAC_PI_2, None).unwrap();
            assert!((overlap(&a.amplitudes, &b.amplitudes) - 1.0).abs() < 1e-12, "theta {theta}");
        }
    }

    #[test]
    fn two_ion_ms_matches_closed_form() {
        for &chi in &[0.0, FRAC_PI_8, FRAC_PI_4] {
            for col in 0..4 {
                let mut v = vec![c(0.0, 0.0); 4];
                v[col] = c(1.0, 0.0);
                let mut s = RegisterState::from_amplitudes(2, v);
                s.apply_ms_ideal(&[0, 1], chi).unwrap();
                for row in 0..4 {
                    let expect = if row == col {
                        c(chi.cos(), 0.0)
                    } else if row == 3 - col {
                        c(0.0, -chi.sin())
                    } else {
                        c(0.0, 0.0)
                    };
                    assert!(close(s.amplitudes[row], expect, 1e-12), "chi {chi} ({row},{col})");
                }
            }
        }
    }

    #[test]
    fn ms_on_bright_pair_gives_bell_state() {
        let mut s = RegisterState::new(2);
        s.apply_ms_ideal(&[0, 1], FRAC_PI_4).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(s.amplitudes[3], c(h, 0.0), 1e-12));
        assert!(close(s.amplitudes[0], c(0.0, -h), 1e-12));
    }

    #[test]
    fn ms_rejects_bad_targets() {
        let mut s = RegisterState::new(3);
        assert!(s.apply_ms_ideal(&[1], 0.1).is_err());
        assert!(s.apply_ms_ideal(&[1, 1], 0.1).is_err());
        assert!(s.apply_ms_ideal(&[0, 3], 0.1).is_err());
    }

    #[test]
    fn collapse_and_probabilities() {
        let mut s = RegisterState::new(2);
        s.apply_rotation(&[0], FRAC_PI_2, 0.0, None).unwrap();
        let p = s.spin_probabilities();
        assert!((p[3] - 0.5).abs() < 1e-12 && (p[2] - 0.5).abs() < 1e-12);
        assert!((s.dark_probability(0) - 0.5).abs() < 1e-12);
        assert!(s.collapse_to(2));
        assert!((s.amplitudes[2].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phonon_layout() {
        let mode = PhononMode { frequency: 1.0, n_max: 3, n_bar_initial: 0.0 };
        let s = RegisterState::with_phonon(2, mode.clone(), 2, 1 << 20).unwrap();
        assert_eq!(s.amplitudes.len(), 16);
        assert_eq!(s.fock_probabilities(), vec![0.0, 0.0, 1.0, 0.0]);
        assert!(RegisterState::with_phonon(20, PhononMode { n_max: 100, ..mode }, 0, 1 << 20).is_err());
    }

    #[test]
    fn sideband_pulses() {
        let mode = PhononMode { frequency: 1.0, n_max: 5, n_bar_initial: 0.0 };
        let mut s = RegisterState::with_phonon(1, mode.clone(), 0, usize::MAX).unwrap();
        s.apply_sideband(0, PI, 0.0, false).unwrap();
        assert!((s.dark_probability(0)).abs() < 1e-15);
        s.apply_sideband(0, PI, 0.0, true).unwrap();
        assert!((s.dark_probability(0) - 1.0).abs() < 1e-15);
        assert!((s.fock_probabilities()[1] - 1.0).abs() < 1e-15);
        let mut r = RegisterState::with_phonon(1, mode, 4, usize::MAX).unwrap();
        r.apply_sideband(0, 0.3, 0.0, false).unwrap();
        assert!((r.dark_probability(0) - (0.3f64 * 2.0 / 2.0).sin().powi(2)).abs() < 1e-14);
        assert!((r.norm() - 1.0).abs() < 1e-14);
    }
}

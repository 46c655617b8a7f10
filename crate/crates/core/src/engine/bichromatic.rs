//! Two-tone MS interaction integrated in a truncated Fock space.
//!
//! In the interaction picture each ion j sees
//!
//! H_j = (Omega_j/2) |S><D| e^{i phi_j} E_j(t) sum_k e^{-i omega_k t + i phi_k} + h.c.
//!
//! with E_j(t) = exp(i eta_j (a e^{-i nu t} + a^dag e^{i nu t})) kept to all orders.
//! The Lamb-Dicke exponential is evaluated once as E0 = exp(i eta (a + a^dag)) and
//! moved to time t with Fock phases, E(t)_{mn} = e^{i nu t (m-n)} E0_{mn}.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::state::{expectation, purity, PhononMode, RegisterState};
use super::EngineError;

#[derive(Debug, Clone, PartialEq)]
pub struct BichromaticParams {
    pub targets: Vec<usize>,
    /// Rabi frequency per ion and tone, rad/s.
    pub rabi: Vec<f64>,
    /// Lamb-Dicke parameter per ion for the bus mode.
    pub eta: Vec<f64>,
    /// Spin phase per ion, rad.
    pub spin_phases: Vec<f64>,
    /// Tone offsets from the qubit transition, rad/s.
    pub tones: Vec<f64>,
    pub tone_phases: Vec<f64>,
    /// Bus mode frequency, rad/s.
    pub nu: f64,
    /// Detuning from the sidebands, rad/s. Negative flips the sign of the gate.
    pub delta: f64,
    /// Gate duration, s.
    pub duration: f64,
}

impl BichromaticParams {
    /// Symmetric tones at +-(nu + delta) with a closed loop at t = 2 pi / |delta|.
    pub fn symmetric(targets: Vec<usize>, eta: f64, rabi: f64, nu: f64, delta: f64) -> Self {
        let n = targets.len();
        Self {
            rabi: vec![rabi; n],
            eta: vec![eta; n],
            spin_phases: vec![0.0; n],
            tones: vec![nu + delta, -(nu + delta)],
            tone_phases: vec![FRAC_PI_2, FRAC_PI_2],
            nu,
            delta,
            duration: 2.0 * PI / delta.abs(),
            targets,
        }
    }

    /// Highest frequency in the interaction-picture Hamiltonian, rad/s.
    pub fn max_frequency(&self) -> f64 {
        self.tones.iter().fold(0.0f64, |m, w| m.max(w.abs())) + self.nu
    }

    /// Starting guess for the Rabi frequency giving MS angle `chi` at closure.
    pub fn analytic_rabi(eta: f64, delta: f64, chi: f64) -> f64 {
        delta.abs() / eta * (chi.abs() / PI).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    /// Minimum number of steps per period of the fastest term.
    pub steps_per_period: usize,
    /// Explicit step, s. Rejected when coarser than the bound above.
    pub step: Option<f64>,
    /// Highest allowed population in the top Fock level.
    pub leakage_threshold: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self { steps_per_period: 50, step: None, leakage_threshold: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BichromaticReport {
    pub steps: usize,
    pub step: f64,
    /// Largest population seen in the top Fock level.
    pub leakage: f64,
}

/// exp(i eta (a + a^dag)) on `levels` Fock states, computed on a larger space and truncated.
pub fn lamb_dicke_exponential(eta: f64, levels: usize) -> DMatrix<C64> {
    let big = levels + 24;
    let mut x = DMatrix::<f64>::zeros(big, big);
    for n in 0..big - 1 {
        let v = ((n + 1) as f64).sqrt();
        x[(n, n + 1)] = v;
        x[(n + 1, n)] = v;
    }
    let eig = nalgebra::SymmetricEigen::new(x);
    let mut out = DMatrix::<C64>::zeros(levels, levels);
    for r in 0..levels {
        for c in 0..levels {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..big {
                acc += C64::from_polar(eig.eigenvectors[(r, k)] * eig.eigenvectors[(c, k)], eta * eig.eigenvalues[k]);
            }
            out[(r, c)] = acc;
        }
    }
    out
}

struct Hamiltonian<'a> {
    p: &'a BichromaticParams,
    n_qubits: usize,
    levels: usize,
    e0: Vec<DMatrix<C64>>,
    e0_conj: Vec<DMatrix<C64>>,
}

impl Hamiltonian<'_> {
    /// out = H(t) psi.
    fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        let dim = 1usize << self.n_qubits;
        let lv = self.levels;
        let fock_phase: Vec<C64> = (0..lv).map(|m| C64::from_polar(1.0, self.p.nu * t * m as f64)).collect();
        let drive: C64 = self
            .p
            .tones
            .iter()
            .zip(&self.p.tone_phases)
            .map(|(w, ph)| C64::from_polar(1.0, -w * t + ph))
            .sum();
        let mut v = vec![C64::new(0.0, 0.0); lv];
        for (j, &q) in self.p.targets.iter().enumerate() {
            let c = drive * C64::from_polar(self.p.rabi[j] / 2.0, self.p.spin_phases[j]);
            let cc = c.conj();
            let bit = 1usize << q;
            for s in 0..dim {
                if s & bit != 0 {
                    continue;
                }
                let s1 = s | bit;
                // |S><D| E(t): D component of s feeds S component of s1.
                for m in 0..lv {
                    v[m] = fock_phase[m].conj() * psi[s + m * dim];
                }
                let e = &self.e0[j];
                for mp in 0..lv {
                    let mut acc = C64::new(0.0, 0.0);
                    for m in 0..lv {
                        acc += e[(mp, m)] * v[m];
                    }
                    out[s1 + mp * dim] += c * fock_phase[mp] * acc;
                }
                // Hermitian conjugate.
                for m in 0..lv {
                    v[m] = fock_phase[m].conj() * psi[s1 + m * dim];
                }
                let ec = &self.e0_conj[j];
                for mp in 0..lv {
                    let mut acc = C64::new(0.0, 0.0);
                    for m in 0..lv {
                        acc += ec[(mp, m)] * v[m];
                    }
                    out[s + mp * dim] += cc * fock_phase[mp] * acc;
                }
            }
        }
    }
}

/// Integrates the two-tone interaction over `params.duration`.
pub fn apply_ms_bichromatic(state: &mut RegisterState, params: &BichromaticParams, opts: &IntegratorOptions) -> Result<BichromaticReport, EngineError> {
    let mode = state.phonon.clone().ok_or(EngineError::NoPhonon)?;
    let n = params.targets.len();
    if params.rabi.len() != n || params.eta.len() != n || params.spin_phases.len() != n || params.tones.len() != params.tone_phases.len() {
        return Err(EngineError::InvalidTargets("bichromatic parameter lengths differ".into()));
    }
    for &q in &params.targets {
        state.check_target(q)?;
    }
    if !(params.duration > 0.0) {
        return Err(EngineError::InvalidTargets("gate duration must be positive".into()));
    }
    let levels = mode.n_max + 1;
    let bound = 2.0 * PI / (opts.steps_per_period as f64 * params.max_frequency());
    let step = match opts.step {
        Some(h) if h > bound * (1.0 + 1e-12) => return Err(EngineError::StepTooCoarse { step: h, bound }),
        Some(h) => h,
        None => bound,
    };
    let steps = (params.duration / step).ceil() as usize;
    let h = params.duration / steps as f64;
    let e0: Vec<_> = params.eta.iter().map(|&eta| lamb_dicke_exponential(eta, levels)).collect();
    let e0_conj = e0.iter().map(|m| m.map(|x| x.conj())).collect();
    let ham = Hamiltonian { p: params, n_qubits: state.n_qubits, levels, e0, e0_conj };

    let dim = state.amplitudes.len();
    let spin_dim = state.spin_dim();
    let mut term = vec![C64::new(0.0, 0.0); dim];
    let mut next = vec![C64::new(0.0, 0.0); dim];
    let mut leakage = 0.0f64;
    let top = mode.n_max * spin_dim;
    for k in 0..steps {
        let t_mid = (k as f64 + 0.5) * h;
        // Taylor series of exp(-i H h) applied to the state.
        term.copy_from_slice(&state.amplitudes);
        for order in 1..=20 {
            ham.apply(t_mid, &term, &mut next);
            let f = C64::new(0.0, -h / order as f64);
            let mut size = 0.0;
            for (tm, nx) in term.iter_mut().zip(&next) {
                *tm = f * nx;
                size += tm.norm_sqr();
            }
            for (a, tm) in state.amplitudes.iter_mut().zip(&term) {
                *a += tm;
            }
            if size < 1e-32 {
                break;
            }
        }
        if k % 64 == 0 || k + 1 == steps {
            let top_pop: f64 = state.amplitudes[top..].iter().map(|a| a.norm_sqr()).sum();
            leakage = leakage.max(top_pop);
        }
    }
    state.normalize();
    if leakage > opts.leakage_threshold {
        return Err(EngineError::FockLeakage { population: leakage });
    }
    Ok(BichromaticReport { steps, step: h, leakage })
}

/// Outcome of running the gate on |S...S>|0> and comparing to the ideal gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateCheck {
    pub fidelity: f64,
    pub spin_purity: f64,
    pub phonon_ground: f64,
    pub leakage: f64,
}

/// Runs the gate on |S...S>|0> and compares with the ideal MS(chi).
pub fn check_gate(n_qubits: usize, params: &BichromaticParams, chi: f64, n_max: usize, opts: &IntegratorOptions) -> Result<GateCheck, EngineError> {
    let mode = PhononMode { frequency: params.nu, n_max, n_bar_initial: 0.0 };
    let mut s = RegisterState::with_phonon(n_qubits, mode, 0, usize::MAX)?;
    let report = apply_ms_bichromatic(&mut s, params, opts)?;
    let mut ideal = RegisterState::new(n_qubits);
    ideal.apply_ms_weighted(&params.targets, chi, None, Some(&params.spin_phases))?;
    let rho = s.reduced_spin();
    let phonon = s.reduced_phonon();
    Ok(GateCheck {
        fidelity: expectation(&rho, &ideal.amplitudes),
        spin_purity: purity(&rho),
        phonon_ground: phonon[0].re,
        leakage: report.leakage,
    })
}

/// Rabi frequency maximising the fidelity to MS(chi) at closure, found by two
/// rounds of parabolic interpolation around the analytic estimate.
pub fn calibrate_rabi(n_ions: usize, eta: f64, nu: f64, delta: f64, chi: f64, n_max: usize) -> Result<f64, EngineError> {
    let targets: Vec<usize> = (0..n_ions).collect();
    let opts = IntegratorOptions { leakage_threshold: 1.0, ..IntegratorOptions::default() };
    let fid = |rabi: f64| -> Result<f64, EngineError> {
        let p = BichromaticParams::symmetric(targets.clone(), eta, rabi, nu, delta);
        Ok(check_gate(n_ions, &p, chi, n_max, &opts)?.fidelity)
    };
    let mut center = BichromaticParams::analytic_rabi(eta, delta, chi);
    for rel in [0.03, 0.003] {
        let h = center * rel;
        let (fm, f0, fp) = (fid(center - h)?, fid(center)?, fid(center + h)?);
        let curv = fp - 2.0 * f0 + fm;
        if curv < 0.0 {
            let shift = 0.5 * h * (fm - fp) / curv;
            center += shift.clamp(-2.0 * h, 2.0 * h);
        }
    }
    Ok(center)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lamb_dicke_exponential_is_unitary_on_low_levels() {
        let e = lamb_dicke_exponential(0.1, 12);
        let p = &e.adjoint() * &e;
        for r in 0..6 {
            for c in 0..6 {
                let want = if r == c { 1.0 } else { 0.0 };
                assert!((p[(r, c)] - C64::new(want, 0.0)).norm() < 1e-12);
            }
        }
        // <0|E|0> = exp(-eta^2/2)
        assert!((e[(0, 0)].re - (-0.005f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn zero_eta_leaves_spin_alone() {
        let nu = 2.0 * PI * 1e6;
        let delta = 2.0 * PI * 5e3;
        let p = BichromaticParams::symmetric(vec![0, 1], 0.0, 2.0 * PI * 20e3, nu, delta);
        let opts = IntegratorOptions::default();
        let c = check_gate(2, &p, 0.0, 4, &opts).unwrap();
        assert!(c.fidelity > 1.0 - 1e-6, "{}", c.fidelity);
        assert!((c.phonon_ground - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coarse_step_is_rejected() {
        let p = BichromaticParams::symmetric(vec![0, 1], 0.1, 1e5, 2.0 * PI * 1e6, 2.0 * PI * 5e3);
        let mode = PhononMode { frequency: p.nu, n_max: 3, n_bar_initial: 0.0 };
        let mut s = RegisterState::with_phonon(2, mode, 0, usize::MAX).unwrap();
        let opts = IntegratorOptions { step: Some(1e-6), ..IntegratorOptions::default() };
        assert!(matches!(apply_ms_bichromatic(&mut s, &p, &opts), Err(EngineError::StepTooCoarse { .. })));
        let mut bare = RegisterState::new(2);
        assert!(matches!(apply_ms_bichromatic(&mut bare, &p, &IntegratorOptions::default()), Err(EngineError::NoPhonon)));
    }

    #[test]
    fn calibrated_gate_at_closure() {
        let (eta, nu, delta, chi) = (0.095, 2.0 * PI * 1e6, 2.0 * PI / 200e-6, PI / 4.0);
        let rabi = calibrate_rabi(2, eta, nu, delta, chi, 10).unwrap();
        let p = BichromaticParams::symmetric(vec![0, 1], eta, rabi, nu, delta);
        let c = check_gate(2, &p, chi, 10, &IntegratorOptions::default()).unwrap();
        eprintln!("rabi/analytic {} {:?}", rabi / BichromaticParams::analytic_rabi(eta, delta, chi), c);
        assert!(c.fidelity >= 0.999 && c.spin_purity >= 0.999, "{c:?}");
        assert!(c.leakage < 1e-6);
        assert!(c.phonon_ground > 0.999);

        let fine = IntegratorOptions { step: Some(0.5 * 2.0 * PI / (50.0 * p.max_frequency())), ..IntegratorOptions::default() };
        let half = check_gate(2, &p, chi, 10, &fine).unwrap();
        eprintln!("halved {:?}", half);
        assert!((half.fidelity - c.fidelity).abs() < 1e-4);
    }
}

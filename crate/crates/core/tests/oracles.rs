//! Independent density-matrix oracle for the Monte Carlo engine.
//!
//! The oracle walks a compiled schedule with its own gate matrices and
//! noise channels written as CPTP maps, then the engine's sampled outcome
//! distribution is compared with the exact one.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use iontrap::compiler::{compile, Bus, Channel, CircuitIR, Instruction, MachineConfig, PulseKind, PulseSchedule, QubitKind, Targets};
use iontrap::engine::{EngineConfig, NoiseConfig, Simulator};

type Rho = DMatrix<C64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Basis order (D, S), matching bit 0 = D.
fn rot(theta: f64, phi: f64) -> [[C64; 2]; 2] {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    [[C64::new(c, 0.0), -I * C64::from_polar(s, -phi)], [-I * C64::from_polar(s, phi), C64::new(c, 0.0)]]
}

fn pauli(k: usize) -> [[C64; 2]; 2] {
    match k {
        0 => [[ONE, ZERO], [ZERO, ONE]],
        1 => [[ZERO, ONE], [ONE, ZERO]],
        2 => [[ZERO, -I], [I, ZERO]],
        _ => [[ONE, ZERO], [ZERO, -ONE]],
    }
}

/// Full-register operator acting with `m` on qubit `q`.
fn embed(n: usize, q: usize, m: [[C64; 2]; 2]) -> DMatrix<C64> {
    let d = 1 << n;
    DMatrix::from_fn(d, d, |r, c| if (r ^ c) & !(1 << q) != 0 { ZERO } else { m[(r >> q) & 1][(c >> q) & 1] })
}

fn conj(rho: &Rho, u: &DMatrix<C64>) -> Rho {
    u * rho * u.adjoint()
}

/// exp(-i chi sum_{i<j} X_i X_j) over `targets`, by diagonalising the real generator.
fn ms(n: usize, targets: &[usize], chi: f64) -> DMatrix<C64> {
    let d = 1 << n;
    let mut h = DMatrix::<f64>::zeros(d, d);
    for (a, &i) in targets.iter().enumerate() {
        for &j in &targets[a + 1..] {
            let flip = (1 << i) | (1 << j);
            for r in 0..d {
                h[(r ^ flip, r)] += 1.0;
            }
        }
    }
    let eig = SymmetricEigen::new(h);
    let v = eig.eigenvectors.map(|x| C64::new(x, 0.0));
    let phase = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, -chi * l)));
    &v * phase * v.transpose()
}

fn depolarize(rho: &Rho, n: usize, targets: &[usize], eps: f64) -> Rho {
    if eps == 0.0 {
        return rho.clone();
    }
    let k = targets.len();
    let mut acc = Rho::zeros(rho.nrows(), rho.ncols());
    for code in 0..4usize.pow(k as u32) {
        let mut u = DMatrix::identity(1 << n, 1 << n);
        for (a, &q) in targets.iter().enumerate() {
            u = embed(n, q, pauli((code >> (2 * a)) & 3)) * u;
        }
        acc += conj(rho, &u);
    }
    rho * C64::new(1.0 - eps, 0.0) + acc * C64::new(eps / 4f64.powi(k as i32), 0.0)
}

fn dephase(rho: &mut Rho, n: usize, dt: f64, t2: f64) {
    if !t2.is_finite() {
        return;
    }
    let f = (-dt / t2).exp();
    for r in 0..rho.nrows() {
        for c in 0..rho.ncols() {
            let differing = ((r ^ c) & ((1 << n) - 1)).count_ones();
            rho[(r, c)] *= f.powi(differing as i32);
        }
    }
}

/// Amplitude damping D -> S on every qubit.
fn damp(rho: &Rho, n: usize, dt: f64, t1: f64) -> Rho {
    if !t1.is_finite() {
        return rho.clone();
    }
    let g = 1.0 - (-dt / t1).exp();
    let mut out = rho.clone();
    for q in 0..n {
        let k0 = embed(n, q, [[C64::new((1.0 - g).sqrt(), 0.0), ZERO], [ZERO, ONE]]);
        let k1 = embed(n, q, [[ZERO, ZERO], [C64::new(g.sqrt(), 0.0), ZERO]]);
        out = conj(&out, &k0) + conj(&out, &k1);
    }
    out
}

struct Oracle {
    n: usize,
    noise: NoiseConfig,
    machine: MachineConfig,
    crosstalk: DMatrix<f64>,
    rho: Rho,
    now_ns: u64,
}

impl Oracle {
    fn new(machine: MachineConfig, noise: NoiseConfig, crosstalk: DMatrix<f64>) -> Self {
        let n = machine.n_qubits;
        let mut o = Self { n, noise, machine, crosstalk, rho: Rho::zeros(1 << n, 1 << n), now_ns: 0 };
        o.prepare();
        o
    }

    /// Every qubit in S, flipped to D with the preparation error.
    fn prepare(&mut self) {
        let p = self.noise.spam_prep;
        let d = 1 << self.n;
        self.rho = Rho::zeros(d, d);
        for i in 0..d {
            let dark = (0..self.n).filter(|q| i & (1 << q) == 0).count() as i32;
            self.rho[(i, i)] = C64::new(p.powi(dark) * (1.0 - p).powi(self.n as i32 - dark), 0.0);
        }
    }

    fn idle(&mut self, until_ns: u64, kind: QubitKind) {
        if until_ns <= self.now_ns {
            return;
        }
        let dt = (until_ns - self.now_ns) as f64 * 1e-9;
        self.now_ns = until_ns;
        let t2 = match kind {
            QubitKind::Ground => self.noise.t2_ground,
            QubitKind::Optical => self.noise.t2_optical,
        };
        dephase(&mut self.rho, self.n, dt, t2);
        if kind == QubitKind::Optical {
            self.rho = damp(&self.rho, self.n, dt, self.noise.t1);
        }
    }

    fn area(&self, amplitude: f64, duration_ns: u64) -> f64 {
        amplitude * FRAC_PI_2 * duration_ns as f64 / self.machine.t_half_pi_ns() as f64
    }

    fn run(&mut self, schedule: &PulseSchedule) {
        let mut events = schedule.events.clone();
        events.sort_by_key(|e| e.start_ns);
        for e in &events {
            self.idle(e.start_ns, QubitKind::Optical);
            match e.kind {
                PulseKind::Prepare => self.prepare(),
                PulseKind::Carrier => {
                    let theta = self.area(e.amplitude, e.duration_ns);
                    match e.channel {
                        Channel::Addressed(j) => {
                            for i in 0..self.n {
                                let s = self.crosstalk[(i, j)];
                                if s > 0.0 {
                                    self.rho = conj(&self.rho, &embed(self.n, i, rot(theta * s, e.phase)));
                                }
                            }
                        }
                        _ => {
                            for &q in &e.targets {
                                self.rho = conj(&self.rho, &embed(self.n, q, rot(theta, e.phase)));
                            }
                        }
                    }
                    for &q in &e.targets {
                        self.rho = depolarize(&self.rho, self.n, &[q], self.noise.eps_1q);
                    }
                    self.idle(e.start_ns + e.duration_ns, QubitKind::Optical);
                }
                PulseKind::Bichromatic => {
                    assert_eq!(e.channel, Channel::Global, "oracle covers global gates only");
                    let chi = e.amplitude * e.amplitude * FRAC_PI_4;
                    self.rho = conj(&self.rho, &ms(self.n, &e.targets, chi));
                    self.rho = depolarize(&self.rho, self.n, &e.targets, self.noise.eps_2q);
                    self.idle(e.start_ns + e.duration_ns, QubitKind::Optical);
                }
                PulseKind::Idle => self.idle(e.start_ns + e.duration_ns, e.encoding.unwrap_or(QubitKind::Optical)),
                PulseKind::Measure => return,
                k => panic!("oracle does not model {k:?}"),
            }
        }
    }

    /// Outcome distribution after projective readout and independent bit flips.
    fn outcomes(&self) -> Vec<f64> {
        let d = 1 << self.n;
        let m = self.noise.spam_meas;
        (0..d)
            .map(|read| {
                (0..d)
                    .map(|true_pat| {
                        let flips = ((read ^ true_pat) as u32).count_ones() as i32;
                        self.rho[(true_pat, true_pat)].re * m.powi(flips) * (1.0 - m).powi(self.n as i32 - flips)
                    })
                    .sum()
            })
            .collect()
    }
}

fn test_circuit() -> CircuitIR {
    CircuitIR {
        instructions: vec![
            Instruction::PrepareAll,
            Instruction::R { theta: FRAC_PI_2, phi: 0.0, targets: Targets::All },
            Instruction::Wait { duration_us: 500.0, kind: QubitKind::Ground },
            Instruction::R { theta: 0.8, phi: 0.4, targets: Targets::List(vec![0]) },
            Instruction::Ms { chi: FRAC_PI_4, targets: Targets::All, bus: Bus::Axial },
            Instruction::Wait { duration_us: 2000.0, kind: QubitKind::Optical },
            Instruction::R { theta: 1.1, phi: 0.3, targets: Targets::All },
            Instruction::MeasureAll { label: "m".into() },
        ],
    }
}

fn noisy() -> NoiseConfig {
    let mut n = NoiseConfig::quiet();
    n.t2_ground = 2e-3;
    n.t2_optical = 5e-3;
    n.t1 = 10e-3;
    n.eps_1q = 0.02;
    n.eps_2q = 0.05;
    n.spam_prep = 0.02;
    n.spam_meas = 0.01;
    n
}

fn crosstalk(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else if i.abs_diff(j) == 1 { 0.05 } else { 0.0 })
}

fn sampled(sim: &Simulator, schedule: &PulseSchedule, shots: u64, seed: u64) -> Vec<f64> {
    let res = sim.run(schedule, shots, seed, 0).unwrap();
    let mut hist = vec![0.0; 1 << sim.machine.n_qubits];
    for s in &res.shots {
        let bits = &s.final_measurement().bits;
        let pat: usize = bits.iter().enumerate().map(|(q, &b)| usize::from(b) << q).sum();
        hist[pat] += 1.0 / shots as f64;
    }
    hist
}

fn assert_close(mc: &[f64], exact: &[f64], shots: u64, k: f64) {
    for (pat, (&a, &b)) in mc.iter().zip(exact).enumerate() {
        let sigma = (b * (1.0 - b) / shots as f64).sqrt().max(1.0 / shots as f64);
        assert!((a - b).abs() <= k * sigma, "pattern {pat:03b}: sampled {a:.4}, exact {b:.4}, sigma {sigma:.4}");
    }
}

#[test]
fn engine_matches_density_matrix_under_full_noise() {
    let n = 3;
    let machine = MachineConfig::new(n);
    let schedule = compile(&test_circuit(), &machine).unwrap();
    let sim = Simulator::new(machine.clone(), noisy(), EngineConfig::default()).unwrap().with_crosstalk(crosstalk(n));

    let mut oracle = Oracle::new(machine.clone(), noisy(), crosstalk(n));
    oracle.run(&schedule);
    assert!((oracle.rho.trace().re - 1.0).abs() < 1e-12);
    let exact = oracle.outcomes();

    let shots = 40_000;
    assert_close(&sampled(&sim, &schedule, shots, 17), &exact, shots, 4.0);

    // The noise must matter at this sample size, or the comparison proves nothing.
    let mut clean = Oracle::new(machine, NoiseConfig::ideal(), crosstalk(n));
    clean.run(&schedule);
    let gap = clean.outcomes().iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(gap > 20.0 * (0.25 / shots as f64).sqrt(), "noise effect {gap}");
}

#[test]
fn engine_matches_density_matrix_without_noise() {
    let n = 3;
    let machine = MachineConfig::new(n);
    let schedule = compile(&test_circuit(), &machine).unwrap();
    let sim = Simulator::ideal(machine.clone()).unwrap().with_crosstalk(crosstalk(n));
    let mut oracle = Oracle::new(machine, NoiseConfig::ideal(), crosstalk(n));
    oracle.run(&schedule);
    let shots = 20_000;
    assert_close(&sampled(&sim, &schedule, shots, 5), &oracle.outcomes(), shots, 4.0);
}

#[test]
fn single_channels_match_their_maps() {
    // One channel switched on at a time isolates each map.
    let n = 2;
    let machine = MachineConfig::new(n);
    let schedule = compile(&test_circuit(), &machine).unwrap();
    let base = NoiseConfig::quiet();
    let variants: Vec<(&str, NoiseConfig)> = vec![
        ("t2", NoiseConfig { t2_ground: 1e-3, t2_optical: 3e-3, ..base.clone() }),
        ("t1", NoiseConfig { t1: 4e-3, ..base.clone() }),
        ("depolarizing", NoiseConfig { eps_1q: 0.05, eps_2q: 0.1, ..base.clone() }),
        ("spam", NoiseConfig { spam_prep: 0.05, spam_meas: 0.03, ..base }),
    ];
    for (i, (name, noise)) in variants.into_iter().enumerate() {
        let sim = Simulator::new(machine.clone(), noise.clone(), EngineConfig::default()).unwrap();
        let mut oracle = Oracle::new(machine.clone(), noise, DMatrix::identity(n, n));
        oracle.run(&schedule);
        let shots = 20_000;
        let mc = sampled(&sim, &schedule, shots, 100 + i as u64);
        let exact = oracle.outcomes();
        for (pat, (&a, &b)) in mc.iter().zip(&exact).enumerate() {
            let sigma = (b * (1.0 - b) / shots as f64).sqrt().max(1.0 / shots as f64);
            assert!((a - b).abs() <= 4.0 * sigma, "{name}, pattern {pat:02b}: {a:.4} vs {b:.4}");
        }
    }
}

#[test]
fn ms_generator_matches_closed_form_for_two_ions() {
    let chi = 0.37;
    let u = ms(2, &[0, 1], chi);
    for r in 0..4 {
        for c in 0..4 {
            let want = if r == c {
                C64::new(chi.cos(), 0.0)
            } else if r == 3 - c {
                C64::new(0.0, -chi.sin())
            } else {
                ZERO
            };
            assert!((u[(r, c)] - want).norm() < 1e-12);
        }
    }
}

//! Executes compiled pulse schedules shot by shot.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt::Write as _;
use std::sync::Mutex;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bichromatic::{apply_ms_bichromatic, calibrate_rabi, BichromaticParams, IntegratorOptions};
use super::detection::DetectionModel;
use super::noise::{self, NoiseConfig};
use super::state::{PhononMode, RegisterState};
use super::EngineError;
use crate::addressing::u3_effective_ratio;
use crate::chain::{self, IonSpecies, TrapConfig};
use crate::compiler::{BranchBlock, Bus, Channel, MachineConfig, PulseEvent, PulseKind, PulseSchedule, QubitKind};
use crate::constants::{QUBIT_WAVELENGTH_NM, SENSITIVITY_GROUND_MHZ_PER_MT, SENSITIVITY_OPTICAL_MHZ_PER_MT};
use crate::rng::{shot_rng, ShotRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MsModel {
    /// Closed-form propagator, no phonon attached.
    Ideal,
    /// Two-tone integration with the bus mode attached.
    Bichromatic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Upper bound on the state-vector size, bytes.
    pub max_bytes: usize,
    /// Highest Fock level kept for the bus mode.
    pub fock_cutoff: usize,
    pub ms_model: MsModel,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self { max_bytes: 1 << 30, fock_cutoff: 10, ms_model: MsModel::Ideal }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub label: String,
    /// true = bright (S).
    pub bits: Vec<bool>,
    pub counts: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub shot: u64,
    pub measurements: Vec<MeasurementRecord>,
    /// False when a background-gas collision happened during the shot.
    pub valid: bool,
}

impl ShotRecord {
    pub fn final_measurement(&self) -> &MeasurementRecord {
        self.measurements.last().expect("every shot ends with a measurement")
    }

    pub fn measurement(&self, label: &str) -> Option<&MeasurementRecord> {
        self.measurements.iter().rev().find(|m| m.label == label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub n_qubits: usize,
    pub shots: Vec<ShotRecord>,
}

impl RunResult {
    /// Fraction of shots in each final bit pattern (bit q = qubit q bright).
    pub fn populations(&self) -> Vec<f64> {
        let mut p = vec![0.0; 1 << self.n_qubits];
        for s in &self.shots {
            p[pattern(&s.final_measurement().bits)] += 1.0;
        }
        let n = self.shots.len().max(1) as f64;
        p.iter_mut().for_each(|x| *x /= n);
        p
    }

    pub fn population_errors(&self) -> Vec<f64> {
        let n = self.shots.len().max(1) as f64;
        self.populations().iter().map(|&p| (p * (1.0 - p) / n).sqrt()).collect()
    }

    /// Fraction of shots where qubit `q` read bright.
    pub fn bright_fraction(&self, q: usize) -> f64 {
        let n = self.shots.len().max(1) as f64;
        self.shots.iter().filter(|s| s.final_measurement().bits[q]).count() as f64 / n
    }

    pub fn valid_fraction(&self) -> f64 {
        let n = self.shots.len().max(1) as f64;
        self.shots.iter().filter(|s| s.valid).count() as f64 / n
    }

    /// `shot,bits,counts_q0..,valid`; bits are written qubit 0 first, 1 = bright.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("shot,bits");
        for q in 0..self.n_qubits {
            let _ = write!(out, ",counts_q{q}");
        }
        out.push_str(",valid\n");
        for s in &self.shots {
            let m = s.final_measurement();
            let bits: String = m.bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
            let _ = write!(out, "{},{}", s.shot, bits);
            for c in &m.counts {
                let _ = write!(out, ",{c}");
            }
            let _ = writeln!(out, ",{}", s.valid as u8);
        }
        out
    }
}

/// Index of a bit pattern, qubit 0 least significant.
pub fn pattern(bits: &[bool]) -> usize {
    bits.iter().enumerate().fold(0, |acc, (q, &b)| acc | ((b as usize) << q))
}

/// One shot in progress.
pub struct Trajectory {
    pub state: RegisterState,
    pub now_ns: u64,
    pub measurements: Vec<MeasurementRecord>,
    pub collisions: u64,
    last_measure_end: Option<u64>,
    bus: Option<Bus>,
    last_ms: Option<(u64, Vec<usize>)>,
}

pub struct Simulator {
    pub machine: MachineConfig,
    pub noise: NoiseConfig,
    pub engine: EngineConfig,
    /// Ion positions along the axis, um.
    pub positions_um: Vec<f64>,
    /// Entry (i, j): relative Rabi frequency on ion i when channel j fires.
    pub crosstalk: DMatrix<f64>,
    pub detection: DetectionModel,
    /// Lamb-Dicke parameter of each ion for the COM mode of each bus, filled on demand.
    eta: Mutex<HashMap<Bus, Vec<f64>>>,
    rabi: Mutex<HashMap<Bus, f64>>,
}

impl Simulator {
    pub fn new(machine: MachineConfig, noise: NoiseConfig, engine: EngineConfig) -> Result<Self, EngineError> {
        machine.validate()?;
        noise.validate()?;
        let trap = TrapConfig { omega_ax: machine.bus_axial, omega_rad: machine.bus_radial };
        let chain = chain::equilibrium_positions(machine.n_qubits, IonSpecies::calcium40(), trap)?;
        let n = machine.n_qubits;
        let detection = DetectionModel::new(&noise.detection);
        Ok(Self {
            positions_um: chain.positions.clone(),
            crosstalk: DMatrix::identity(n, n),
            detection,
            machine,
            noise,
            engine,
            eta: Mutex::new(HashMap::new()),
            rabi: Mutex::new(HashMap::new()),
        })
    }

    /// Noise-free simulator with ideal MS gates.
    pub fn ideal(machine: MachineConfig) -> Result<Self, EngineError> {
        Self::new(machine, NoiseConfig::ideal(), EngineConfig::default())
    }

    pub fn with_positions(mut self, positions_um: Vec<f64>) -> Self {
        assert_eq!(positions_um.len(), self.machine.n_qubits);
        self.positions_um = positions_um;
        self
    }

    pub fn with_crosstalk(mut self, matrix: DMatrix<f64>) -> Self {
        assert_eq!(matrix.nrows(), self.machine.n_qubits);
        self.crosstalk = matrix;
        self
    }

    fn bus_eta(&self, bus: Bus) -> Result<Vec<f64>, EngineError> {
        if let Some(v) = self.eta.lock().expect("eta cache").get(&bus) {
            return Ok(v.clone());
        }
        let trap = TrapConfig { omega_ax: self.machine.bus_axial, omega_rad: self.machine.bus_radial };
        let chain = chain::equilibrium_positions(self.machine.n_qubits, IonSpecies::calcium40(), trap)?;
        let mut spec = match bus {
            Bus::Axial => chain::axial_mode_spectrum(&chain),
            Bus::Radial => chain::radial_mode_spectrum(&chain)?,
        };
        let eta = chain::lamb_dicke_parameters(&mut spec, QUBIT_WAVELENGTH_NM, 0.0);
        let com = spec.com_index();
        let v: Vec<f64> = (0..self.machine.n_qubits).map(|j| eta[(j, com)]).collect();
        self.eta.lock().expect("eta cache").insert(bus, v.clone());
        Ok(v)
    }

    /// Calibrated Rabi frequency for an MS(pi/4) on `bus` with two ions.
    pub fn bus_rabi(&self, bus: Bus) -> Result<f64, EngineError> {
        if let Some(&r) = self.rabi.lock().expect("rabi cache").get(&bus) {
            return Ok(r);
        }
        let eta = self.bus_eta(bus)?[0];
        let r = calibrate_rabi(2, eta, self.machine.bus_frequency(bus), self.machine.ms_detuning(), FRAC_PI_4, self.engine.fock_cutoff)?;
        self.rabi.lock().expect("rabi cache").insert(bus, r);
        Ok(r)
    }

    fn schedule_bus(schedule: &PulseSchedule) -> Result<Option<Bus>, EngineError> {
        fn scan(events: &[PulseEvent], branches: &[BranchBlock], found: &mut Option<Bus>) -> Result<(), EngineError> {
            for e in events {
                if let Some(b) = e.bus {
                    match found {
                        Some(f) if *f != b => return Err(EngineError::MixedBus),
                        _ => *found = Some(b),
                    }
                }
            }
            for b in branches {
                scan(&b.events, &b.branches, found)?;
            }
            Ok(())
        }
        let mut found = None;
        scan(&schedule.events, &schedule.branches, &mut found)?;
        Ok(found)
    }

    fn fresh_state(&self, bus: Option<Bus>, rng: &mut ShotRng) -> Result<RegisterState, EngineError> {
        let n = self.machine.n_qubits;
        let mut st = match (self.engine.ms_model, bus) {
            (MsModel::Bichromatic, Some(b)) => {
                let mode = PhononMode { frequency: self.machine.bus_frequency(b), n_max: self.engine.fock_cutoff, n_bar_initial: self.noise.n_bar };
                let nbar = if self.noise.enabled { self.noise.n_bar } else { 0.0 };
                let fock = noise::sample_thermal(nbar, self.engine.fock_cutoff, rng);
                RegisterState::with_phonon(n, mode, fock, self.engine.max_bytes)?
            }
            _ => {
                let needed = (1usize << n) * std::mem::size_of::<num_complex::Complex64>();
                if needed > self.engine.max_bytes {
                    return Err(EngineError::MemoryCap { needed, cap: self.engine.max_bytes });
                }
                RegisterState::new(n)
            }
        };
        if self.noise.enabled && self.noise.spam_prep > 0.0 {
            for q in 0..n {
                if rng.random::<f64>() < self.noise.spam_prep {
                    st.flip(q);
                }
            }
        }
        Ok(st)
    }

    /// Runs `shots` independent shots; shot k uses stream (seed, point, k).
    pub fn run(&self, schedule: &PulseSchedule, shots: u64, seed: u64, point: u64) -> Result<RunResult, EngineError> {
        let records = (0..shots)
            .into_par_iter()
            .map(|k| {
                let mut rng = shot_rng(seed, point, k);
                self.execute_shot(schedule, &mut rng, true).map(|t| ShotRecord {
                    shot: k,
                    valid: t.collisions == 0,
                    measurements: t.measurements,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RunResult { n_qubits: self.machine.n_qubits, shots: records })
    }

    /// One trajectory. With `final_measure`, a measurement is appended when
    /// the schedule does not end in one.
    pub fn execute_shot(&self, schedule: &PulseSchedule, rng: &mut ShotRng, final_measure: bool) -> Result<Trajectory, EngineError> {
        let bus = Self::schedule_bus(schedule)?;
        let mut tr = Trajectory {
            state: self.fresh_state(bus, rng)?,
            now_ns: 0,
            measurements: Vec::new(),
            collisions: 0,
            last_measure_end: None,
            bus,
            last_ms: None,
        };
        self.run_events(&schedule.events, &schedule.branches, 0, &mut tr, rng)?;
        let end = tr.now_ns.max(schedule.duration_ns);
        self.advance(&mut tr, end, QubitKind::Optical, rng)?;
        if final_measure && tr.last_measure_end != Some(end) {
            self.measure(&mut tr, "final", rng);
        }
        if self.noise.enabled {
            tr.collisions = noise::sample_collisions(self.noise.collision_rate, self.machine.n_qubits, tr.now_ns as f64 * 1e-9, rng);
        }
        Ok(tr)
    }

    /// Idle evolution up to absolute time `until_ns`.
    fn advance(&self, tr: &mut Trajectory, until_ns: u64, kind: QubitKind, rng: &mut ShotRng) -> Result<(), EngineError> {
        if until_ns <= tr.now_ns {
            return Ok(());
        }
        let dt = (until_ns - tr.now_ns) as f64 * 1e-9;
        tr.now_ns = until_ns;
        self.apply_idle_noise(tr, dt, kind, rng)
    }

    fn apply_idle_noise(&self, tr: &mut Trajectory, dt: f64, kind: QubitKind, rng: &mut ShotRng) -> Result<(), EngineError> {
        if !self.noise.enabled || dt <= 0.0 {
            return Ok(());
        }
        let all: Vec<usize> = (0..self.machine.n_qubits).collect();
        let g = self.noise.effective_gradient();
        if g != 0.0 {
            let scale = match kind {
                QubitKind::Ground => 1.0,
                QubitKind::Optical => SENSITIVITY_OPTICAL_MHZ_PER_MT / SENSITIVITY_GROUND_MHZ_PER_MT,
            };
            let det: Vec<f64> = self.positions_um.iter().map(|z| z * g * scale).collect();
            noise::apply_detuning(&mut tr.state, &det, dt);
        }
        noise::apply_dephasing(&mut tr.state, &all, dt, self.noise.t2(kind), rng);
        if kind == QubitKind::Optical {
            noise::apply_t1_decay(&mut tr.state, &all, dt, self.noise.t1, rng);
        }
        if let (Some(mode), true) = (tr.state.phonon.as_ref(), self.noise.heating.rate_ref > 0.0) {
            let rate = self.noise.heating.rate(mode.frequency);
            noise::evolve_phonon_heating(&mut tr.state, dt, rate, rng)?;
        }
        Ok(())
    }

    fn run_events(&self, events: &[PulseEvent], branches: &[BranchBlock], offset: u64, tr: &mut Trajectory, rng: &mut ShotRng) -> Result<(), EngineError> {
        let mut order: Vec<usize> = (0..events.len()).collect();
        order.sort_by_key(|&i| (events[i].start_ns, i));
        for i in order {
            let e = &events[i];
            let start = offset + e.start_ns;
            if e.kind == PulseKind::Bichromatic {
                if let Some((t, targets)) = &tr.last_ms {
                    if *t == start && *targets == e.targets {
                        continue;
                    }
                }
            }
            self.advance(tr, start, QubitKind::Optical, rng)?;
            match e.kind {
                PulseKind::Prepare => {
                    tr.state = self.fresh_state(tr.bus, rng)?;
                }
                PulseKind::FrameAdvance => {
                    for &q in &e.targets {
                        tr.state.frames[q] += e.phase;
                    }
                }
                PulseKind::Carrier => self.carrier(tr, e, rng)?,
                PulseKind::AcStark => self.ac_stark(tr, e)?,
                PulseKind::Bichromatic => {
                    tr.last_ms = Some((start, e.targets.clone()));
                    self.bichromatic(tr, e, rng)?;
                }
                PulseKind::Idle => {
                    let kind = e.encoding.unwrap_or(QubitKind::Optical);
                    self.advance(tr, start + e.duration_ns, kind, rng)?;
                }
                PulseKind::Measure => {
                    let label = e.label.clone().unwrap_or_else(|| "m".to_string());
                    self.measure(tr, &label, rng);
                    // Only the phonon keeps evolving during detection.
                    let dt = e.duration_ns as f64 * 1e-9;
                    if let (Some(mode), true) = (tr.state.phonon.as_ref(), self.noise.enabled && self.noise.heating.rate_ref > 0.0) {
                        let rate = self.noise.heating.rate(mode.frequency);
                        noise::evolve_phonon_heating(&mut tr.state, dt, rate, rng)?;
                    }
                    tr.now_ns = start + e.duration_ns;
                    tr.last_measure_end = Some(tr.now_ns);
                }
                PulseKind::BranchPoint => {
                    let label = e.label.as_deref().unwrap_or_default();
                    let outcome = tr.measurements.iter().rev().find(|m| m.label == label).map(|m| m.bits.clone());
                    for b in branches.iter().filter(|b| b.label == label && b.start_ns == e.start_ns) {
                        let block_start = offset + b.start_ns;
                        if outcome.as_deref().map(|o| b.predicate.matches(o)).unwrap_or(false) {
                            self.run_events(&b.events, &b.branches, block_start, tr, rng)?;
                        }
                        self.advance(tr, block_start + b.duration_ns, QubitKind::Optical, rng)?;
                    }
                }
            }
            if matches!(e.kind, PulseKind::Carrier | PulseKind::AcStark | PulseKind::Bichromatic) {
                self.advance(tr, start + e.duration_ns, QubitKind::Optical, rng)?;
            }
        }
        Ok(())
    }

    fn pulse_area(&self, e: &PulseEvent) -> f64 {
        e.amplitude * FRAC_PI_2 * e.duration_ns as f64 / self.machine.t_half_pi_ns() as f64
    }

    fn carrier(&self, tr: &mut Trajectory, e: &PulseEvent, rng: &mut ShotRng) -> Result<(), EngineError> {
        let theta = self.pulse_area(e);
        match e.channel {
            Channel::Addressed(j) => {
                let n = self.machine.n_qubits;
                let ions: Vec<usize> = (0..n).filter(|&i| self.crosstalk[(i, j)] > 0.0).collect();
                let scales: Vec<f64> = ions.iter().map(|&i| self.crosstalk[(i, j)]).collect();
                tr.state.apply_rotation(&ions, theta, e.phase, Some(&scales))?;
            }
            _ => {
                for (k, &q) in e.targets.iter().enumerate() {
                    let phase = e.phase + e.phase_offsets.get(k).copied().unwrap_or(0.0);
                    tr.state.apply_rotation(&[q], theta, phase, None)?;
                }
            }
        }
        if self.noise.enabled && self.noise.eps_1q > 0.0 {
            for &q in &e.targets {
                noise::apply_depolarizing(&mut tr.state, &[q], self.noise.eps_1q, rng);
            }
        }
        Ok(())
    }

    fn ac_stark(&self, tr: &mut Trajectory, e: &PulseEvent) -> Result<(), EngineError> {
        let sign = if e.tones.first().copied().unwrap_or(1.0) < 0.0 { -1.0 } else { 1.0 };
        let theta = sign * self.pulse_area(e);
        match e.channel {
            Channel::Addressed(j) => {
                // Light shifts scale with intensity, so neighbours see the squared ratio.
                for i in 0..self.machine.n_qubits {
                    let r = u3_effective_ratio(self.crosstalk[(i, j)]);
                    if r > 0.0 {
                        tr.state.apply_rz(&[i], theta * r)?;
                    }
                }
            }
            _ => tr.state.apply_rz(&e.targets, theta)?,
        }
        Ok(())
    }

    fn bichromatic(&self, tr: &mut Trajectory, e: &PulseEvent, rng: &mut ShotRng) -> Result<(), EngineError> {
        let bus = e.bus.unwrap_or(Bus::Axial);
        let nu = self.machine.bus_frequency(bus);
        let outer = e.tones.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        let sign = if outer < nu { -1.0 } else { 1.0 };
        let chi = sign * e.amplitude * e.amplitude * FRAC_PI_4;
        let n = self.machine.n_qubits;
        // Field weight per ion: sum over the channels of the gate, capped at 1.
        let (ions, weights, phases) = match e.channel {
            Channel::Global => (e.targets.clone(), vec![1.0; e.targets.len()], e.phase_offsets.clone()),
            _ => {
                let mut ions = Vec::new();
                let mut w = Vec::new();
                let mut ph = Vec::new();
                for i in 0..n {
                    let s: f64 = e.targets.iter().map(|&j| self.crosstalk[(i, j)]).sum::<f64>().min(1.0);
                    if s > 0.0 {
                        ions.push(i);
                        w.push(s);
                        ph.push(e.targets.iter().position(|&q| q == i).and_then(|k| e.phase_offsets.get(k).copied()).unwrap_or(0.0));
                    }
                }
                (ions, w, ph)
            }
        };
        let phases = if phases.is_empty() { vec![0.0; ions.len()] } else { phases };
        match (self.engine.ms_model, tr.state.phonon.is_some()) {
            (MsModel::Bichromatic, true) => {
                let rabi = self.bus_rabi(bus)? * e.amplitude;
                let eta = self.bus_eta(bus)?;
                let delta = sign * self.machine.ms_detuning();
                let mut p = BichromaticParams::symmetric(ions.clone(), 0.0, 0.0, nu, delta);
                p.rabi = weights.iter().map(|w| w * rabi).collect();
                p.eta = ions.iter().map(|&i| eta[i]).collect();
                p.spin_phases = phases;
                p.duration = e.duration_ns as f64 * 1e-9;
                apply_ms_bichromatic(&mut tr.state, &p, &IntegratorOptions::default())?;
            }
            _ => tr.state.apply_ms_weighted(&ions, chi, Some(&weights), Some(&phases))?,
        }
        if self.noise.enabled && self.noise.eps_2q > 0.0 {
            noise::apply_depolarizing(&mut tr.state, &e.targets, self.noise.eps_2q, rng);
        }
        Ok(())
    }

    fn measure(&self, tr: &mut Trajectory, label: &str, rng: &mut ShotRng) {
        let rec = self.readout(&mut tr.state, label, rng);
        tr.measurements.push(rec);
    }

    /// Projective measurement of every qubit followed by photon counting.
    pub fn readout<R: Rng>(&self, state: &mut RegisterState, label: &str, rng: &mut R) -> MeasurementRecord {
        let probs = state.spin_probabilities();
        let u: f64 = rng.random::<f64>() * probs.iter().sum::<f64>();
        let mut acc = 0.0;
        let mut pat = probs.len() - 1;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                pat = i;
                break;
            }
        }
        state.collapse_to(pat);
        let n = state.n_qubits;
        let mut bits = Vec::with_capacity(n);
        let mut counts = Vec::with_capacity(n);
        for q in 0..n {
            let bright = pat & (1 << q) != 0;
            let (c, decayed) = if bright {
                (self.detection.sample_bright(rng), false)
            } else if self.noise.enabled {
                self.detection.sample_dark(rng)
            } else {
                (self.detection.sample_dark_no_decay(rng), false)
            };
            if decayed {
                state.flip(q);
            }
            let mut bit = if self.noise.enabled { self.detection.is_bright(c) } else { bright };
            if self.noise.enabled && self.noise.spam_meas > 0.0 && rng.random::<f64>() < self.noise.spam_meas {
                bit = !bit;
            }
            bits.push(bit);
            counts.push(c);
        }
        MeasurementRecord { label: label.to_string(), bits, counts }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::{compile, CircuitIR};
    use crate::engine::state::overlap;
    use std::f64::consts::PI;

    fn sim(n: usize) -> Simulator {
        Simulator::ideal(MachineConfig::new(n)).unwrap()
    }

    fn schedule(n: usize, text: &str) -> PulseSchedule {
        compile(&CircuitIR::parse(text).unwrap(), &MachineConfig::new(n)).unwrap()
    }

    #[test]
    fn empty_schedule_reads_all_bright() {
        let r = sim(3).run(&schedule(3, "PREPARE"), 50, 1, 0).unwrap();
        assert_eq!(r.populations()[7], 1.0);
        assert!(r.to_csv().starts_with("shot,bits,counts_q0,counts_q1,counts_q2,valid\n0,111,"));
    }

    #[test]
    fn global_pi_reads_all_dark() {
        let r = sim(2).run(&schedule(2, &format!("PREPARE\nR {PI} 0 all")), 50, 1, 0).unwrap();
        assert_eq!(r.populations()[0], 1.0);
    }

    #[test]
    fn feedback_branch_resets_to_bright() {
        let text = format!("PREPARE\nR {} 0 0\nMEASURE m0\nBRANCH m0 q0=dark {{ R {PI} 0 0 }}\nMEASURE m1", FRAC_PI_2);
        let r = sim(1).run(&schedule(1, &text), 400, 9, 0).unwrap();
        let first_dark = r.shots.iter().filter(|s| !s.measurement("m0").unwrap().bits[0]).count() as f64 / 400.0;
        assert!((first_dark - 0.5).abs() < 0.1);
        assert_eq!(r.bright_fraction(0), 1.0);
    }

    #[test]
    fn frames_reproduce_gate_level_state() {
        let text = "R 0.7 0.2 0\nRZ 1.1 0\nR 1.3 -0.4 0\nRZ -0.3 0\nR 0.5 2.0 0";
        let s = sim(1);
        let mut rng = shot_rng(0, 0, 0);
        let mut tr = s.execute_shot(&schedule(1, text), &mut rng, false).unwrap();
        tr.state.apply_frames();
        let mut gate = RegisterState::new(1);
        gate.apply_rotation(&[0], 0.7, 0.2, None).unwrap();
        gate.apply_rz(&[0], 1.1).unwrap();
        gate.apply_rotation(&[0], 1.3, -0.4, None).unwrap();
        gate.apply_rz(&[0], -0.3).unwrap();
        gate.apply_rotation(&[0], 0.5, 2.0, None).unwrap();
        assert!((overlap(&tr.state.amplitudes, &gate.amplitudes) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn runs_are_reproducible() {
        let mut noise = NoiseConfig::default();
        noise.eps_1q = 0.05;
        let s = Simulator::new(MachineConfig::new(2), noise, EngineConfig::default()).unwrap();
        let sch = schedule(2, "PREPARE\nR 1 0 all\nMS 0.78 all axial\nR 1 0.4 0");
        let a = s.run(&sch, 64, 11, 3).unwrap();
        let b = s.run(&sch, 64, 11, 3).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn memory_cap_is_enforced() {
        let mut e = EngineConfig::default();
        e.max_bytes = 100;
        let s = Simulator::new(MachineConfig::new(4), NoiseConfig::ideal(), e).unwrap();
        let mut rng = shot_rng(0, 0, 0);
        assert!(matches!(s.execute_shot(&schedule(4, "PREPARE"), &mut rng, true), Err(EngineError::MemoryCap { .. })));
    }
}

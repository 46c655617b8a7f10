//! Circuit-to-pulse compilation and timing checks.

mod circuit;
mod schedule;

pub use circuit::{Bus, CircuitIR, Detection, Instruction, Predicate, PredicateTerm, QubitKind, Targets};
pub use schedule::{BranchBlock, Channel, PulseEvent, PulseKind, PulseSchedule};

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{
    angular, BRANCH_LATENCY_US, DETECTION_WINDOW_US, QUBIT_WAVELENGTH_NM, SPEED_OF_LIGHT, TIMING_GRID_NS, TRAP_AXIAL_HZ,
    TRAP_RADIAL_HZ, T_HALF_PI_US, T_MS_US,
};

/// Detuning of the off-resonant light used for physical Z rotations, rad/s.
pub const AC_STARK_DETUNING: f64 = 2.0 * PI * 20.0e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompileError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("invalid machine: {0}")]
    InvalidMachine(String),
    #[error("no addressed channel for qubit {qubit}")]
    UnsupportedTarget { qubit: usize },
    #[error("timing grid violation: {0}")]
    GridViolation(String),
    #[error("unknown measurement label '{0}'")]
    UnknownLabel(String),
    #[error("outcome pattern has {got} entries, register has {expected}")]
    OutcomeLength { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RzMode {
    Virtual,
    AcStark,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineConfig {
    pub n_qubits: usize,
    pub t_half_pi_us: f64,
    pub t_ms_us: f64,
    pub timing_grid_ns: u64,
    pub branch_latency_us: f64,
    pub detection_window_us: f64,
    /// Number of addressed channels, starting at qubit 0.
    pub addressed_channels: usize,
    /// Qubit transition frequency, rad/s. Only carried along.
    pub omega_eg: f64,
    pub rz_mode: RzMode,
    pub max_branch_depth: usize,
    /// Bus mode frequencies used for the sideband tones, rad/s.
    pub bus_axial: f64,
    pub bus_radial: f64,
}

impl MachineConfig {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            t_half_pi_us: T_HALF_PI_US,
            t_ms_us: T_MS_US,
            timing_grid_ns: TIMING_GRID_NS,
            branch_latency_us: BRANCH_LATENCY_US,
            detection_window_us: DETECTION_WINDOW_US,
            addressed_channels: n_qubits,
            omega_eg: 2.0 * PI * SPEED_OF_LIGHT / (QUBIT_WAVELENGTH_NM * 1e-9),
            rz_mode: RzMode::Virtual,
            max_branch_depth: 2,
            bus_axial: angular(TRAP_AXIAL_HZ),
            bus_radial: angular(TRAP_RADIAL_HZ),
        }
    }

    pub fn bus_frequency(&self, bus: Bus) -> f64 {
        match bus {
            Bus::Axial => self.bus_axial,
            Bus::Radial => self.bus_radial,
        }
    }

    pub fn t_half_pi_ns(&self) -> u64 {
        us_to_ns(self.t_half_pi_us)
    }

    pub fn t_ms_ns(&self) -> u64 {
        us_to_ns(self.t_ms_us)
    }

    pub fn branch_latency_ns(&self) -> u64 {
        us_to_ns(self.branch_latency_us)
    }

    pub fn detection_window_ns(&self) -> u64 {
        us_to_ns(self.detection_window_us)
    }

    /// Sideband detuning of an MS gate closing after `t_ms`, rad/s.
    pub fn ms_detuning(&self) -> f64 {
        2.0 * PI / (self.t_ms_us * 1e-6)
    }

    pub fn validate(&self) -> Result<(), CompileError> {
        if self.n_qubits == 0 {
            return Err(CompileError::InvalidMachine("n_qubits must be at least 1".into()));
        }
        if self.timing_grid_ns == 0 {
            return Err(CompileError::InvalidMachine("timing grid must be positive".into()));
        }
        if !(self.bus_axial > 0.0 && self.bus_radial > 0.0) {
            return Err(CompileError::InvalidMachine("bus frequencies must be positive".into()));
        }
        let named = [
            ("t_half_pi", self.t_half_pi_us, false),
            ("t_ms", self.t_ms_us, false),
            ("branch_latency", self.branch_latency_us, true),
            ("detection_window", self.detection_window_us, false),
        ];
        for (name, us, may_be_zero) in named {
            if !us.is_finite() || us < 0.0 || (us == 0.0 && !may_be_zero) {
                return Err(CompileError::InvalidMachine(format!("{name} must be positive")));
            }
            let ns = us * 1e3;
            if (ns - ns.round()).abs() > 1e-6 || (ns.round() as u64) % self.timing_grid_ns != 0 {
                return Err(CompileError::GridViolation(format!(
                    "{name} = {us} us is not a multiple of {} ns",
                    self.timing_grid_ns
                )));
            }
        }
        Ok(())
    }
}

fn us_to_ns(us: f64) -> u64 {
    (us * 1e3).round() as u64
}

/// Rounds a duration up to the grid, forgiving float noise just above a grid point.
fn ceil_to_grid(ns: f64, grid: u64) -> u64 {
    let steps = (ns / grid as f64 - 1e-9).ceil().max(0.0);
    steps as u64 * grid
}

struct Emitter<'a> {
    machine: &'a MachineConfig,
    frames: Vec<f64>,
    cursor: u64,
    events: Vec<PulseEvent>,
    branches: Vec<BranchBlock>,
    /// Measurement end times relative to this block; `None` for enclosing blocks.
    measure_ends: HashMap<String, Option<u64>>,
    force_physical_rz: bool,
}

impl<'a> Emitter<'a> {
    fn addressed(&self, q: usize) -> Result<Channel, CompileError> {
        if q >= self.machine.addressed_channels {
            return Err(CompileError::UnsupportedTarget { qubit: q });
        }
        Ok(Channel::Addressed(q))
    }

    fn rotation_timing(&self, angle: f64) -> (u64, f64) {
        let t_half = self.machine.t_half_pi_ns() as f64;
        let dur = ceil_to_grid(angle.abs() / FRAC_PI_2 * t_half, self.machine.timing_grid_ns);
        let amp = if dur == 0 { 1.0 } else { angle.abs() / (FRAC_PI_2 * dur as f64 / t_half) };
        (dur, amp)
    }

    fn push_rotation(&mut self, kind: PulseKind, angle: f64, phase_of: impl Fn(usize) -> f64, tones: Vec<f64>, targets: &Targets) -> Result<(), CompileError> {
        let (dur, amp) = self.rotation_timing(angle);
        let n = self.machine.n_qubits;
        match targets {
            Targets::All => {
                let mut e = PulseEvent::new(Channel::Global, self.cursor, dur, kind);
                e.amplitude = amp;
                e.targets = (0..n).collect();
                e.phase = phase_of(0);
                e.tones = tones;
                let offsets: Vec<f64> = (0..n).map(|q| phase_of(q) - e.phase).collect();
                if offsets.iter().any(|o| *o != 0.0) {
                    e.phase_offsets = offsets;
                }
                self.events.push(e);
                self.cursor += dur;
            }
            Targets::List(qs) => {
                for &q in qs {
                    let mut e = PulseEvent::new(self.addressed(q)?, self.cursor, dur, kind);
                    e.amplitude = amp;
                    e.targets = vec![q];
                    e.phase = phase_of(q);
                    e.tones = tones.clone();
                    self.events.push(e);
                    self.cursor += dur;
                }
            }
        }
        Ok(())
    }

    fn emit_block(&mut self, block: &[Instruction]) -> Result<(), CompileError> {
        let n = self.machine.n_qubits;
        for ins in block {
            match ins {
                Instruction::PrepareAll => {
                    let mut e = PulseEvent::new(Channel::Global, self.cursor, 0, PulseKind::Prepare);
                    e.targets = (0..n).collect();
                    self.events.push(e);
                    self.frames.iter_mut().for_each(|f| *f = 0.0);
                }
                Instruction::R { theta, phi, targets } => {
                    let (theta, phi) = if *theta < 0.0 { (-theta, phi + PI) } else { (*theta, *phi) };
                    let frames = self.frames.clone();
                    self.push_rotation(PulseKind::Carrier, theta, |q| phi - frames[q], Vec::new(), targets)?;
                }
                Instruction::Rz { theta, targets } => {
                    if self.machine.rz_mode == RzMode::Virtual && !self.force_physical_rz {
                        for q in targets.resolve(n) {
                            self.frames[q] += theta;
                            let mut e = PulseEvent::new(Channel::Global, self.cursor, 0, PulseKind::FrameAdvance);
                            e.targets = vec![q];
                            e.phase = *theta;
                            self.events.push(e);
                        }
                    } else {
                        let tone = if *theta < 0.0 { -AC_STARK_DETUNING } else { AC_STARK_DETUNING };
                        self.push_rotation(PulseKind::AcStark, *theta, |_| 0.0, vec![tone], targets)?;
                    }
                }
                Instruction::Ms { chi, targets, bus } => {
                    let dur = self.machine.t_ms_ns();
                    let nu = self.machine.bus_frequency(*bus);
                    let delta = self.machine.ms_detuning();
                    let signed = if *chi < 0.0 { nu - delta } else { nu + delta };
                    let amp = (chi.abs() / FRAC_PI_4).sqrt();
                    let qs = targets.resolve(n);
                    let make = |channel: Channel, members: Vec<usize>, frames: &[f64]| {
                        let mut e = PulseEvent::new(channel, self.cursor, dur, PulseKind::Bichromatic);
                        e.amplitude = amp;
                        e.tones = vec![-signed, signed];
                        e.bus = Some(*bus);
                        e.phase_offsets = members.iter().map(|&q| -frames[q]).collect();
                        if e.phase_offsets.iter().all(|o| *o == 0.0) {
                            e.phase_offsets.clear();
                        }
                        e.targets = members;
                        e
                    };
                    match targets {
                        Targets::All => self.events.push(make(Channel::Global, qs, &self.frames)),
                        Targets::List(_) => {
                            // Simultaneous on every addressed channel of the gate.
                            for &q in &qs {
                                let ch = self.addressed(q)?;
                                let e = make(ch, qs.clone(), &self.frames);
                                self.events.push(e);
                            }
                        }
                    }
                    self.cursor += dur;
                }
                Instruction::Wait { duration_us, kind } => {
                    let dur = ceil_to_grid(duration_us * 1e3, self.machine.timing_grid_ns);
                    let mut e = PulseEvent::new(Channel::Global, self.cursor, dur, PulseKind::Idle);
                    e.targets = (0..n).collect();
                    e.encoding = Some(*kind);
                    self.events.push(e);
                    self.cursor += dur;
                }
                Instruction::MeasureAll { label } => {
                    let dur = self.machine.detection_window_ns();
                    let mut e = PulseEvent::new(Channel::Detection, self.cursor, dur, PulseKind::Measure);
                    e.targets = (0..n).collect();
                    e.label = Some(label.clone());
                    self.events.push(e);
                    self.cursor += dur;
                    self.measure_ends.insert(label.clone(), Some(self.cursor));
                }
                Instruction::Branch { label, predicate, body } => {
                    let end = self
                        .measure_ends
                        .get(label)
                        .ok_or_else(|| CompileError::UnknownLabel(label.clone()))?;
                    let start = match end {
                        Some(t) => self.cursor.max(t + self.machine.branch_latency_ns()),
                        None => self.cursor,
                    };
                    let mut bp = PulseEvent::new(Channel::Detection, start, 0, PulseKind::BranchPoint);
                    bp.label = Some(label.clone());
                    self.events.push(bp);

                    let mut inner = Emitter {
                        machine: self.machine,
                        frames: self.frames.clone(),
                        cursor: 0,
                        events: Vec::new(),
                        branches: Vec::new(),
                        measure_ends: self.measure_ends.keys().map(|k| (k.clone(), None)).collect(),
                        force_physical_rz: true,
                    };
                    inner.emit_block(body)?;
                    self.branches.push(BranchBlock {
                        label: label.clone(),
                        predicate: predicate.clone(),
                        start_ns: start,
                        duration_ns: inner.cursor,
                        events: inner.events,
                        branches: inner.branches,
                    });
                    self.cursor = start + inner.cursor;
                }
            }
        }
        Ok(())
    }
}

/// Lowers a circuit to a timed pulse schedule.
pub fn compile(circuit: &CircuitIR, machine: &MachineConfig) -> Result<PulseSchedule, CompileError> {
    machine.validate()?;
    circuit.validate(machine.n_qubits, machine.max_branch_depth)?;
    let mut em = Emitter {
        machine,
        frames: vec![0.0; machine.n_qubits],
        cursor: 0,
        events: Vec::new(),
        branches: Vec::new(),
        measure_ends: HashMap::new(),
        force_physical_rz: false,
    };
    em.emit_block(&circuit.instructions)?;
    let schedule = PulseSchedule {
        n_qubits: machine.n_qubits,
        grid_ns: machine.timing_grid_ns,
        duration_ns: em.cursor,
        events: em.events,
        frames: em.frames,
        branches: em.branches,
    };
    let violations = validate(&schedule, machine);
    if let Some(v) = violations.first() {
        return Err(CompileError::GridViolation(v.to_string()));
    }
    Ok(schedule)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    OffGrid { event: usize, start_ns: u64, duration_ns: u64 },
    Overlap { channel: Channel, first: usize, second: usize, overlap_ns: u64 },
    BranchLatency { label: String, gap_ns: i64, required_ns: u64 },
    MissingMeasure { label: String },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::OffGrid { event, start_ns, duration_ns } => {
                write!(f, "event {event} (start {start_ns} ns, duration {duration_ns} ns) is off the grid")
            }
            Violation::Overlap { channel, first, second, overlap_ns } => {
                write!(f, "events {first} and {second} overlap by {overlap_ns} ns on {channel}")
            }
            Violation::BranchLatency { label, gap_ns, required_ns } => {
                write!(f, "branch on '{label}' starts {gap_ns} ns after its measurement, needs {required_ns} ns")
            }
            Violation::MissingMeasure { label } => write!(f, "branch on '{label}' has no earlier measurement"),
        }
    }
}

/// Flattens the schedule, including every branch body at its reserved time.
fn flatten(events: &[PulseEvent], branches: &[BranchBlock], offset: u64, out: &mut Vec<PulseEvent>) {
    out.extend(events.iter().map(|e| e.shifted(offset)));
    for b in branches {
        flatten(&b.events, &b.branches, offset + b.start_ns, out);
    }
}

/// Checks grid alignment, per-channel overlap and branch latency. Reports every violation.
pub fn validate(schedule: &PulseSchedule, machine: &MachineConfig) -> Vec<Violation> {
    let mut all = Vec::new();
    flatten(&schedule.events, &schedule.branches, 0, &mut all);
    let grid = schedule.grid_ns.max(1);
    let mut out = Vec::new();

    for (i, e) in all.iter().enumerate() {
        if e.start_ns % grid != 0 || e.duration_ns % grid != 0 {
            out.push(Violation::OffGrid { event: i, start_ns: e.start_ns, duration_ns: e.duration_ns });
        }
    }

    let mut by_channel: HashMap<Channel, Vec<usize>> = HashMap::new();
    for (i, e) in all.iter().enumerate() {
        if e.duration_ns > 0 {
            by_channel.entry(e.channel).or_default().push(i);
        }
    }
    let mut channels: Vec<_> = by_channel.keys().copied().collect();
    channels.sort();
    for ch in channels {
        let mut idx = by_channel[&ch].clone();
        idx.sort_by_key(|&i| (all[i].start_ns, i));
        for w in idx.windows(2) {
            let (a, b) = (&all[w[0]], &all[w[1]]);
            if b.start_ns < a.end_ns() {
                let overlap = a.end_ns().min(b.end_ns()) - b.start_ns;
                out.push(Violation::Overlap { channel: ch, first: w[0], second: w[1], overlap_ns: overlap });
            }
        }
    }

    let latency = machine.branch_latency_ns();
    let mut last_measure: HashMap<&str, u64> = HashMap::new();
    let mut ordered: Vec<usize> = (0..all.len()).collect();
    ordered.sort_by_key(|&i| (all[i].start_ns, all[i].kind == PulseKind::BranchPoint, i));
    for i in ordered {
        let e = &all[i];
        let Some(label) = e.label.as_deref() else { continue };
        match e.kind {
            PulseKind::Measure => {
                last_measure.insert(label, e.end_ns());
            }
            PulseKind::BranchPoint => match last_measure.get(label) {
                Some(&end) => {
                    let gap = e.start_ns as i64 - end as i64;
                    if gap < latency as i64 {
                        out.push(Violation::BranchLatency { label: label.to_string(), gap_ns: gap, required_ns: latency });
                    }
                }
                None => out.push(Violation::MissingMeasure { label: label.to_string() }),
            },
            _ => {}
        }
    }
    out
}

/// Continuation events for a measurement outcome (`outcome[q]` true = bright),
/// in absolute time. Empty when no branch on `label` matches.
pub fn resolve_branch(schedule: &PulseSchedule, label: &str, outcome: &[bool]) -> Result<Vec<PulseEvent>, CompileError> {
    if outcome.len() != schedule.n_qubits {
        return Err(CompileError::OutcomeLength { expected: schedule.n_qubits, got: outcome.len() });
    }
    let blocks: Vec<&BranchBlock> = schedule.branches.iter().filter(|b| b.label == label).collect();
    if blocks.is_empty() {
        return Err(CompileError::UnknownLabel(label.to_string()));
    }
    let mut out = Vec::new();
    for b in blocks {
        if b.predicate.matches(outcome) {
            out.extend(b.events.iter().map(|e| e.shifted(b.start_ns)));
        }
    }
    Ok(out)
}

//! Timed pulse events and the schedule container.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::circuit::{Bus, Predicate, QubitKind};

/// Hardware output a pulse is played on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Channel {
    Global,
    Addressed(usize),
    Detection,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Channel::Global => write!(f, "global"),
            Channel::Addressed(q) => write!(f, "addr{q}"),
            Channel::Detection => write!(f, "detection"),
        }
    }
}

impl From<Channel> for String {
    fn from(c: Channel) -> String {
        c.to_string()
    }
}

impl TryFrom<String> for Channel {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        match s.as_str() {
            "global" => Ok(Channel::Global),
            "detection" => Ok(Channel::Detection),
            _ => s
                .strip_prefix("addr")
                .and_then(|q| q.parse().ok())
                .map(Channel::Addressed)
                .ok_or_else(|| format!("unknown channel '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseKind {
    /// Zero-duration reset of every qubit to S and of the motion to a thermal state.
    Prepare,
    Carrier,
    Bichromatic,
    AcStark,
    FrameAdvance,
    /// Free evolution; the event's `encoding` says which qubit stores the coherence.
    Idle,
    Measure,
    BranchPoint,
}

/// One rectangular pulse. Times are integer nanoseconds.
///
/// `amplitude` scales the calibrated Rabi frequency, so a carrier of duration
/// `d` rotates by `amplitude * (pi/2) * d / t_half_pi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseEvent {
    pub channel: Channel,
    pub start_ns: u64,
    pub duration_ns: u64,
    pub kind: PulseKind,
    pub amplitude: f64,
    pub phase: f64,
    /// Frequency offsets from the qubit transition, rad/s.
    pub tones: Vec<f64>,
    pub targets: Vec<usize>,
    /// Per-target spin phase for bichromatic events (empty when uniform).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub phase_offsets: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bus: Option<Bus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoding: Option<QubitKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl PulseEvent {
    pub fn new(channel: Channel, start_ns: u64, duration_ns: u64, kind: PulseKind) -> Self {
        Self {
            channel,
            start_ns,
            duration_ns,
            kind,
            amplitude: 0.0,
            phase: 0.0,
            tones: Vec::new(),
            targets: Vec::new(),
            phase_offsets: Vec::new(),
            bus: None,
            encoding: None,
            label: None,
        }
    }

    pub fn end_ns(&self) -> u64 {
        self.start_ns + self.duration_ns
    }

    pub(crate) fn shifted(&self, offset_ns: u64) -> Self {
        let mut e = self.clone();
        e.start_ns += offset_ns;
        e
    }
}

/// Conditional continuation, stored with times relative to its branch point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchBlock {
    pub label: String,
    pub predicate: Predicate,
    /// Absolute start of the branch point (relative to the enclosing block for nested ones).
    pub start_ns: u64,
    /// Time reserved in the timeline whether or not the branch runs.
    pub duration_ns: u64,
    pub events: Vec<PulseEvent>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub branches: Vec<BranchBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub n_qubits: usize,
    pub grid_ns: u64,
    pub duration_ns: u64,
    pub events: Vec<PulseEvent>,
    /// Accumulated virtual-Z frame of every qubit at the end of the schedule.
    pub frames: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub branches: Vec<BranchBlock>,
}

impl PulseSchedule {
    pub fn empty(n_qubits: usize, grid_ns: u64) -> Self {
        Self { n_qubits, grid_ns, duration_ns: 0, events: Vec::new(), frames: vec![0.0; n_qubits], branches: Vec::new() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Events with nonzero duration.
    pub fn timed_events(&self) -> impl Iterator<Item = &PulseEvent> {
        self.events.iter().filter(|e| e.duration_ns > 0)
    }
}

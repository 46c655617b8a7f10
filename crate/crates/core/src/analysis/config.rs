//! Flat dotted-key configuration with a strict schema.
//!
//! Files are TOML; nested tables are flattened so `[noise]\nt1_s = 1` and
//! `noise.t1_s = 1` are the same key. Unknown keys and wrong types are
//! rejected with the full key path.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;
use toml::Value;

use crate::addressing::{AddressingKind, AddressingUnit};
use crate::compiler::{MachineConfig, RzMode};
use crate::constants::*;
use crate::engine::{DetectionParams, EngineConfig, HeatingLaw, MsModel, NoiseConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Float,
    Int,
    Bool,
    Choice(&'static [&'static str]),
}

struct Entry {
    key: &'static str,
    kind: Kind,
    default: fn() -> Value,
    doc: &'static str,
}

macro_rules! entry {
    ($key:literal, Float, $v:expr, $doc:literal) => {
        Entry { key: $key, kind: Kind::Float, default: || Value::Float($v), doc: $doc }
    };
    ($key:literal, Int, $v:expr, $doc:literal) => {
        Entry { key: $key, kind: Kind::Int, default: || Value::Integer($v), doc: $doc }
    };
    ($key:literal, Bool, $v:expr, $doc:literal) => {
        Entry { key: $key, kind: Kind::Bool, default: || Value::Boolean($v), doc: $doc }
    };
    ($key:literal, [$($c:literal),+], $v:literal, $doc:literal) => {
        Entry { key: $key, kind: Kind::Choice(&[$($c),+]), default: || Value::String($v.to_string()), doc: $doc }
    };
}

const SCHEMA: &[Entry] = &[
    entry!("addressing.kind", ["aod", "microoptics"], "aod", "beam delivery"),
    entry!("addressing.w0_um", Float, AOD_WAIST_UM, "Omega^2 profile waist"),
    entry!("addressing.floor", Float, AOD_FLOOR, "aberration floor of the Rabi ratio"),
    entry!("addressing.slope_um_per_mhz", Float, AOD_SLOPE_UM_PER_MHZ, "AOD deflection slope"),
    entry!("addressing.power_budget", Float, 1.0, "total optical power, relative"),
    entry!("addressing.channel_offset_um", Float, 0.0, "microoptics channel misalignment"),
    entry!("engine.fock_cutoff", Int, 10, "highest Fock level of the bus mode"),
    entry!("engine.max_bytes", Int, 1 << 30, "state-vector memory cap"),
    entry!("engine.ms_model", ["ideal", "bichromatic"], "ideal", "entangling-gate propagator"),
    entry!("experiment.bus", ["axial", "radial"], "axial", "bus mode for gate-decay runs"),
    entry!("experiment.qubit_kind", ["ground", "optical"], "ground", "encoding for Ramsey runs"),
    entry!("experiment.shots", Int, 100, "shots per sweep point"),
    entry!("machine.addressed_channels", Int, 0, "addressed channels, 0 = one per qubit"),
    entry!("machine.axial_freq_hz", Float, TRAP_AXIAL_HZ, "axial COM frequency"),
    entry!("machine.branch_latency_us", Float, BRANCH_LATENCY_US, "detection-to-branch latency"),
    entry!("machine.detection_window_us", Float, DETECTION_WINDOW_US, "camera window"),
    entry!("machine.max_branch_depth", Int, 2, "nesting limit for branches"),
    entry!("machine.n_qubits", Int, 2, "register size"),
    entry!("machine.radial_freq_hz", Float, TRAP_RADIAL_HZ, "radial COM frequency"),
    entry!("machine.rz_mode", ["virtual", "ac_stark"], "virtual", "RZ implementation"),
    entry!("machine.t_half_pi_us", Float, T_HALF_PI_US, "pi/2 pulse duration"),
    entry!("machine.t_ms_us", Float, T_MS_US, "MS gate duration"),
    entry!("machine.timing_grid_ns", Int, TIMING_GRID_NS as i64, "control timing grid"),
    entry!("noise.bright_rate_cps", Float, BRIGHT_RATE_CPS, "bright fluorescence rate"),
    entry!("noise.collision_rate", Float, COLLISION_RATE, "collisions per ion per s"),
    entry!("noise.dark_mean_counts", Float, DARK_MEAN_COUNTS, "background counts per window"),
    entry!("noise.enabled", Bool, true, "master switch"),
    entry!("noise.eps_1q", Float, 0.0, "depolarizing probability per carrier pulse"),
    entry!("noise.eps_2q", Float, 0.0, "depolarizing probability per MS gate"),
    entry!("noise.gradient_compensated_hz_per_um", Float, GRADIENT_COMPENSATED_HZ_PER_UM, "residual gradient"),
    entry!("noise.gradient_compensation", Bool, false, "use the residual gradient"),
    entry!("noise.gradient_hz_per_um", Float, GRADIENT_HZ_PER_UM, "ground-qubit field gradient"),
    entry!("noise.heating_alpha", Float, HEATING_ALPHA, "heating-law exponent"),
    entry!("noise.heating_rate", Float, HEATING_RATE_REF, "quanta/s at the reference frequency"),
    entry!("noise.heating_ref_freq_hz", Float, HEATING_FREQ_REF_HZ, "heating reference frequency"),
    entry!("noise.n_bar", Float, N_BAR_INITIAL, "mean phonon number after cooling"),
    entry!("noise.spam_meas", Float, 0.0, "readout flip probability"),
    entry!("noise.spam_prep", Float, 0.0, "preparation flip probability"),
    entry!("noise.t1_s", Float, D_STATE_LIFETIME_S, "D-state lifetime"),
    entry!("noise.t2_ground_s", Float, T2_GROUND_S, "ground-qubit Ramsey time"),
    entry!("noise.t2_optical_s", Float, T2_OPTICAL_S, "optical-qubit Ramsey time"),
    entry!("noise.threshold", Int, 0, "count threshold, 0 = error-minimising"),
];

/// Every key with its default and description, one per line.
pub fn schema_table() -> String {
    let mut out = String::new();
    for e in SCHEMA {
        let _ = writeln!(out, "{} = {}  # {}", e.key, render(&(e.default)()), e.doc);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    values: BTreeMap<String, Value>,
}

impl Default for Config {
    fn default() -> Self {
        Self { values: SCHEMA.iter().map(|e| (e.key.to_string(), (e.default)())).collect() }
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            _ => out.push((key, v.clone())),
        }
    }
}

fn render(v: &Value) -> String {
    match v {
        Value::Float(f) => format!("{f:?}"),
        Value::Integer(i) => i.to_string(),
        Value::Boolean(b) => b.to_string(),
        Value::String(s) => format!("{s:?}"),
        other => other.to_string(),
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        cfg.overlay(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        cfg.overlay_file(path)?;
        Ok(cfg)
    }

    /// Applies the keys present in `text` on top of the current values.
    pub fn overlay(&mut self, text: &str) -> Result<(), ConfigError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        let mut flat = Vec::new();
        flatten("", &table, &mut flat);
        for (k, v) in flat {
            self.set(&k, v)?;
        }
        self.check()
    }

    pub fn overlay_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
        self.overlay(&text)
    }

    /// Sets one key, checking it against the schema.
    pub fn set(&mut self, key: &str, value: Value) -> Result<(), ConfigError> {
        let err = |m: String| ConfigError::Schema { path: key.to_string(), message: m };
        let entry = SCHEMA.iter().find(|e| e.key == key).ok_or_else(|| err("unknown key".into()))?;
        let v = match (entry.kind, value) {
            (Kind::Float, Value::Float(f)) if !f.is_nan() => Value::Float(f),
            (Kind::Float, Value::Integer(i)) => Value::Float(i as f64),
            (Kind::Int, Value::Integer(i)) if i >= 0 => Value::Integer(i),
            (Kind::Bool, Value::Boolean(b)) => Value::Boolean(b),
            (Kind::Choice(opts), Value::String(s)) if opts.contains(&s.as_str()) => Value::String(s),
            (Kind::Choice(opts), v) => return Err(err(format!("expected one of {opts:?}, got {}", render(&v)))),
            (k, v) => return Err(err(format!("expected {k:?}, got {}", render(&v)))),
        };
        self.values.insert(key.to_string(), v);
        Ok(())
    }

    /// Parses `key=value` with the value read as a TOML scalar.
    pub fn set_str(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (k, v) = assignment.split_once('=').ok_or_else(|| ConfigError::Parse(format!("expected key=value, got {assignment}")))?;
        let parsed: toml::Table = format!("v = {}", v.trim()).parse().or_else(|_| format!("v = {:?}", v.trim()).parse()).map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        self.set(k.trim(), parsed["v"].clone())
    }

    fn check(&self) -> Result<(), ConfigError> {
        let bad = |k: &str, m: &str| Err(ConfigError::Schema { path: k.to_string(), message: m.to_string() });
        for k in ["machine.n_qubits", "experiment.shots", "machine.timing_grid_ns"] {
            if self.int(k) == 0 {
                return bad(k, "must be at least 1");
            }
        }
        for e in SCHEMA.iter().filter(|e| e.kind == Kind::Float) {
            if self.float(e.key) < 0.0 {
                return bad(e.key, "must be non-negative");
            }
        }
        Ok(())
    }

    pub fn float(&self, key: &str) -> f64 {
        match self.values.get(key) {
            Some(Value::Float(f)) => *f,
            other => panic!("{key} is not a float key: {other:?}"),
        }
    }

    pub fn int(&self, key: &str) -> u64 {
        match self.values.get(key) {
            Some(Value::Integer(i)) => *i as u64,
            other => panic!("{key} is not an integer key: {other:?}"),
        }
    }

    pub fn flag(&self, key: &str) -> bool {
        matches!(self.values.get(key), Some(Value::Boolean(true)))
    }

    pub fn choice(&self, key: &str) -> &str {
        match self.values.get(key) {
            Some(Value::String(s)) => s,
            other => panic!("{key} is not a choice key: {other:?}"),
        }
    }

    /// Sorted `key = value` lines; also valid TOML.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            let _ = writeln!(out, "{k} = {}", render(v));
        }
        out
    }

    /// Hex SHA-256 of the canonical dump.
    pub fn digest(&self) -> String {
        let h = Sha256::digest(self.canonical().as_bytes());
        h.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn write(&self, path: &Path) -> Result<(), ConfigError> {
        std::fs::write(path, self.canonical()).map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })
    }

    pub fn machine(&self) -> MachineConfig {
        let n = self.int("machine.n_qubits") as usize;
        let mut m = MachineConfig::new(n);
        m.t_half_pi_us = self.float("machine.t_half_pi_us");
        m.t_ms_us = self.float("machine.t_ms_us");
        m.timing_grid_ns = self.int("machine.timing_grid_ns");
        m.branch_latency_us = self.float("machine.branch_latency_us");
        m.detection_window_us = self.float("machine.detection_window_us");
        let ch = self.int("machine.addressed_channels") as usize;
        m.addressed_channels = if ch == 0 { n } else { ch };
        m.rz_mode = if self.choice("machine.rz_mode") == "ac_stark" { RzMode::AcStark } else { RzMode::Virtual };
        m.max_branch_depth = self.int("machine.max_branch_depth") as usize;
        m.bus_axial = angular(self.float("machine.axial_freq_hz"));
        m.bus_radial = angular(self.float("machine.radial_freq_hz"));
        m
    }

    pub fn noise(&self) -> NoiseConfig {
        let threshold = self.int("noise.threshold");
        NoiseConfig {
            enabled: self.flag("noise.enabled"),
            t2_optical: self.float("noise.t2_optical_s"),
            t2_ground: self.float("noise.t2_ground_s"),
            t1: self.float("noise.t1_s"),
            eps_1q: self.float("noise.eps_1q"),
            eps_2q: self.float("noise.eps_2q"),
            spam_prep: self.float("noise.spam_prep"),
            spam_meas: self.float("noise.spam_meas"),
            heating: HeatingLaw {
                rate_ref: self.float("noise.heating_rate"),
                omega_ref: angular(self.float("noise.heating_ref_freq_hz")),
                alpha: self.float("noise.heating_alpha"),
            },
            detection: DetectionParams {
                bright_rate: self.float("noise.bright_rate_cps"),
                window: self.float("machine.detection_window_us") * 1e-6,
                dark_mean: self.float("noise.dark_mean_counts"),
                tau: self.float("noise.t1_s"),
                threshold: (threshold > 0).then_some(threshold as u32),
            },
            collision_rate: self.float("noise.collision_rate"),
            gradient: self.float("noise.gradient_hz_per_um"),
            gradient_compensated: self.float("noise.gradient_compensated_hz_per_um"),
            gradient_compensation: self.flag("noise.gradient_compensation"),
            n_bar: self.float("noise.n_bar"),
        }
    }

    pub fn engine(&self) -> EngineConfig {
        EngineConfig {
            max_bytes: self.int("engine.max_bytes") as usize,
            fock_cutoff: self.int("engine.fock_cutoff") as usize,
            ms_model: if self.choice("engine.ms_model") == "bichromatic" { MsModel::Bichromatic } else { MsModel::Ideal },
        }
    }

    /// Addressing unit; microoptics channels sit on the given ion positions
    /// shifted by the configured misalignment.
    pub fn addressing(&self, positions_um: &[f64]) -> AddressingUnit {
        let kind = if self.choice("addressing.kind") == "microoptics" { AddressingKind::Microoptics } else { AddressingKind::Aod };
        let offset = self.float("addressing.channel_offset_um");
        AddressingUnit {
            kind,
            w0: self.float("addressing.w0_um"),
            floor: self.float("addressing.floor"),
            channel_centers: positions_um.iter().map(|x| x + offset).collect(),
            slope_um_per_mhz: self.float("addressing.slope_um_per_mhz"),
            power_budget: self.float("addressing.power_budget"),
            floor_matrix: None,
        }
    }

    pub fn shots(&self) -> u64 {
        self.int("experiment.shots")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = Config::parse("").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.noise(), NoiseConfig::default());
        assert_eq!(c.machine(), MachineConfig::new(2));
        assert_eq!(c.engine(), EngineConfig::default());
    }

    #[test]
    fn override_reaches_the_engine() {
        let c = Config::parse("noise.t2_ground_s = 0.018\n[machine]\nn_qubits = 4\n").unwrap();
        assert_eq!(c.noise().t2_ground, 0.018);
        assert_eq!(c.machine().n_qubits, 4);
        let c = Config::parse("noise.t2_ground_s = 0.02").unwrap();
        assert_eq!(c.noise().t2_ground, 0.02);
    }

    #[test]
    fn strict_schema_names_the_key() {
        let e = Config::parse("noise.t2_grund_s = 1.0").unwrap_err();
        assert_eq!(e, ConfigError::Schema { path: "noise.t2_grund_s".into(), message: "unknown key".into() });
        assert!(matches!(Config::parse("noise.enabled = 3"), Err(ConfigError::Schema { path, .. }) if path == "noise.enabled"));
        assert!(matches!(Config::parse("engine.ms_model = \"exact\""), Err(ConfigError::Schema { .. })));
        assert!(matches!(Config::parse("noise.eps_1q = -0.1"), Err(ConfigError::Schema { .. })));
        assert!(matches!(Config::parse("machine.n_qubits = 0"), Err(ConfigError::Schema { .. })));
        assert!(matches!(Config::parse("= ="), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn round_trip_and_digest() {
        let a = Config::parse("noise.eps_1q = 1.4e-3\nnoise.t1_s = inf\nengine.ms_model = \"bichromatic\"").unwrap();
        let b = Config::parse(&a.canonical()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.digest(), b.digest());
        let reordered = Config::parse("engine.ms_model = \"bichromatic\"\nnoise.t1_s = inf\nnoise.eps_1q = 0.0014").unwrap();
        assert_eq!(a.digest(), reordered.digest());
        assert_ne!(a.digest(), Config::default().digest());
        assert_eq!(a.digest().len(), 64);
    }

    #[test]
    fn command_line_assignments() {
        let mut c = Config::default();
        c.set_str("engine.ms_model=bichromatic").unwrap();
        c.set_str("noise.eps_2q = 0.001").unwrap();
        assert_eq!(c.engine().ms_model, MsModel::Bichromatic);
        assert_eq!(c.noise().eps_2q, 0.001);
        assert!(c.set_str("noise.eps_2q").is_err());
    }

    #[test]
    fn schema_table_lists_every_key() {
        assert_eq!(schema_table().lines().count(), SCHEMA.len());
        let mut keys: Vec<_> = SCHEMA.iter().map(|e| e.key).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), SCHEMA.len());
    }
}

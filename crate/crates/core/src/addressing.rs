//! Single-site beam delivery: Gaussian spot profiles with an aberration
//! floor, crosstalk matrices and crossed-AOD tone layouts.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{AOD_FLOOR, AOD_SLOPE_UM_PER_MHZ, AOD_WAIST_UM, MICROOPTICS_FLOOR, MICROOPTICS_WAIST_UM};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AddressingError {
    #[error("invalid addressing unit: {0}")]
    InvalidUnit(String),
    #[error("a tone layout needs at least one tone")]
    NoTones,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AddressingKind {
    Microoptics,
    Aod,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AddressingUnit {
    pub kind: AddressingKind,
    /// Waist of the fitted Omega^2 profile, um.
    pub w0: f64,
    /// Smallest Rabi ratio any ion sees from a beam.
    pub floor: f64,
    /// Fixed channel positions, um (microoptics only).
    pub channel_centers: Vec<f64>,
    /// Beam displacement per MHz of drive frequency (AOD only).
    pub slope_um_per_mhz: f64,
    pub power_budget: f64,
    /// Per-pair floors replacing the constant one: (i, j) = ion i, beam j.
    pub floor_matrix: Option<DMatrix<f64>>,
}

impl AddressingUnit {
    pub fn microoptics(channel_centers: Vec<f64>) -> Self {
        Self {
            kind: AddressingKind::Microoptics,
            w0: MICROOPTICS_WAIST_UM,
            floor: MICROOPTICS_FLOOR,
            channel_centers,
            slope_um_per_mhz: AOD_SLOPE_UM_PER_MHZ,
            power_budget: 1.0,
            floor_matrix: None,
        }
    }

    pub fn aod() -> Self {
        Self {
            kind: AddressingKind::Aod,
            w0: AOD_WAIST_UM,
            floor: AOD_FLOOR,
            channel_centers: Vec::new(),
            slope_um_per_mhz: AOD_SLOPE_UM_PER_MHZ,
            power_budget: 1.0,
            floor_matrix: None,
        }
    }

    pub fn validate(&self) -> Result<(), AddressingError> {
        if !(self.w0 > 0.0 && self.w0.is_finite()) {
            return Err(AddressingError::InvalidUnit("waist must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.floor) {
            return Err(AddressingError::InvalidUnit("floor must lie in [0, 1)".into()));
        }
        if !(self.slope_um_per_mhz > 0.0) {
            return Err(AddressingError::InvalidUnit("deflection slope must be positive".into()));
        }
        if !(self.power_budget > 0.0) {
            return Err(AddressingError::InvalidUnit("power budget must be positive".into()));
        }
        Ok(())
    }

    /// Beam centre used to address an ion at `x` um.
    pub fn beam_center(&self, x: f64) -> f64 {
        match self.kind {
            AddressingKind::Aod => x,
            AddressingKind::Microoptics => self
                .channel_centers
                .iter()
                .copied()
                .min_by(|a, b| (a - x).abs().total_cmp(&(b - x).abs()))
                .unwrap_or(x),
        }
    }

    /// Beam centre for a drive frequency in MHz.
    pub fn aod_position(&self, f_mhz: f64) -> f64 {
        self.slope_um_per_mhz * f_mhz
    }
}

/// Gaussian field profile exp(-(x-c)^2/w0^2), whose square has waist w0, floored.
pub fn relative_rabi(unit: &AddressingUnit, beam_center: f64, ion_position: f64) -> f64 {
    gaussian_field(unit.w0, ion_position - beam_center).max(unit.floor)
}

fn gaussian_field(w0: f64, d: f64) -> f64 {
    (-(d * d) / (w0 * w0)).exp()
}

/// Entry (i, j): Rabi ratio on ion i while ion j is addressed. Row = affected ion.
pub fn crosstalk_matrix(unit: &AddressingUnit, positions: &[f64]) -> DMatrix<f64> {
    let n = positions.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            return 1.0;
        }
        let c = unit.beam_center(positions[j]);
        let on_target = gaussian_field(unit.w0, positions[j] - c);
        let floor = unit.floor_matrix.as_ref().map(|m| m[(i, j)]).unwrap_or(unit.floor);
        let tail = gaussian_field(unit.w0, positions[i] - c) / on_target.max(f64::MIN_POSITIVE);
        tail.max(floor).min(1.0)
    })
}

/// AC-Stark crosstalk ratio of a U(3) pulse for resonant ratio `eps`.
pub fn u3_effective_ratio(eps: f64) -> f64 {
    eps * eps
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spot {
    /// Position along the ion string, um.
    pub axial_um: f64,
    /// Distance from the string, um.
    pub transverse_um: f64,
    /// Fraction of the optical power.
    pub power: f64,
    /// Net frequency shift, MHz. Zero on the string.
    pub frequency_shift_mhz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToneLayout {
    pub primary_spots: Vec<Spot>,
    pub off_axis_spots: Vec<Spot>,
}

impl ToneLayout {
    pub fn total_power(&self) -> f64 {
        self.primary_spots.iter().chain(&self.off_axis_spots).map(|s| s.power).sum()
    }
}

/// Spots of two crossed AODs driven with the same tones.
///
/// Tone pair (i, i) lands on the string with the two frequency shifts
/// cancelled; pairs (i, j) with i != j land beside it, shifted by f_i - f_j.
pub fn aod_tone_layout(tones_mhz: &[f64], slope_um_per_mhz: f64) -> Result<ToneLayout, AddressingError> {
    let k = tones_mhz.len();
    if k == 0 {
        return Err(AddressingError::NoTones);
    }
    let power = 1.0 / (k * k) as f64;
    let mut primary = Vec::with_capacity(k);
    let mut off = Vec::with_capacity(k * (k - 1));
    for (i, &fi) in tones_mhz.iter().enumerate() {
        for (j, &fj) in tones_mhz.iter().enumerate() {
            let spot = Spot {
                axial_um: slope_um_per_mhz * (fi + fj) / 2.0,
                transverse_um: slope_um_per_mhz * (fi - fj) / 2.0,
                power,
                frequency_shift_mhz: fi - fj,
            };
            if i == j {
                primary.push(spot);
            } else {
                off.push(spot);
            }
        }
    }
    Ok(ToneLayout { primary_spots: primary, off_axis_spots: off })
}

/// Rabi ratio at each ion for a multi-tone layout, normalised to a single
/// full-power spot. Off-axis spots count only within 3 w0 of an ion.
pub fn layout_rabi(unit: &AddressingUnit, layout: &ToneLayout, positions: &[f64]) -> Vec<f64> {
    positions
        .iter()
        .map(|&x| {
            let mut r = 0.0f64;
            for s in &layout.primary_spots {
                r = r.max(s.power.sqrt() * relative_rabi(unit, s.axial_um, x));
            }
            for s in &layout.off_axis_spots {
                let d = ((x - s.axial_um).powi(2) + s.transverse_um.powi(2)).sqrt();
                if d < 3.0 * unit.w0 {
                    r += s.power.sqrt() * gaussian_field(unit.w0, d);
                }
            }
            r.min(1.0)
        })
        .collect()
}

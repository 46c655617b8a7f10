//! Physical constants (CODATA 2018) and device defaults.
//!
//! Every default that describes the modelled demonstrator lives here so the
//! config schema, the engine and the experiments read the same numbers.

use std::f64::consts::PI;

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Mass of 40Ca in atomic mass units.
pub const CA40_MASS_AMU: f64 = 39.962_590_86;
/// S1/2 - D5/2 qubit transition wavelength, nm.
pub const QUBIT_WAVELENGTH_NM: f64 = 729.0;
/// Magnetic sensitivity of the optical qubit transition, MHz/mT.
pub const SENSITIVITY_OPTICAL_MHZ_PER_MT: f64 = 5.6;
/// Magnetic sensitivity of the ground-state (S1/2 Zeeman) qubit, MHz/mT.
pub const SENSITIVITY_GROUND_MHZ_PER_MT: f64 = 28.0;
/// D5/2 lifetime, s.
pub const D_STATE_LIFETIME_S: f64 = 1.168;

/// Default single-ion secular frequencies, Hz.
pub const TRAP_AXIAL_HZ: f64 = 1.0e6;
pub const TRAP_RADIAL_HZ: f64 = 3.0e6;

/// Duration of a pi/2 rotation, microseconds.
pub const T_HALF_PI_US: f64 = 15.0;
/// Duration of one entangling gate, microseconds.
pub const T_MS_US: f64 = 200.0;
/// Control timing grid, nanoseconds.
pub const TIMING_GRID_NS: u64 = 10;
/// Latency between a detection result and a change in the pulse sequence, microseconds.
pub const BRANCH_LATENCY_US: f64 = 5.0;
/// Camera detection window, microseconds.
pub const DETECTION_WINDOW_US: f64 = 300.0;

/// Ramsey coherence times, s.
pub const T2_OPTICAL_S: f64 = 0.090;
pub const T2_GROUND_S: f64 = 0.018;

/// Axial heating rate at the reference frequency, quanta/s.
pub const HEATING_RATE_REF: f64 = 0.221;
/// Reference frequency of the heating rate, Hz.
pub const HEATING_FREQ_REF_HZ: f64 = 1.05e6;
/// Exponent of the 1/omega^alpha heating law.
pub const HEATING_ALPHA: f64 = 1.7;
/// Mean phonon number after sideband cooling.
pub const N_BAR_INITIAL: f64 = 0.02;

/// Bright-state fluorescence count rate, counts/s.
pub const BRIGHT_RATE_CPS: f64 = 5.0e5;
/// Mean background counts per detection window.
pub const DARK_MEAN_COUNTS: f64 = 2.0;
/// Background-gas collision rate per ion, 1/s.
pub const COLLISION_RATE: f64 = 0.0025;

/// Axial magnetic-field gradient seen by the ground-state qubit, Hz/um.
pub const GRADIENT_HZ_PER_UM: f64 = 3.1;
/// Residual gradient after compensation, Hz/um.
pub const GRADIENT_COMPENSATED_HZ_PER_UM: f64 = 0.2;

/// Addressing-unit defaults.
pub const MICROOPTICS_WAIST_UM: f64 = 0.81;
pub const MICROOPTICS_FLOOR: f64 = 0.024;
pub const AOD_WAIST_UM: f64 = 1.09;
pub const AOD_FLOOR: f64 = 0.005;
pub const AOD_SLOPE_UM_PER_MHZ: f64 = 4.9;

/// Average number of pulses per single-qubit Clifford in the benchmarking table.
pub const CLIFFORD_AVERAGE_COST: f64 = 1.875;

/// Angular frequency for a frequency given in Hz.
#[inline]
pub fn angular(hz: f64) -> f64 {
    2.0 * PI * hz
}

/// Coulomb constant times e^2, J m.
#[inline]
pub fn coulomb_e2() -> f64 {
    ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (4.0 * PI * VACUUM_PERMITTIVITY)
}

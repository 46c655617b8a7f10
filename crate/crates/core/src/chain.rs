//! Coulomb-crystal geometry, normal modes and Lamb-Dicke parameters of a
//! linear ion string.
//!
//! Everything is solved in dimensionless units: lengths are measured in
//! `l = (Z^2 e^2 / (4 pi eps0 M omega_ax^2))^(1/3)` and frequencies in
//! `omega_ax`, so the potential of the string reads
//! `V(u) = sum_i u_i^2 / 2 + sum_{i<j} 1 / |u_i - u_j|`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{self, ATOMIC_MASS_UNIT, HBAR};

/// Force residual (scaled units) the equilibrium solver must reach.
pub const FORCE_TOLERANCE: f64 = 1e-13;
const MAX_NEWTON_ITERATIONS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("ion count must be at least 1")]
    EmptyChain,
    #[error("invalid species or trap parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("equilibrium solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("linear string is unstable against zigzag: most negative squared radial frequency {min_squared_frequency:e} rad^2/s^2")]
    ZigzagInstability { min_squared_frequency: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IonSpecies {
    /// Atomic mass units.
    pub mass: f64,
    /// Elementary charges.
    pub charge: u32,
    /// Qubit transition wavelength, nm.
    pub qubit_wavelength: f64,
    /// MHz/mT.
    pub sensitivity_optical: f64,
    /// MHz/mT.
    pub sensitivity_ground: f64,
}

impl IonSpecies {
    pub fn calcium40() -> Self {
        Self {
            mass: constants::CA40_MASS_AMU,
            charge: 1,
            qubit_wavelength: constants::QUBIT_WAVELENGTH_NM,
            sensitivity_optical: constants::SENSITIVITY_OPTICAL_MHZ_PER_MT,
            sensitivity_ground: constants::SENSITIVITY_GROUND_MHZ_PER_MT,
        }
    }

    pub fn mass_kg(&self) -> f64 {
        self.mass * ATOMIC_MASS_UNIT
    }

    /// Ratio of optical-qubit to ground-state-qubit field sensitivity.
    pub fn sensitivity_ratio(&self) -> f64 {
        self.sensitivity_optical / self.sensitivity_ground
    }

    fn validate(&self) -> Result<(), ChainError> {
        if !(self.mass > 0.0) {
            return Err(ChainError::InvalidParameter("mass must be positive"));
        }
        if self.charge < 1 {
            return Err(ChainError::InvalidParameter("charge must be at least 1"));
        }
        if !(self.sensitivity_optical > 0.0 && self.sensitivity_ground > 0.0) {
            return Err(ChainError::InvalidParameter("sensitivities must be positive"));
        }
        Ok(())
    }
}

impl Default for IonSpecies {
    fn default() -> Self {
        Self::calcium40()
    }
}

/// Single-ion secular frequencies (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig {
    pub omega_ax: f64,
    pub omega_rad: f64,
}

impl TrapConfig {
    pub fn from_hz(axial_hz: f64, radial_hz: f64) -> Self {
        Self {
            omega_ax: constants::angular(axial_hz),
            omega_rad: constants::angular(radial_hz),
        }
    }

    fn validate(&self) -> Result<(), ChainError> {
        if !(self.omega_ax > 0.0 && self.omega_rad > 0.0) {
            return Err(ChainError::InvalidParameter("trap frequencies must be positive"));
        }
        Ok(())
    }
}

impl Default for TrapConfig {
    fn default() -> Self {
        Self::from_hz(constants::TRAP_AXIAL_HZ, constants::TRAP_RADIAL_HZ)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IonChain {
    pub n: usize,
    /// Equilibrium positions along the trap axis, micrometres, ascending.
    pub positions: Vec<f64>,
    pub species: IonSpecies,
    pub trap: TrapConfig,
    /// Same positions in units of the length scale.
    scaled: Vec<f64>,
}

impl IonChain {
    /// Length scale `l` in metres.
    pub fn length_scale(&self) -> f64 {
        length_scale(&self.species, &self.trap)
    }

    pub fn scaled_positions(&self) -> &[f64] {
        &self.scaled
    }

    pub fn spacings(&self) -> Vec<f64> {
        self.positions.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn min_spacing(&self) -> Option<f64> {
        self.spacings().into_iter().reduce(f64::min)
    }

    /// Distance between the two ions closest to the trap centre.
    pub fn center_spacing(&self) -> Option<f64> {
        if self.n < 2 {
            return None;
        }
        let mid = self.n / 2;
        if self.n % 2 == 0 {
            Some(self.positions[mid] - self.positions[mid - 1])
        } else {
            Some(self.positions[mid + 1] - self.positions[mid])
        }
    }

    /// Largest scaled force on any ion at the stored positions.
    pub fn force_residual(&self) -> f64 {
        gradient(&self.scaled).amax()
    }
}

pub fn length_scale(species: &IonSpecies, trap: &TrapConfig) -> f64 {
    let z2 = f64::from(species.charge * species.charge);
    (z2 * constants::coulomb_e2() / (species.mass_kg() * trap.omega_ax * trap.omega_ax)).cbrt()
}

fn gradient(u: &[f64]) -> DVector<f64> {
    let n = u.len();
    DVector::from_fn(n, |i, _| {
        let mut g = u[i];
        for (j, &uj) in u.iter().enumerate() {
            if j != i {
                let d = u[i] - uj;
                g -= d.signum() / (d * d);
            }
        }
        g
    })
}

fn energy(u: &[f64]) -> f64 {
    let mut e = 0.0;
    for i in 0..u.len() {
        e += 0.5 * u[i] * u[i];
        for j in (i + 1)..u.len() {
            e += 1.0 / (u[i] - u[j]).abs();
        }
    }
    e
}

/// Axial Hessian of the scaled potential.
fn axial_hessian(u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 1.0;
        for j in 0..n {
            if j != i {
                let c = 2.0 / (u[i] - u[j]).abs().powi(3);
                a[(i, j)] = -c;
                diag += c;
            }
        }
        a[(i, i)] = diag;
    }
    a
}

/// Radial Hessian of the scaled potential for anisotropy `beta = omega_rad / omega_ax`.
fn radial_hessian(u: &[f64], beta: f64) -> DMatrix<f64> {
    let n = u.len();
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = beta * beta;
        for j in 0..n {
            if j != i {
                let c = 1.0 / (u[i] - u[j]).abs().powi(3);
                b[(i, j)] = c;
                diag -= c;
            }
        }
        b[(i, i)] = diag;
    }
    b
}

fn is_strictly_increasing(u: &[f64]) -> bool {
    u.windows(2).all(|w| w[1] > w[0])
}

pub fn equilibrium_positions(
    n: usize,
    species: IonSpecies,
    trap: TrapConfig,
) -> Result<IonChain, ChainError> {
    if n == 0 {
        return Err(ChainError::EmptyChain);
    }
    species.validate()?;
    trap.validate()?;

    let spacing = 2.0 * (n as f64).powf(-0.56);
    let mut u: Vec<f64> = (0..n)
        .map(|i| (i as f64 - (n as f64 - 1.0) / 2.0) * spacing)
        .collect();

    let mut residual = gradient(&u).amax();
    let mut iterations = 0;
    let mut stalled = false;
    while residual > FORCE_TOLERANCE && !stalled {
        if iterations == MAX_NEWTON_ITERATIONS {
            return Err(ChainError::NoConvergence { iterations, residual });
        }
        iterations += 1;
        let g = gradient(&u);
        let h = axial_hessian(&u);
        let step = match h.clone().cholesky() {
            Some(ch) => ch.solve(&(-&g)),
            // Off-equilibrium the Hessian can lose definiteness; fall back to gradient descent.
            None => -&g,
        };
        let e0 = energy(&u);
        let mut damping = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(a, s)| a + damping * s).collect();
            if is_strictly_increasing(&trial) {
                let r = gradient(&trial).amax();
                if energy(&trial) <= e0 + 1e-14 * e0.abs() || r < residual {
                    u = trial;
                    residual = r;
                    break;
                }
            }
            damping *= 0.5;
            if damping < 1e-12 {
                // Stalled at rounding level; accept if already well inside the contract.
                if residual < 1e-12 {
                    stalled = true;
                    break;
                }
                return Err(ChainError::NoConvergence { iterations, residual });
            }
        }
    }

    // Remove the residual asymmetry left by rounding.
    let sym: Vec<f64> = (0..n).map(|i| 0.5 * (u[i] - u[n - 1 - i])).collect();
    let scale_um = length_scale(&species, &trap) * 1e6;
    Ok(IonChain {
        n,
        positions: sym.iter().map(|x| x * scale_um).collect(),
        species,
        trap,
        scaled: sym,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeDirection {
    Axial,
    Radial,
}

impl std::fmt::Display for ModeDirection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModeDirection::Axial => write!(f, "axial"),
            ModeDirection::Radial => write!(f, "radial"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum {
    pub direction: ModeDirection,
    /// Mode angular frequencies (rad/s), ascending.
    pub frequencies: Vec<f64>,
    /// Column `m` is the normalised participation vector of mode `m`.
    pub eigenvectors: DMatrix<f64>,
    /// `lamb_dicke[(ion, mode)]`, magnitudes only; signs live in `eigenvectors`.
    pub lamb_dicke: DMatrix<f64>,
    /// Single-ion mass, kg.
    pub ion_mass: f64,
}

impl ModeSpectrum {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Index of the centre-of-mass mode.
    pub fn com_index(&self) -> usize {
        match self.direction {
            ModeDirection::Axial => 0,
            ModeDirection::Radial => self.len() - 1,
        }
    }

    /// Lamb-Dicke parameter with the eigenvector sign applied.
    pub fn signed_lamb_dicke(&self, ion: usize, mode: usize) -> f64 {
        self.lamb_dicke[(ion, mode)] * self.eigenvectors[(ion, mode)].signum()
    }
}

/// Eigendecomposition sorted by ascending eigenvalue; each eigenvector is
/// flipped so its largest-magnitude component is positive.
pub(crate) fn sorted_eigen(matrix: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = matrix.nrows();
    let eig = SymmetricEigen::new(matrix);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let mut pivot = 0;
        for i in 1..n {
            if v[i].abs() > v[pivot].abs() + 1e-12 {
                pivot = i;
            }
        }
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[(i, col)] = sign * v[i];
        }
    }
    (values, vectors)
}

pub fn axial_mode_spectrum(chain: &IonChain) -> ModeSpectrum {
    let (values, vectors) = sorted_eigen(axial_hessian(&chain.scaled));
    let n = chain.n;
    ModeSpectrum {
        direction: ModeDirection::Axial,
        frequencies: values.iter().map(|l| chain.trap.omega_ax * l.max(0.0).sqrt()).collect(),
        eigenvectors: vectors,
        lamb_dicke: DMatrix::zeros(n, n),
        ion_mass: chain.species.mass_kg(),
    }
}

pub fn radial_mode_spectrum(chain: &IonChain) -> Result<ModeSpectrum, ChainError> {
    let beta = chain.trap.omega_rad / chain.trap.omega_ax;
    let (values, vectors) = sorted_eigen(radial_hessian(&chain.scaled, beta));
    if values[0] <= 0.0 {
        return Err(ChainError::ZigzagInstability {
            min_squared_frequency: values[0] * chain.trap.omega_ax * chain.trap.omega_ax,
        });
    }
    let n = chain.n;
    Ok(ModeSpectrum {
        direction: ModeDirection::Radial,
        frequencies: values.iter().map(|l| chain.trap.omega_ax * l.sqrt()).collect(),
        eigenvectors: vectors,
        lamb_dicke: DMatrix::zeros(n, n),
        ion_mass: chain.species.mass_kg(),
    })
}

/// Fills `spectrum.lamb_dicke` for a beam of the given wavelength whose
/// k-vector makes `beam_angle` with the mode direction, and returns a copy.
pub fn lamb_dicke_parameters(
    spectrum: &mut ModeSpectrum,
    wavelength_nm: f64,
    beam_angle: f64,
) -> DMatrix<f64> {
    let mut projection = beam_angle.cos().abs();
    if projection < 1e-12 {
        projection = 0.0;
    }
    let k = 2.0 * std::f64::consts::PI / (wavelength_nm * 1e-9) * projection;
    let n = spectrum.len();
    let mut eta = DMatrix::zeros(n, n);
    for m in 0..n {
        let zpf = (HBAR / (2.0 * spectrum.ion_mass * spectrum.frequencies[m])).sqrt();
        for j in 0..n {
            eta[(j, m)] = k * zpf * spectrum.eigenvectors[(j, m)].abs();
        }
    }
    spectrum.lamb_dicke = eta.clone();
    eta
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn ca(n: usize, fax: f64, frad: f64) -> IonChain {
        equilibrium_positions(n, IonSpecies::calcium40(), TrapConfig::from_hz(fax, frad)).unwrap()
    }

    #[test]
    fn single_ion_sits_at_origin() {
        let c = ca(1, 1e6, 3e6);
        assert_eq!(c.positions, vec![0.0]);
        let ax = axial_mode_spectrum(&c);
        assert!(rel(ax.frequencies[0], c.trap.omega_ax) < 1e-12);
        assert_eq!(ax.eigenvectors[(0, 0)], 1.0);
        let rad = radial_mode_spectrum(&c).unwrap();
        assert!(rel(rad.frequencies[0], c.trap.omega_rad) < 1e-12);
    }

    #[test]
    fn two_ion_spacing_matches_closed_form() {
        let c = ca(2, 1e6, 3e6);
        let d = c.positions[1] - c.positions[0];
        let trap = c.trap;
        let analytic = (2.0 * constants::coulomb_e2()
            / (IonSpecies::calcium40().mass_kg() * trap.omega_ax * trap.omega_ax))
            .cbrt()
            * 1e6;
        assert!((d - analytic).abs() < 1e-9);
        assert!((d - 5.61).abs() < 0.01, "spacing {d}");
    }

    #[test]
    fn two_ion_modes() {
        let c = ca(2, 1e6, 3e6);
        let ax = axial_mode_spectrum(&c);
        assert!(rel(ax.frequencies[1], 3f64.sqrt() * c.trap.omega_ax) < 1e-9);
        let rad = radial_mode_spectrum(&c).unwrap();
        let rocking = (c.trap.omega_rad.powi(2) - c.trap.omega_ax.powi(2)).sqrt();
        assert!(rel(rad.frequencies[0], rocking) < 1e-9);
        assert!((rad.frequencies[0] / (2.0 * std::f64::consts::PI) / 1e6 - 2.828).abs() < 1e-3);
        assert!(rel(rad.frequencies[1], c.trap.omega_rad) < 1e-12);
    }

    #[test]
    fn zero_ions_rejected() {
        assert_eq!(
            equilibrium_positions(0, IonSpecies::calcium40(), TrapConfig::default()),
            Err(ChainError::EmptyChain)
        );
    }

    #[test]
    fn zigzag_detected_for_weak_radial_confinement() {
        let c = ca(10, 1e6, 2e6);
        match radial_mode_spectrum(&c) {
            Err(ChainError::ZigzagInstability { min_squared_frequency }) => {
                assert!(min_squared_frequency < 0.0)
            }
            other => panic!("expected zigzag, got {other:?}"),
        }
    }

    #[test]
    fn positions_are_mirror_symmetric_and_centred() {
        for n in 1..=40 {
            let c = ca(n, 0.8e6, 3e6);
            let span = c.positions[n - 1] - c.positions[0];
            let sum: f64 = c.positions.iter().sum();
            assert!(sum.abs() <= 1e-9 * span.max(1.0));
            for i in 0..n {
                assert!((c.positions[i] + c.positions[n - 1 - i]).abs() < 1e-9);
            }
            assert!(c.force_residual() < 1e-12, "n={n}: {}", c.force_residual());
        }
    }

    #[test]
    fn beam_perpendicular_to_mode_gives_zero_coupling() {
        let c = ca(3, 1e6, 3e6);
        let mut s = axial_mode_spectrum(&c);
        let eta = lamb_dicke_parameters(&mut s, 729.0, std::f64::consts::FRAC_PI_2);
        assert!(eta.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn largest_component_positive() {
        let c = ca(7, 1e6, 3e6);
        let s = axial_mode_spectrum(&c);
        for m in 0..7 {
            let col = s.eigenvectors.column(m);
            let max = col.iter().cloned().fold(f64::MIN, f64::max);
            let min = col.iter().cloned().fold(f64::MAX, f64::min);
            assert!(max >= -min - 1e-12);
        }
    }
}

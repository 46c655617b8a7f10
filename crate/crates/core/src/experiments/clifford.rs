//! Single-qubit Clifford group built from X/Y pi and pi/2 pulses.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::engine::state::rotation_matrix;

/// One carrier pulse R(theta, phi).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub theta: f64,
    pub phi: f64,
}

const fn p(theta: f64, phi: f64) -> Pulse {
    Pulse { theta, phi }
}

const IDLE: Pulse = p(0.0, 0.0);
const X: Pulse = p(PI, 0.0);
const Y: Pulse = p(PI, FRAC_PI_2);
const X2: Pulse = p(FRAC_PI_2, 0.0);
const MX2: Pulse = p(FRAC_PI_2, PI);
const Y2: Pulse = p(FRAC_PI_2, FRAC_PI_2);
const MY2: Pulse = p(FRAC_PI_2, -FRAC_PI_2);

pub type Mat2 = [[C64; 2]; 2];

/// A Clifford as its pulse sequence (time order) and unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct Clifford {
    pub pulses: Vec<Pulse>,
    pub unitary: Mat2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliffordTable {
    pub elements: Vec<Clifford>,
}

pub fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut m = [[C64::new(0.0, 0.0); 2]; 2];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    m
}

fn identity() -> Mat2 {
    [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]]
}

/// Unitary of a time-ordered pulse list.
pub fn sequence_unitary(pulses: &[Pulse]) -> Mat2 {
    pulses.iter().fold(identity(), |acc, q| mul(&rotation_matrix(q.theta, q.phi), &acc))
}

/// |tr(a^dag b)| / 2: 1 when equal up to global phase.
pub fn phase_overlap(a: &Mat2, b: &Mat2) -> f64 {
    let mut t = C64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            t += a[i][j].conj() * b[i][j];
        }
    }
    t.norm() / 2.0
}

/// The 24 Cliffords. The identity is one idle slot, so the mean length is
/// 45/24 = 1.875 pulses.
pub fn clifford_table() -> CliffordTable {
    let seqs: Vec<Vec<Pulse>> = vec![
        // Paulis
        vec![IDLE],
        vec![X],
        vec![Y],
        vec![Y, X],
        // 2pi/3 rotations
        vec![X2, Y2],
        vec![X2, MY2],
        vec![MX2, Y2],
        vec![MX2, MY2],
        vec![Y2, X2],
        vec![Y2, MX2],
        vec![MY2, X2],
        vec![MY2, MX2],
        // pi/2 rotations
        vec![X2],
        vec![MX2],
        vec![Y2],
        vec![MY2],
        vec![MX2, Y2, X2],
        vec![MX2, MY2, X2],
        // Hadamard-like
        vec![X, Y2],
        vec![X, MY2],
        vec![Y, X2],
        vec![Y, MX2],
        vec![X2, Y2, X2],
        vec![MX2, Y2, MX2],
    ];
    let elements = seqs.into_iter().map(|pulses| Clifford { unitary: sequence_unitary(&pulses), pulses }).collect();
    CliffordTable { elements }
}

impl CliffordTable {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Mean number of pulses per element.
    pub fn average_cost(&self) -> f64 {
        self.elements.iter().map(|c| c.pulses.len()).sum::<usize>() as f64 / self.len() as f64
    }

    /// Index of the element equal to `u` up to global phase.
    pub fn find(&self, u: &Mat2) -> Option<usize> {
        self.elements.iter().position(|c| phase_overlap(&c.unitary, u) > 1.0 - 1e-9)
    }

    /// Index of the element that undoes `u`.
    pub fn inverse_of(&self, u: &Mat2) -> Option<usize> {
        let adj = [[u[0][0].conj(), u[1][0].conj()], [u[0][1].conj(), u[1][1].conj()]];
        self.find(&adj)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn average_cost_is_1_875() {
        let t = clifford_table();
        assert_eq!(t.len(), 24);
        assert_eq!(t.average_cost(), 1.875);
    }

    #[test]
    fn elements_are_distinct_and_closed() {
        let t = clifford_table();
        for i in 0..24 {
            for j in 0..24 {
                if i != j {
                    assert!(phase_overlap(&t.elements[i].unitary, &t.elements[j].unitary) < 0.99, "{i} {j}");
                }
                let prod = mul(&t.elements[i].unitary, &t.elements[j].unitary);
                assert!(t.find(&prod).is_some(), "{i} * {j} not in table");
            }
        }
    }

    #[test]
    fn every_element_has_an_inverse() {
        let t = clifford_table();
        for c in &t.elements {
            let k = t.inverse_of(&c.unitary).unwrap();
            let prod = mul(&t.elements[k].unitary, &c.unitary);
            assert!(phase_overlap(&prod, &identity()) > 1.0 - 1e-12);
        }
    }
}

//! Dense statevector and unitary oracle for desk-scale circuits.

use crate::circuit::{Circuit, Gate};
use num_complex::Complex64;
use thiserror::Error;

pub const STATE_CAP: usize = 20;
pub const UNITARY_CAP: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("{0} qubits exceeds the simulator cap of {1}")]
    TooWide(usize, usize),
    #[error("circuit needs {0} qubits but the state has {1}")]
    StateTooSmall(usize, usize),
}

/// Amplitudes are indexed little-endian: qubit `q` is bit `q` of the index.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub n: usize,
    pub amps: Vec<Complex64>,
}

impl StateVector {
    pub fn zero(n: usize) -> Result<Self, SimError> {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, k: usize) -> Result<Self, SimError> {
        if n > STATE_CAP {
            return Err(SimError::TooWide(n, STATE_CAP));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[k] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n, amps })
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn apply_gate(&mut self, g: &Gate) {
        match *g {
            Gate::H(q) => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let bit = 1 << q;
                for i in 0..self.amps.len() {
                    if i & bit == 0 {
                        let a = self.amps[i];
                        let b = self.amps[i | bit];
                        self.amps[i] = (a + b) * s;
                        self.amps[i | bit] = (a - b) * s;
                    }
                }
            }
            Gate::X(q) => {
                let bit = 1 << q;
                for i in 0..self.amps.len() {
                    if i & bit == 0 {
                        self.amps.swap(i, i | bit);
                    }
                }
            }
            Gate::Rz(t, q) => {
                let bit = 1 << q;
                let lo = Complex64::from_polar(1.0, -t / 2.0);
                let hi = Complex64::from_polar(1.0, t / 2.0);
                for (i, a) in self.amps.iter_mut().enumerate() {
                    *a *= if i & bit == 0 { lo } else { hi };
                }
            }
            Gate::Cx(c, t) => {
                let cb = 1 << c;
                let tb = 1 << t;
                for i in 0..self.amps.len() {
                    if i & cb != 0 && i & tb == 0 {
                        self.amps.swap(i, i | tb);
                    }
                }
            }
        }
    }
}

pub fn apply(circuit: &Circuit, state: &StateVector) -> Result<StateVector, SimError> {
    let need = circuit.gates.iter().map(|g| g.max_qubit() + 1).max().unwrap_or(0);
    if need > state.n {
        return Err(SimError::StateTooSmall(need, state.n));
    }
    let mut out = state.clone();
    for g in &circuit.gates {
        out.apply_gate(g);
    }
    Ok(out)
}

/// Dense column-major unitary: `u[col][row]`.
#[derive(Clone, Debug)]
pub struct Unitary {
    pub n: usize,
    pub cols: Vec<Vec<Complex64>>,
}

impl Unitary {
    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.cols[col][row]
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let d = self.dim();
        for i in 0..d {
            for j in i..d {
                let dot: Complex64 = (0..d).map(|k| self.cols[i][k].conj() * self.cols[j][k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).norm() > tol {
                    return false;
                }
            }
        }
        true
    }
}

pub fn unitary_of(circuit: &Circuit) -> Result<Unitary, SimError> {
    let n = circuit.num_qubits.max(circuit.gates.iter().map(|g| g.max_qubit() + 1).max().unwrap_or(0));
    if n > UNITARY_CAP {
        return Err(SimError::TooWide(n, UNITARY_CAP));
    }
    let mut cols = Vec::with_capacity(1 << n);
    for k in 0..(1usize << n) {
        let s = apply(circuit, &StateVector::basis(n, k)?)?;
        cols.push(s.amps);
    }
    Ok(Unitary { n, cols })
}

/// Phase `z` (unit modulus) such that `b ≈ z·a`, fitted on the largest
/// amplitude of `a`. Returns `None` when `a` is zero.
pub fn fit_phase(a: &[Complex64], b: &[Complex64]) -> Option<Complex64> {
    let (k, _) = a.iter().enumerate().max_by(|x, y| x.1.norm_sqr().partial_cmp(&y.1.norm_sqr()).unwrap())?;
    if a[k].norm() < 1e-12 || b[k].norm() < 1e-12 {
        return None;
    }
    let z = b[k] / a[k];
    Some(z / z.norm())
}

/// Max-norm distance between `a` and `b` after removing a global phase.
pub fn distance_up_to_phase(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let z = fit_phase(a, b).unwrap_or(Complex64::new(1.0, 0.0));
    a.iter().zip(b).map(|(x, y)| (x * z - y).norm()).fold(0.0, f64::max)
}

/// Same as [`distance_up_to_phase`] over many columns sharing one phase.
pub fn columns_distance_up_to_phase(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> f64 {
    let fa: Vec<Complex64> = a.iter().flatten().copied().collect();
    let fb: Vec<Complex64> = b.iter().flatten().copied().collect();
    distance_up_to_phase(&fa, &fb)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn h_on_zero() {
        let out = apply(&Circuit::from_gates(1, vec![Gate::H(0)]), &StateVector::zero(1).unwrap()).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((out.amps[0] - c(s, 0.0)).norm() < 1e-12);
        assert!((out.amps[1] - c(s, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn x_on_zero() {
        let out = apply(&Circuit::from_gates(1, vec![Gate::X(0)]), &StateVector::zero(1).unwrap()).unwrap();
        assert_eq!(out.amps[1], c(1.0, 0.0));
    }

    #[test]
    fn empty_is_identity() {
        let u = unitary_of(&Circuit::new(2)).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((u.get(i, j) - c(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn caps_enforced() {
        assert!(StateVector::zero(STATE_CAP + 1).is_err());
        assert!(unitary_of(&Circuit::new(UNITARY_CAP + 1)).is_err());
    }

    #[test]
    fn phase_fit_ignores_global_phase() {
        let a = vec![c(0.6, 0.0), c(0.0, 0.8)];
        let z = Complex64::from_polar(1.0, 1.234);
        let b: Vec<_> = a.iter().map(|x| x * z).collect();
        assert!(distance_up_to_phase(&a, &b) < 1e-12);
        let d = vec![c(0.6, 0.0), c(0.0, -0.8)];
        assert!(distance_up_to_phase(&a, &d) > 0.5);
    }

    #[test]
    fn cx_unitary() {
        let u = unitary_of(&Circuit::from_gates(2, vec![Gate::Cx(0, 1)])).unwrap();
        // |01> (q0=1) -> |11>
        assert_eq!(u.get(3, 1), c(1.0, 0.0));
        assert!(u.is_unitary(1e-12));
    }
}

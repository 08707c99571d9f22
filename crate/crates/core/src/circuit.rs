//! Flat gate-level circuits and their resource metrics.

use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign};

/// Primitive gates. Controlled phases are decomposed into `Rz` and `Cx` by
/// the generators, so a circuit only ever holds these four kinds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    H(usize),
    X(usize),
    Rz(f64, usize),
    Cx(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateClass {
    Cx,
    Single,
}

impl GateClass {
    pub const ALL: [GateClass; 2] = [GateClass::Cx, GateClass::Single];

    pub fn name(self) -> &'static str {
        match self {
            GateClass::Cx => "cx",
            GateClass::Single => "single",
        }
    }

    pub fn parse(s: &str) -> Option<GateClass> {
        match s {
            "cx" => Some(GateClass::Cx),
            "single" => Some(GateClass::Single),
            _ => None,
        }
    }
}

impl Gate {
    pub fn class(&self) -> GateClass {
        match self {
            Gate::Cx(..) => GateClass::Cx,
            _ => GateClass::Single,
        }
    }

    pub fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::H(q) | Gate::X(q) | Gate::Rz(_, q) => (q, None),
            Gate::Cx(c, t) => (c, Some(t)),
        }
    }

    pub fn max_qubit(&self) -> usize {
        match self.qubits() {
            (a, Some(b)) => a.max(b),
            (a, None) => a,
        }
    }

    pub fn map(&self, f: impl Fn(usize) -> usize) -> Gate {
        match *self {
            Gate::H(q) => Gate::H(f(q)),
            Gate::X(q) => Gate::X(f(q)),
            Gate::Rz(t, q) => Gate::Rz(t, f(q)),
            Gate::Cx(c, t) => Gate::Cx(f(c), f(t)),
        }
    }

    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::Rz(t, q) => Gate::Rz(-t, q),
            g => g,
        }
    }
}

/// Per-class gate counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GateCounts {
    pub cx: u64,
    pub single: u64,
}

impl GateCounts {
    pub fn get(&self, class: GateClass) -> u64 {
        match class {
            GateClass::Cx => self.cx,
            GateClass::Single => self.single,
        }
    }

    pub fn add_gate(&mut self, g: &Gate) {
        match g.class() {
            GateClass::Cx => self.cx += 1,
            GateClass::Single => self.single += 1,
        }
    }
}

impl Add for GateCounts {
    type Output = GateCounts;
    fn add(self, o: GateCounts) -> GateCounts {
        GateCounts { cx: self.cx + o.cx, single: self.single + o.single }
    }
}

impl AddAssign for GateCounts {
    fn add_assign(&mut self, o: GateCounts) {
        self.cx += o.cx;
        self.single += o.single;
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Metrics {
    pub width: usize,
    pub depth: usize,
    pub counts: GateCounts,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Circuit {
    pub num_qubits: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Circuit { num_qubits, gates: Vec::new() }
    }

    pub fn from_gates(num_qubits: usize, gates: Vec<Gate>) -> Self {
        Circuit { num_qubits, gates }
    }

    pub fn push(&mut self, g: Gate) {
        debug_assert!(g.max_qubit() < self.num_qubits);
        self.gates.push(g);
    }

    /// Appends `fragment`, renaming local index `i` to `map[i]`.
    pub fn append_mapped(&mut self, fragment: &[Gate], map: &[usize]) {
        self.gates.extend(fragment.iter().map(|g| g.map(|q| map[q])));
    }

    pub fn inverse(&self) -> Circuit {
        Circuit { num_qubits: self.num_qubits, gates: self.gates.iter().rev().map(Gate::inverse).collect() }
    }

    /// Checks index bounds and that all angles are finite.
    pub fn check(&self) -> Result<(), String> {
        for (i, g) in self.gates.iter().enumerate() {
            if g.max_qubit() >= self.num_qubits {
                return Err(format!("gate {i} touches qubit {} of {}", g.max_qubit(), self.num_qubits));
            }
            if let Gate::Rz(t, _) = g {
                if !t.is_finite() {
                    return Err(format!("gate {i} has non-finite angle"));
                }
            }
            if let Gate::Cx(c, t) = g {
                if c == t {
                    return Err(format!("gate {i} uses qubit {c} as both control and target"));
                }
            }
        }
        Ok(())
    }
}

/// Width is the highest touched index plus one, depth is the ASAP layer
/// count with every gate costing one layer.
pub fn measure(circuit: &Circuit) -> Metrics {
    measure_gates(&circuit.gates)
}

pub fn measure_gates(gates: &[Gate]) -> Metrics {
    let width = gates.iter().map(|g| g.max_qubit() + 1).max().unwrap_or(0);
    let mut level = vec![0usize; width];
    let mut depth = 0;
    let mut counts = GateCounts::default();
    for g in gates {
        counts.add_gate(g);
        let l = match g.qubits() {
            (a, None) => {
                level[a] += 1;
                level[a]
            }
            (a, Some(b)) => {
                let l = level[a].max(level[b]) + 1;
                level[a] = l;
                level[b] = l;
                l
            }
        };
        depth = depth.max(l);
    }
    Metrics { width, depth, counts }
}

/// Small helper for writing generators over local qubit indices.
#[derive(Default, Debug, Clone)]
pub struct GateBuf {
    pub gates: Vec<Gate>,
}

impl GateBuf {
    pub fn new() -> Self {
        GateBuf { gates: Vec::new() }
    }

    pub fn h(&mut self, q: usize) {
        self.gates.push(Gate::H(q));
    }

    pub fn x(&mut self, q: usize) {
        self.gates.push(Gate::X(q));
    }

    pub fn rz(&mut self, theta: f64, q: usize) {
        self.gates.push(Gate::Rz(theta, q));
    }

    pub fn cx(&mut self, c: usize, t: usize) {
        self.gates.push(Gate::Cx(c, t));
    }

    /// Phase `theta` on |1>, equal to `Rz(theta)` up to global phase.
    pub fn phase(&mut self, theta: f64, q: usize) {
        self.rz(theta, q);
    }

    /// Controlled phase from three `Rz` and two `Cx`.
    pub fn cphase(&mut self, theta: f64, a: usize, b: usize) {
        self.rz(theta / 2.0, a);
        self.rz(theta / 2.0, b);
        self.cx(a, b);
        self.rz(-theta / 2.0, b);
        self.cx(a, b);
    }

    /// Six-CX Toffoli.
    pub fn toffoli(&mut self, a: usize, b: usize, t: usize) {
        use std::f64::consts::FRAC_PI_4;
        self.h(t);
        self.cx(b, t);
        self.rz(-FRAC_PI_4, t);
        self.cx(a, t);
        self.rz(FRAC_PI_4, t);
        self.cx(b, t);
        self.rz(-FRAC_PI_4, t);
        self.cx(a, t);
        self.rz(FRAC_PI_4, b);
        self.rz(FRAC_PI_4, t);
        self.h(t);
        self.cx(a, b);
        self.rz(FRAC_PI_4, a);
        self.rz(-FRAC_PI_4, b);
        self.cx(a, b);
    }

    pub fn extend_inverse(&mut self, gates: &[Gate]) {
        self.gates.extend(gates.iter().rev().map(Gate::inverse));
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_h() {
        let m = measure(&Circuit::from_gates(1, vec![Gate::H(0)]));
        assert_eq!(m, Metrics { width: 1, depth: 1, counts: GateCounts { cx: 0, single: 1 } });
    }

    #[test]
    fn parallel_and_serial_cx() {
        let par = measure_gates(&[Gate::Cx(0, 1), Gate::Cx(2, 3)]);
        assert_eq!(par.depth, 1);
        assert_eq!(par.width, 4);
        let ser = measure_gates(&[Gate::Cx(0, 1), Gate::Cx(1, 2)]);
        assert_eq!(ser.depth, 2);
    }

    #[test]
    fn empty_circuit() {
        let m = measure(&Circuit::new(0));
        assert_eq!(m, Metrics::default());
    }

    #[test]
    fn toffoli_counts() {
        let mut b = GateBuf::new();
        b.toffoli(0, 1, 2);
        let m = measure_gates(&b.gates);
        assert_eq!(m.counts.cx, 6);
        assert_eq!(m.counts.single, 9);
    }

    #[test]
    fn check_rejects_bad_index() {
        let c = Circuit::from_gates(1, vec![Gate::Cx(0, 1)]);
        assert!(c.check().is_err());
    }
}

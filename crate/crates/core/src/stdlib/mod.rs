//! Library functions with multiple implementations and measured profiles.

pub mod construct;

use crate::circuit::{measure_gates, Gate, GateBuf, GateCounts};
use construct as k;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LibError {
    #[error("{0}: expected at least {1}")]
    TooSmall(&'static str, usize),
    #[error("variant {variant} does not apply to {op}")]
    BadVariant { variant: Variant, op: String },
    #[error("expected {want} operand qubits and {want_aux} aux, got {got} and {got_aux}")]
    Arity { want: usize, want_aux: usize, got: usize, got_aux: usize },
}

/// A library call on concrete qubits. Qubit numbers are whatever space the
/// caller uses (logical ids in the call graph, physical ids at emission).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum LibOp {
    H {
        q: usize,
    },
    Rz {
        theta: f64,
        q: usize,
    },
    /// Zero controls is a plain X, one is CX.
    Mcx {
        controls: Vec<usize>,
        target: usize,
    },
    /// Phase `theta` on the all-ones state of `qubits`.
    McPhase {
        theta: f64,
        qubits: Vec<usize>,
    },
    /// `I - 2|0><0|` on `qubits`, gated on `controls`.
    ReflectZero {
        controls: Vec<usize>,
        qubits: Vec<usize>,
    },
    /// `target += value mod 2^w`, gated on `controls`.
    AddConst {
        controls: Vec<usize>,
        target: Vec<usize>,
        value: i64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Direct,
    NoAux,
    OneAux,
    Chain,
    Qft,
    Ripple,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Direct => "direct",
            Variant::NoAux => "noaux",
            Variant::OneAux => "oneaux",
            Variant::Chain => "chain",
            Variant::Qft => "qft",
            Variant::Ripple => "ripple",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything about an op that affects its resource profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Shape {
    H,
    Rz,
    Mcx { n: usize },
    McPhase { m: usize },
    Reflect { c: usize, n: usize },
    AddConst { c: usize, w: usize, value: i64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Profile {
    pub aux: usize,
    pub depth: usize,
    pub counts: GateCounts,
}

/// One implementation of a library op, with its measured profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ImplVariant {
    pub shape: Shape,
    pub variant: Variant,
    pub profile: Profile,
}

impl ImplVariant {
    pub fn aux_count(&self) -> usize {
        self.profile.aux
    }
}

impl LibOp {
    pub fn family(&self) -> &'static str {
        match self {
            LibOp::H { .. } => "h",
            LibOp::Rz { .. } => "rz",
            LibOp::Mcx { .. } => "mcx",
            LibOp::McPhase { .. } => "mcphase",
            LibOp::ReflectZero { .. } => "reflect_about_zero",
            LibOp::AddConst { .. } => "add_const",
        }
    }

    pub fn shape(&self) -> Shape {
        match self {
            LibOp::H { .. } => Shape::H,
            LibOp::Rz { .. } => Shape::Rz,
            LibOp::Mcx { controls, .. } => Shape::Mcx { n: controls.len() },
            LibOp::McPhase { qubits, .. } => Shape::McPhase { m: qubits.len() },
            LibOp::ReflectZero { controls, qubits } => Shape::Reflect { c: controls.len(), n: qubits.len() },
            LibOp::AddConst { controls, target, value } => {
                let w = target.len();
                let v = (*value as i128).rem_euclid(1i128 << w.min(120)) as i64;
                Shape::AddConst { c: controls.len(), w, value: v }
            }
        }
    }

    /// Functional operands in a fixed order: controls first.
    pub fn operands(&self) -> Vec<usize> {
        match self {
            LibOp::H { q } | LibOp::Rz { q, .. } => vec![*q],
            LibOp::Mcx { controls, target } => {
                let mut v = controls.clone();
                v.push(*target);
                v
            }
            LibOp::McPhase { qubits, .. } => qubits.clone(),
            LibOp::ReflectZero { controls, qubits } => controls.iter().chain(qubits).copied().collect(),
            LibOp::AddConst { controls, target, .. } => controls.iter().chain(target).copied().collect(),
        }
    }

    pub fn inverse(&self) -> LibOp {
        match self {
            LibOp::Rz { theta, q } => LibOp::Rz { theta: -theta, q: *q },
            LibOp::McPhase { theta, qubits } => LibOp::McPhase { theta: -theta, qubits: qubits.clone() },
            LibOp::AddConst { controls, target, value } => {
                LibOp::AddConst { controls: controls.clone(), target: target.clone(), value: -value }
            }
            op => op.clone(),
        }
    }

    /// Renames every qubit through `f`.
    pub fn map_qubits(&self, f: impl Fn(usize) -> usize) -> LibOp {
        let m = |v: &Vec<usize>| v.iter().map(|&q| f(q)).collect::<Vec<_>>();
        match self {
            LibOp::H { q } => LibOp::H { q: f(*q) },
            LibOp::Rz { theta, q } => LibOp::Rz { theta: *theta, q: f(*q) },
            LibOp::Mcx { controls, target } => LibOp::Mcx { controls: m(controls), target: f(*target) },
            LibOp::McPhase { theta, qubits } => LibOp::McPhase { theta: *theta, qubits: m(qubits) },
            LibOp::ReflectZero { controls, qubits } => LibOp::ReflectZero { controls: m(controls), qubits: m(qubits) },
            LibOp::AddConst { controls, target, value } => {
                LibOp::AddConst { controls: m(controls), target: m(target), value: *value }
            }
        }
    }

    /// Same op over local indices `0..operands().len()`.
    pub fn localized(&self) -> LibOp {
        let ops = self.operands();
        self.map_qubits(|q| ops.iter().position(|&o| o == q).expect("operand"))
    }

    pub fn label(&self) -> String {
        match self {
            LibOp::H { .. } => "h".into(),
            LibOp::Rz { theta, .. } => format!("rz({theta})"),
            LibOp::Mcx { controls, .. } => match controls.len() {
                0 => "x".into(),
                1 => "cx".into(),
                n => format!("mcx{n}"),
            },
            LibOp::McPhase { qubits, .. } => format!("mcphase{}", qubits.len()),
            LibOp::ReflectZero { controls, qubits } => format!("reflect{}c{}", qubits.len(), controls.len()),
            LibOp::AddConst { controls, target, value } => {
                format!("add{}({value}){}", target.len(), if controls.is_empty() { "" } else { "c" })
            }
        }
    }
}

fn mcphase_size_variants(m: usize) -> Vec<Variant> {
    if m <= 2 {
        vec![Variant::Direct]
    } else {
        vec![Variant::NoAux, Variant::OneAux, Variant::Chain]
    }
}

/// Implementations offered for a shape, in a fixed order.
pub fn variants_for(shape: Shape) -> Vec<Variant> {
    match shape {
        Shape::H | Shape::Rz => vec![Variant::Direct],
        Shape::Mcx { n } => {
            if n <= 2 {
                vec![Variant::Direct]
            } else {
                vec![Variant::NoAux, Variant::OneAux, Variant::Chain]
            }
        }
        Shape::McPhase { m } => mcphase_size_variants(m),
        Shape::Reflect { c, n } => mcphase_size_variants(c + n),
        Shape::AddConst { c, .. } => {
            if c <= 1 {
                vec![Variant::Qft, Variant::Ripple]
            } else {
                vec![Variant::Qft]
            }
        }
    }
}

pub fn aux_count(shape: Shape, variant: Variant) -> Result<usize, LibError> {
    let bad = || LibError::BadVariant { variant, op: format!("{shape:?}") };
    if !variants_for(shape).contains(&variant) {
        return Err(bad());
    }
    let phase_aux = |m: usize| match variant {
        Variant::OneAux => 1,
        Variant::Chain => m - 2,
        _ => 0,
    };
    Ok(match shape {
        Shape::H | Shape::Rz => 0,
        Shape::Mcx { n } => match variant {
            Variant::OneAux => 1,
            Variant::Chain => n - 2,
            _ => 0,
        },
        Shape::McPhase { m } => phase_aux(m),
        Shape::Reflect { c, n } => phase_aux(c + n),
        Shape::AddConst { w, .. } => match variant {
            Variant::Ripple => w + 1,
            _ => 0,
        },
    })
}

fn mcphase_local(b: &mut GateBuf, variant: Variant, theta: f64, qs: &[usize], aux: &[usize]) {
    match variant {
        Variant::Direct | Variant::NoAux => k::mcphase_noaux(b, theta, qs),
        Variant::OneAux => k::mcphase_one_clean(b, theta, qs, aux[0]),
        Variant::Chain => k::mcphase_chain(b, theta, qs, aux),
        _ => unreachable!(),
    }
}

/// Builds the gate list of `op` with implementation `variant`. `op` holds
/// the functional qubits; `aux` supplies clean helpers.
pub fn generate(op: &LibOp, variant: Variant, aux: &[usize]) -> Result<Vec<Gate>, LibError> {
    let shape = op.shape();
    let want_aux = aux_count(shape, variant)?;
    if aux.len() != want_aux {
        let n = op.operands().len();
        return Err(LibError::Arity { want: n, want_aux, got: n, got_aux: aux.len() });
    }
    let mut b = GateBuf::new();
    match op {
        LibOp::H { q } => b.h(*q),
        LibOp::Rz { theta, q } => b.rz(*theta, *q),
        LibOp::Mcx { controls, target } => match variant {
            Variant::Direct => k::mcx_dirty(&mut b, controls, *target, &[]),
            Variant::NoAux => k::mcx_noaux(&mut b, controls, *target),
            Variant::OneAux => k::mcx_one_clean(&mut b, controls, *target, aux[0]),
            Variant::Chain => k::mcx_chain(&mut b, controls, *target, aux),
            _ => unreachable!(),
        },
        LibOp::McPhase { theta, qubits } => mcphase_local(&mut b, variant, *theta, qubits, aux),
        LibOp::ReflectZero { controls, qubits } => {
            for &q in qubits {
                b.x(q);
            }
            let all: Vec<usize> = controls.iter().chain(qubits).copied().collect();
            mcphase_local(&mut b, variant, std::f64::consts::PI, &all, aux);
            for &q in qubits {
                b.x(q);
            }
        }
        LibOp::AddConst { controls, target, value } => match variant {
            Variant::Qft => k::add_const_qft(&mut b, controls, target, *value),
            Variant::Ripple => k::add_const_ripple(&mut b, controls, target, *value, aux),
            _ => unreachable!(),
        },
    }
    Ok(b.gates)
}

/// A representative op of `shape` on fresh local qubits.
pub fn sample_op(shape: Shape) -> LibOp {
    match shape {
        Shape::H => LibOp::H { q: 0 },
        Shape::Rz => LibOp::Rz { theta: 0.5, q: 0 },
        Shape::Mcx { n } => LibOp::Mcx { controls: (0..n).collect(), target: n },
        Shape::McPhase { m } => LibOp::McPhase { theta: 0.5, qubits: (0..m).collect() },
        Shape::Reflect { c, n } => LibOp::ReflectZero { controls: (0..c).collect(), qubits: (c..c + n).collect() },
        Shape::AddConst { c, w, value } => {
            LibOp::AddConst { controls: (0..c).collect(), target: (c..c + w).collect(), value }
        }
    }
}

fn operand_count(shape: Shape) -> usize {
    sample_op(shape).operands().len()
}

fn compute_profile(shape: Shape, variant: Variant) -> Result<Profile, LibError> {
    let op = sample_op(shape);
    let aux = aux_count(shape, variant)?;
    let n = operand_count(shape);
    let aux_q: Vec<usize> = (n..n + aux).collect();
    let gates = generate(&op, variant, &aux_q)?;
    let m = measure_gates(&gates);
    Ok(Profile { aux, depth: m.depth, counts: m.counts })
}

type ProfileCache = RwLock<HashMap<(Shape, Variant), Profile>>;

fn cache() -> &'static ProfileCache {
    static CACHE: OnceLock<ProfileCache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Generate-and-count profile, cached per `(shape, variant)`.
pub fn resource_profile(shape: Shape, variant: Variant) -> Result<Profile, LibError> {
    if let Some(p) = cache().read().unwrap().get(&(shape, variant)) {
        return Ok(*p);
    }
    let p = compute_profile(shape, variant)?;
    cache().write().unwrap().insert((shape, variant), p);
    Ok(p)
}

pub fn impl_variants(shape: Shape) -> Vec<ImplVariant> {
    variants_for(shape)
        .into_iter()
        .map(|variant| ImplVariant {
            shape,
            variant,
            profile: resource_profile(shape, variant).expect("listed variant"),
        })
        .collect()
}

pub fn mcx_variants(n_ctrl: usize) -> Result<Vec<ImplVariant>, LibError> {
    if n_ctrl < 1 {
        return Err(LibError::TooSmall("n_ctrl", 1));
    }
    Ok(impl_variants(Shape::Mcx { n: n_ctrl }))
}

/// Uncontrolled `x += 1` adders on `width` qubits.
pub fn adder_variants(width: usize) -> Result<Vec<ImplVariant>, LibError> {
    if width < 1 {
        return Err(LibError::TooSmall("width", 1));
    }
    Ok(impl_variants(Shape::AddConst { c: 0, w: width, value: 1 }))
}

/// Library entry points callable from a model, for documentation dumps.
pub struct LibraryFunction {
    pub name: &'static str,
    pub params: &'static str,
    pub summary: &'static str,
}

pub const LIBRARY: &[LibraryFunction] = &[
    LibraryFunction { name: "mcx", params: "(ctrl: qubit[], target: qubit)", summary: "multi-controlled X" },
    LibraryFunction { name: "mcphase", params: "(theta: real; q: qubit[])", summary: "phase on all-ones" },
    LibraryFunction { name: "reflect_about_zero", params: "(x: qubit[])", summary: "I - 2|0><0|" },
    LibraryFunction { name: "hadamard_transform", params: "(x: qubit[])", summary: "H on every qubit" },
    LibraryFunction { name: "add_const", params: "(value: int; x: qnum)", summary: "x += value mod 2^w" },
];

/// CSV rows `family,size,variant,aux,depth,cx,single` for `sizes`.
pub fn profile_table(sizes: &[usize]) -> String {
    let mut out = String::from("family,size,variant,aux,depth,cx,single\n");
    let mut push = |fam: &str, size: usize, v: &ImplVariant| {
        let p = v.profile;
        out.push_str(&format!(
            "{fam},{size},{},{},{},{},{}\n",
            v.variant, p.aux, p.depth, p.counts.cx, p.counts.single
        ));
    };
    for &n in sizes {
        for v in impl_variants(Shape::Mcx { n }) {
            push("mcx", n, &v);
        }
    }
    for &n in sizes {
        for v in impl_variants(Shape::McPhase { m: n }) {
            push("mcphase", n, &v);
        }
    }
    for &n in sizes {
        for v in impl_variants(Shape::AddConst { c: 0, w: n, value: 1 }) {
            push("add_const", n, &v);
        }
    }
    out
}

/// Shared handle for callers that keep fragments around.
pub type Fragment = Arc<Vec<Gate>>;

#[cfg(test)]
mod tests;

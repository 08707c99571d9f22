//! Lowering of a model to library ops over logical qubit ids, resolving
//! slices, repeats, control and invert. User calls and selects stay as
//! nested composites.

use super::*;
use crate::expr::Scope;
use crate::stdlib::LibOp;
use std::collections::{HashMap, HashSet};

const MAX_CALL_DEPTH: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub enum Elem {
    Op(LibOp),
    /// A user-function call: a composite with a single body.
    Call {
        name: String,
        body: Vec<Elem>,
    },
    /// A composite with one body per alternative.
    Select {
        site: String,
        alts: Vec<Vec<Elem>>,
    },
    /// `outer; inner; inverse(outer)`.
    Conj {
        outer: Vec<Elem>,
        inner: Vec<Elem>,
    },
    Alloc(Vec<usize>),
    Free(Vec<usize>),
}

/// A flattened item after every composite has been resolved.
#[derive(Clone, Debug, PartialEq)]
pub enum FlatItem {
    Op(LibOp),
    Alloc(Vec<usize>),
    Free(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Elaborated {
    /// Declared variables occupy ids `0..num_functional`, in declaration order.
    pub num_functional: usize,
    /// Declared plus locally allocated qubits.
    pub num_logical: usize,
    pub qubit_names: Vec<String>,
    pub body: Vec<Elem>,
}

impl Elem {
    /// Logical qubits referenced anywhere inside.
    pub fn qubits(&self, out: &mut Vec<usize>) {
        match self {
            Elem::Op(op) => out.extend(op.operands()),
            Elem::Call { body, .. } => body.iter().for_each(|e| e.qubits(out)),
            Elem::Select { alts, .. } => alts.iter().flatten().for_each(|e| e.qubits(out)),
            Elem::Conj { outer, inner } => outer.iter().chain(inner).for_each(|e| e.qubits(out)),
            Elem::Alloc(q) | Elem::Free(q) => out.extend(q),
        }
    }
}

pub fn qubit_set(elems: &[Elem]) -> Vec<usize> {
    let mut v = Vec::new();
    elems.iter().for_each(|e| e.qubits(&mut v));
    v.sort_unstable();
    v.dedup();
    v
}

pub fn invert_elems(elems: &[Elem]) -> Vec<Elem> {
    elems
        .iter()
        .rev()
        .map(|e| match e {
            Elem::Op(op) => Elem::Op(op.inverse()),
            Elem::Call { name, body } => Elem::Call { name: name.clone(), body: invert_elems(body) },
            Elem::Select { site, alts } => {
                Elem::Select { site: site.clone(), alts: alts.iter().map(|a| invert_elems(a)).collect() }
            }
            Elem::Conj { outer, inner } => Elem::Conj { outer: outer.clone(), inner: invert_elems(inner) },
            Elem::Alloc(q) => Elem::Free(q.clone()),
            Elem::Free(q) => Elem::Alloc(q.clone()),
        })
        .collect()
}

fn with_controls(ctrls: &[usize], v: &[usize]) -> Vec<usize> {
    ctrls.iter().chain(v).copied().collect()
}

/// Adds `ctrls` as extra controls to every op. Conjugating parts of
/// within/apply blocks stay uncontrolled.
pub fn control_elems(elems: &[Elem], ctrls: &[usize]) -> Result<Vec<Elem>, ModelError> {
    let mut out = Vec::with_capacity(elems.len());
    for e in elems {
        match e {
            Elem::Op(op) => match op {
                LibOp::H { q } => {
                    return Err(ModelError::Invalid(format!("H on qubit {q} cannot be controlled; use within/apply")))
                }
                LibOp::Rz { theta, q } => {
                    out.push(Elem::Op(LibOp::McPhase { theta: -theta / 2.0, qubits: ctrls.to_vec() }));
                    out.push(Elem::Op(LibOp::McPhase { theta: *theta, qubits: with_controls(ctrls, &[*q]) }));
                }
                LibOp::Mcx { controls, target } => {
                    out.push(Elem::Op(LibOp::Mcx { controls: with_controls(ctrls, controls), target: *target }))
                }
                LibOp::McPhase { theta, qubits } => {
                    out.push(Elem::Op(LibOp::McPhase { theta: *theta, qubits: with_controls(ctrls, qubits) }))
                }
                LibOp::ReflectZero { controls, qubits } => out.push(Elem::Op(LibOp::ReflectZero {
                    controls: with_controls(ctrls, controls),
                    qubits: qubits.clone(),
                })),
                LibOp::AddConst { controls, target, value } => out.push(Elem::Op(LibOp::AddConst {
                    controls: with_controls(ctrls, controls),
                    target: target.clone(),
                    value: *value,
                })),
            },
            Elem::Call { name, body } => out.push(Elem::Call { name: name.clone(), body: control_elems(body, ctrls)? }),
            Elem::Select { site, alts } => out.push(Elem::Select {
                site: site.clone(),
                alts: alts.iter().map(|a| control_elems(a, ctrls)).collect::<Result<_, _>>()?,
            }),
            Elem::Conj { outer, inner } => {
                out.push(Elem::Conj { outer: outer.clone(), inner: control_elems(inner, ctrls)? })
            }
            Elem::Alloc(_) | Elem::Free(_) => out.push(e.clone()),
        }
    }
    Ok(out)
}

/// Resolves composites, picking select alternatives through `choose`.
pub fn flatten(
    elems: &[Elem],
    choose: &mut dyn FnMut(&str, usize) -> Option<usize>,
    out: &mut Vec<FlatItem>,
) -> Result<(), ModelError> {
    for e in elems {
        match e {
            Elem::Op(op) => out.push(FlatItem::Op(op.clone())),
            Elem::Call { body, .. } => flatten(body, choose, out)?,
            Elem::Select { site, alts } => {
                let k = choose(site, alts.len()).ok_or_else(|| ModelError::MissingChoice(site.clone()))?;
                let alt = alts.get(k).ok_or_else(|| {
                    ModelError::Invalid(format!("choice {k} at `{site}` but only {} alternatives", alts.len()))
                })?;
                flatten(alt, choose, out)?;
            }
            Elem::Conj { outer, inner } => {
                flatten(outer, choose, out)?;
                flatten(inner, choose, out)?;
                flatten(&invert_elems(outer), choose, out)?;
            }
            Elem::Alloc(q) => out.push(FlatItem::Alloc(q.clone())),
            Elem::Free(q) => out.push(FlatItem::Free(q.clone())),
        }
    }
    Ok(())
}

#[derive(Clone, Debug)]
enum Binding {
    Qubits(Vec<usize>),
    Value(f64),
    Freed,
}

struct Env<'a> {
    vars: &'a [(String, Binding)],
}

impl Env<'_> {
    fn get(&self, name: &str) -> Option<&Binding> {
        self.vars.iter().rev().find(|(n, _)| n == name).map(|(_, b)| b)
    }
}

impl Scope for Env<'_> {
    fn var(&self, name: &str) -> Option<f64> {
        match self.get(name)? {
            Binding::Value(v) => Some(*v),
            _ => None,
        }
    }

    fn len(&self, name: &str) -> Option<usize> {
        match self.get(name)? {
            Binding::Qubits(q) => Some(q.len()),
            _ => None,
        }
    }
}

struct Frame {
    func: String,
    index: HashMap<*const Stmt, usize>,
    vars: Vec<(String, Binding)>,
    iters: Vec<usize>,
}

struct Elaborator<'m> {
    model: &'m Model,
    next_id: usize,
    names: Vec<String>,
    freed: HashSet<usize>,
    path: Vec<String>,
}

pub fn elaborate(model: &Model) -> Result<Elaborated, ModelError> {
    let entry = model
        .entry_def()
        .ok_or_else(|| ModelError::Unresolved { name: model.entry.clone(), context: "entry".into() })?;
    if !entry.params.is_empty() {
        return Err(ModelError::Invalid(format!("entry `{}` must not take parameters", entry.name)));
    }
    let mut el = Elaborator { model, next_id: 0, names: vec![], freed: HashSet::new(), path: vec![] };
    let mut vars = Vec::new();
    for (name, &w) in &model.variables {
        let ids: Vec<usize> = (el.next_id..el.next_id + w).collect();
        for i in 0..w {
            el.names.push(format!("{name}[{i}]"));
        }
        el.next_id += w;
        vars.push((name.clone(), Binding::Qubits(ids)));
    }
    let num_functional = el.next_id;
    let mut frame = el.frame(entry, vars);
    let body = el.body(&mut frame, &entry.body)?;
    Ok(Elaborated { num_functional, num_logical: el.next_id, qubit_names: el.names, body })
}

fn pre_order_index(body: &[Stmt]) -> HashMap<*const Stmt, usize> {
    let mut m = HashMap::new();
    walk_stmts(body, &mut |k, s| {
        m.insert(s as *const Stmt, k);
    });
    m
}

impl<'m> Elaborator<'m> {
    fn frame(&self, f: &FunctionDef, vars: Vec<(String, Binding)>) -> Frame {
        Frame { func: f.name.clone(), index: pre_order_index(&f.body), vars, iters: vec![] }
    }

    fn site(&self, fr: &Frame, s: &Stmt) -> String {
        let k = fr.index.get(&(s as *const Stmt)).copied().unwrap_or(0);
        let mut seg = format!("{}#{k}", fr.func);
        for i in &fr.iters {
            seg.push_str(&format!("@{i}"));
        }
        if self.path.is_empty() {
            seg
        } else {
            format!("{}/{seg}", self.path.join("/"))
        }
    }

    fn eval(&self, fr: &Frame, e: &Expr) -> Result<f64, ModelError> {
        e.eval(&Env { vars: &fr.vars }).map_err(|source| ModelError::Expr { path: fr.func.clone(), source })
    }

    fn eval_int(&self, fr: &Frame, e: &Expr) -> Result<i64, ModelError> {
        e.eval_int(&Env { vars: &fr.vars }).map_err(|source| ModelError::Expr { path: fr.func.clone(), source })
    }

    fn resolve(&self, fr: &Frame, op: &Operand) -> Result<Vec<usize>, ModelError> {
        match op {
            Operand::Concat(parts) => {
                let mut v = Vec::new();
                for p in parts {
                    v.extend(self.resolve(fr, p)?);
                }
                Ok(v)
            }
            Operand::Var { name, index } => {
                let env = Env { vars: &fr.vars };
                let qs = match env.get(name) {
                    Some(Binding::Qubits(q)) => q,
                    Some(Binding::Freed) => return Err(ModelError::UseAfterFree(name.clone())),
                    Some(Binding::Value(_)) => {
                        return Err(ModelError::Invalid(format!("`{name}` is classical, expected qubits")))
                    }
                    None => return Err(ModelError::Unresolved { name: name.clone(), context: fr.func.clone() }),
                };
                if let Some(q) = qs.iter().find(|q| self.freed.contains(q)) {
                    return Err(ModelError::UseAfterFree(self.names[*q].clone()));
                }
                let w = qs.len();
                let oob = || ModelError::OutOfBounds { operand: op.to_string(), width: w };
                match index {
                    None => Ok(qs.clone()),
                    Some(Index::At(e)) => {
                        let i = self.eval_int(fr, e)?;
                        if i < 0 || i as usize >= w {
                            return Err(oob());
                        }
                        Ok(vec![qs[i as usize]])
                    }
                    Some(Index::Range(a, b)) => {
                        let lo = a.as_ref().map(|e| self.eval_int(fr, e)).transpose()?.unwrap_or(0);
                        let hi = b.as_ref().map(|e| self.eval_int(fr, e)).transpose()?.unwrap_or(w as i64);
                        if lo >= hi {
                            return Err(ModelError::EmptySlice(op.to_string()));
                        }
                        if lo < 0 || hi as usize > w {
                            return Err(oob());
                        }
                        Ok(qs[lo as usize..hi as usize].to_vec())
                    }
                }
            }
        }
    }

    fn op(&self, op: LibOp) -> Result<Elem, ModelError> {
        let mut qs = op.operands();
        qs.sort_unstable();
        if qs.windows(2).any(|w| w[0] == w[1]) {
            return Err(ModelError::Aliasing(op.label()));
        }
        Ok(Elem::Op(op))
    }

    /// Binds arguments to parameters, checking kinds and widths.
    fn bind_args(
        &self,
        fr: &Frame,
        func: &str,
        params: &[Param],
        args: &[Arg],
    ) -> Result<Vec<(String, Binding)>, ModelError> {
        if params.len() != args.len() {
            return Err(ModelError::Arity { func: func.into(), want: params.len(), got: args.len() });
        }
        let mut bound = Vec::new();
        for (p, a) in params.iter().zip(args) {
            let b = match (&p.kind, a) {
                (ParamKind::Real, Arg::Value(e)) => Binding::Value(self.eval(fr, e)?),
                (ParamKind::Real, Arg::Qubits(Operand::Var { name, index: None })) => {
                    Binding::Value(self.eval(fr, &Expr::Var(name.clone()))?)
                }
                (k, Arg::Qubits(o)) if k.is_quantum() => {
                    let qs = self.resolve(fr, o)?;
                    if matches!(k, ParamKind::Qubit) && qs.len() != 1 {
                        return Err(ModelError::WidthMismatch {
                            context: format!("{func}({})", p.name),
                            want: 1,
                            got: qs.len(),
                        });
                    }
                    Binding::Qubits(qs)
                }
                _ => {
                    return Err(ModelError::Invalid(format!(
                        "argument for `{}` of `{func}` must be {}",
                        p.name,
                        if p.kind.is_quantum() { "an operand" } else { "a classical value" }
                    )))
                }
            };
            bound.push((p.name.clone(), b));
        }
        // Declared widths may refer to earlier parameters.
        for (i, p) in params.iter().enumerate() {
            if let (Some(wexpr), Binding::Qubits(qs)) = (p.kind.declared_width(), &bound[i].1) {
                let want = wexpr
                    .eval_int(&Env { vars: &bound })
                    .map_err(|source| ModelError::Expr { path: format!("{func}.{}", p.name), source })?;
                if want != qs.len() as i64 {
                    return Err(ModelError::WidthMismatch {
                        context: format!("{func}({})", p.name),
                        want: want.max(0) as usize,
                        got: qs.len(),
                    });
                }
            }
        }
        Ok(bound)
    }

    fn body(&mut self, fr: &mut Frame, stmts: &[Stmt]) -> Result<Vec<Elem>, ModelError> {
        let mark = fr.vars.len();
        let out = self.seq(fr, stmts);
        fr.vars.truncate(mark);
        out
    }

    fn seq(&mut self, fr: &mut Frame, stmts: &[Stmt]) -> Result<Vec<Elem>, ModelError> {
        let mut out = Vec::new();
        for s in stmts {
            out.extend(self.stmt(fr, s)?);
        }
        Ok(out)
    }

    fn stmt(&mut self, fr: &mut Frame, s: &Stmt) -> Result<Vec<Elem>, ModelError> {
        match s {
            Stmt::Gate { gate, args } => {
                let b = self.bind_args(fr, gate.name(), &gate.signature(), args)?;
                let q = |i: usize| match &b[i].1 {
                    Binding::Qubits(v) => v[0],
                    _ => unreachable!(),
                };
                let v = |i: usize| match &b[i].1 {
                    Binding::Value(v) => *v,
                    _ => unreachable!(),
                };
                let op = match gate {
                    PrimGate::H => LibOp::H { q: q(0) },
                    PrimGate::X => LibOp::Mcx { controls: vec![], target: q(0) },
                    PrimGate::Rz => LibOp::Rz { theta: v(0), q: q(1) },
                    PrimGate::Cx => LibOp::Mcx { controls: vec![q(0)], target: q(1) },
                    PrimGate::CPhase => LibOp::McPhase { theta: v(0), qubits: vec![q(1), q(2)] },
                };
                Ok(vec![self.op(op)?])
            }
            Stmt::Call { func, args } => {
                if let Some(sig) = stdlib_signature(func) {
                    let b = self.bind_args(fr, func, &sig, args)?;
                    return self.stdlib_call(func, &b);
                }
                let def = self
                    .model
                    .functions
                    .get(func)
                    .ok_or_else(|| ModelError::Unresolved { name: func.clone(), context: fr.func.clone() })?;
                if self.path.len() >= MAX_CALL_DEPTH {
                    return Err(ModelError::Recursive(func.clone()));
                }
                let bound = self.bind_args(fr, func, &def.params, args)?;
                let seg = self.site(fr, s);
                let seg = seg.rsplit('/').next().unwrap_or(&seg).to_string();
                self.path.push(seg);
                let mut callee = self.frame(def, bound);
                let body = self.body(&mut callee, &def.body);
                self.path.pop();
                Ok(vec![Elem::Call { name: func.clone(), body: body? }])
            }
            Stmt::Control { operand, value, body } => {
                let ctrls = self.resolve(fr, operand)?;
                let w = ctrls.len();
                let all = if w >= 63 { i64::MAX } else { (1i64 << w) - 1 };
                let v = match value {
                    Some(e) => self.eval_int(fr, e)?,
                    None => all,
                };
                if v < 0 || (w < 63 && v > all) {
                    return Err(ModelError::Invalid(format!("control value {v} does not fit in {w} qubits")));
                }
                let inner = self.body(fr, body)?;
                let touched = qubit_set(&inner);
                if let Some(c) = ctrls.iter().find(|c| touched.binary_search(c).is_ok()) {
                    return Err(ModelError::Aliasing(format!(
                        "control qubit {} is used inside its body",
                        self.names[*c]
                    )));
                }
                let controlled = control_elems(&inner, &ctrls)?;
                let zeros: Vec<Elem> = ctrls
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i < 63 && (v >> i) & 1 == 0)
                    .map(|(_, &q)| Elem::Op(LibOp::Mcx { controls: vec![], target: q }))
                    .collect();
                if zeros.is_empty() {
                    Ok(controlled)
                } else {
                    Ok(vec![Elem::Conj { outer: zeros, inner: controlled }])
                }
            }
            Stmt::Invert(body) => Ok(invert_elems(&self.body(fr, body)?)),
            Stmt::Repeat { count, var, body } => {
                let n = self.eval_int(fr, count)?;
                if n < 0 {
                    return Err(ModelError::Invalid(format!("negative repeat count {n}")));
                }
                let mut out = Vec::new();
                for i in 0..n as usize {
                    fr.iters.push(i);
                    if let Some(v) = var {
                        fr.vars.push((v.clone(), Binding::Value(i as f64)));
                    }
                    let r = self.body(fr, body);
                    if var.is_some() {
                        fr.vars.pop();
                    }
                    fr.iters.pop();
                    out.extend(r?);
                }
                Ok(out)
            }
            Stmt::Select(alts) => {
                if alts.is_empty() {
                    return Err(ModelError::Invalid("select needs at least one alternative".into()));
                }
                let site = self.site(fr, s);
                let before = self.next_id;
                let mut bodies = Vec::new();
                for a in alts {
                    bodies.push(self.body(fr, a)?);
                }
                let outer =
                    |b: &Vec<Elem>| -> Vec<usize> { qubit_set(b).into_iter().filter(|&q| q < before).collect() };
                let first = outer(&bodies[0]);
                if bodies.iter().any(|b| outer(b) != first) {
                    return Err(ModelError::Invalid(format!(
                        "select alternatives at `{site}` act on different operands"
                    )));
                }
                Ok(vec![Elem::Select { site, alts: bodies }])
            }
            Stmt::Within { within, apply } => {
                let mark = fr.vars.len();
                let r = (|| {
                    let outer = self.seq(fr, within)?;
                    let inner = self.seq(fr, apply)?;
                    Ok(vec![Elem::Conj { outer, inner }])
                })();
                fr.vars.truncate(mark);
                r
            }
            Stmt::Allocate { var, width } => {
                let w = self.eval_int(fr, width)?;
                if w < 1 {
                    return Err(ModelError::Invalid(format!("allocation of `{var}` needs a positive width")));
                }
                let ids: Vec<usize> = (self.next_id..self.next_id + w as usize).collect();
                for &id in &ids {
                    self.names.push(format!("_q{id}"));
                }
                self.next_id += w as usize;
                fr.vars.push((var.clone(), Binding::Qubits(ids.clone())));
                Ok(vec![Elem::Alloc(ids)])
            }
            Stmt::Free { var } => {
                let ids = self.resolve(fr, &Operand::var(var))?;
                if ids.iter().any(|&q| q < self.model.functional_width()) {
                    return Err(ModelError::Invalid(format!("`{var}` is a declared variable and cannot be freed")));
                }
                self.freed.extend(ids.iter().copied());
                fr.vars.push((var.clone(), Binding::Freed));
                Ok(vec![Elem::Free(ids)])
            }
            Stmt::Let { name, operand } => {
                let qs = self.resolve(fr, operand)?;
                fr.vars.push((name.clone(), Binding::Qubits(qs)));
                Ok(vec![])
            }
            Stmt::Inline { origin, params, args, body } => {
                let bound = self.bind_args(fr, origin, params, args)?;
                let mark = fr.vars.len();
                fr.vars.extend(bound);
                let r = self.seq(fr, body);
                fr.vars.truncate(mark);
                Ok(vec![Elem::Call { name: origin.clone(), body: r? }])
            }
        }
    }

    fn stdlib_call(&self, func: &str, b: &[(String, Binding)]) -> Result<Vec<Elem>, ModelError> {
        let qs = |i: usize| match &b[i].1 {
            Binding::Qubits(v) => v.clone(),
            _ => unreachable!(),
        };
        let val = |i: usize| match &b[i].1 {
            Binding::Value(v) => *v,
            _ => unreachable!(),
        };
        Ok(match func {
            "mcx" => vec![self.op(LibOp::Mcx { controls: qs(0), target: qs(1)[0] })?],
            "mcphase" => vec![self.op(LibOp::McPhase { theta: val(0), qubits: qs(1) })?],
            "reflect_about_zero" => vec![self.op(LibOp::ReflectZero { controls: vec![], qubits: qs(0) })?],
            "hadamard_transform" => qs(0).into_iter().map(|q| Elem::Op(LibOp::H { q })).collect(),
            "add_const" => {
                let v = val(0);
                if v.fract() != 0.0 {
                    return Err(ModelError::Invalid(format!("add_const value {v} is not an integer")));
                }
                vec![self.op(LibOp::AddConst { controls: vec![], target: qs(1), value: v as i64 })?]
            }
            _ => unreachable!("stdlib signature without lowering: {func}"),
        })
    }
}

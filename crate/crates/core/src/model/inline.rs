//! Composite flattening: picks one alternative per select and inlines every
//! user call, producing a single-function model over the declared
//! variables.

use super::elaborate::{flatten, FlatItem};
use super::*;
use crate::stdlib::LibOp;
use std::collections::BTreeMap;

/// `choices` maps select sites (as reported by elaboration) to alternative
/// indices. A missing site is an error unless the select has exactly one
/// alternative.
pub fn inline_composites(model: &Model, choices: &BTreeMap<String, usize>) -> Result<Model, ModelError> {
    let el = elaborate(model)?;
    let mut items = Vec::new();
    let mut choose = |site: &str, n: usize| choices.get(site).copied().or(if n == 1 { Some(0) } else { None });
    flatten(&el.body, &mut choose, &mut items)?;

    let mut owner = Vec::with_capacity(el.num_functional);
    for (name, &w) in &model.variables {
        for k in 0..w {
            owner.push((name.clone(), k));
        }
    }
    let q = |id: usize| -> Operand {
        match owner.get(id) {
            Some((name, k)) => Operand::Var { name: name.clone(), index: Some(Index::At(Expr::int(*k as i64))) },
            None => Operand::var(&format!("_q{id}")),
        }
    };
    let qs = |ids: &[usize]| Operand::Concat(ids.iter().map(|&i| q(i)).collect());
    let num = |v: f64| Arg::Value(Expr::Num(v));
    let controlled = |ctrls: &[usize], s: Stmt| {
        if ctrls.is_empty() {
            s
        } else {
            Stmt::Control { operand: qs(ctrls), value: None, body: vec![s] }
        }
    };

    let mut body = Vec::with_capacity(items.len());
    for it in items {
        match it {
            FlatItem::Alloc(ids) => {
                body.extend(ids.iter().map(|id| Stmt::Allocate { var: format!("_q{id}"), width: Expr::int(1) }))
            }
            FlatItem::Free(ids) => body.extend(ids.iter().map(|id| Stmt::Free { var: format!("_q{id}") })),
            FlatItem::Op(op) => body.push(match op {
                LibOp::H { q: t } => Stmt::Gate { gate: PrimGate::H, args: vec![Arg::Qubits(q(t))] },
                LibOp::Rz { theta, q: t } => {
                    Stmt::Gate { gate: PrimGate::Rz, args: vec![num(theta), Arg::Qubits(q(t))] }
                }
                LibOp::Mcx { controls, target } => match controls.len() {
                    0 => Stmt::Gate { gate: PrimGate::X, args: vec![Arg::Qubits(q(target))] },
                    1 => Stmt::Gate {
                        gate: PrimGate::Cx,
                        args: vec![Arg::Qubits(q(controls[0])), Arg::Qubits(q(target))],
                    },
                    _ => Stmt::Call {
                        func: "mcx".into(),
                        args: vec![Arg::Qubits(qs(&controls)), Arg::Qubits(q(target))],
                    },
                },
                LibOp::McPhase { theta, qubits } if qubits.len() == 2 => Stmt::Gate {
                    gate: PrimGate::CPhase,
                    args: vec![num(theta), Arg::Qubits(q(qubits[0])), Arg::Qubits(q(qubits[1]))],
                },
                LibOp::McPhase { theta, qubits } => {
                    Stmt::Call { func: "mcphase".into(), args: vec![num(theta), Arg::Qubits(qs(&qubits))] }
                }
                LibOp::ReflectZero { controls, qubits } => controlled(
                    &controls,
                    Stmt::Call { func: "reflect_about_zero".into(), args: vec![Arg::Qubits(qs(&qubits))] },
                ),
                LibOp::AddConst { controls, target, value } => controlled(
                    &controls,
                    Stmt::Call { func: "add_const".into(), args: vec![num(value as f64), Arg::Qubits(qs(&target))] },
                ),
            }),
        }
    }
    let entry = FunctionDef { name: model.entry.clone(), params: vec![], body };
    let mut functions = IndexMap::new();
    functions.insert(model.entry.clone(), entry);
    Ok(Model { functions, entry: model.entry.clone(), variables: model.variables.clone() })
}

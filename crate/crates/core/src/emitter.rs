//! Solution to circuit, OpenQASM 2.0 text, reference semantics and the
//! JSON solution report.

use crate::callgraph::{CallGraph, NodeKind};
use crate::circuit::{measure, Circuit, Gate, GateBuf, Metrics};
use crate::domains::{Choice, ConstraintSet, Objective};
use crate::expr::{EmptyScope, Expr};
use crate::model::{flatten, Elaborated, FlatItem};
use crate::simulator::{apply, columns_distance_up_to_phase, StateVector};
use crate::solver::{Solution, SolveResult};
use crate::stdlib::{generate, variants_for, LibError};
use num_complex::Complex64;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fmt::Write;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EmitError {
    #[error("node `{0}` has no gate-level implementation")]
    Opaque(String),
    #[error("node `{node}` refers to {choice}, which is not a library variant")]
    BadChoice { node: String, choice: String },
    #[error("logical qubit {0} has no physical assignment")]
    Unmapped(usize),
    #[error("node `{node}`: {err}")]
    Library { node: String, err: LibError },
}

/// Concatenates the chosen implementations in placement order over the
/// solution's physical qubits.
pub fn emit(graph: &CallGraph, sol: &Solution) -> Result<Circuit, EmitError> {
    let mut c = Circuit::new(sol.width);
    for p in &sol.placements {
        let node = &graph.nodes[p.node];
        let NodeKind::Lib(op) = &node.kind else { return Err(EmitError::Opaque(node.label.clone())) };
        let Choice::Impl(v) = p.tuple.choice else {
            return Err(EmitError::BadChoice { node: node.label.clone(), choice: p.tuple.choice.to_string() });
        };
        let phys_of = |q: usize| sol.phys_of.get(q).copied().flatten();
        if let Some(q) = op.operands().into_iter().find(|&q| phys_of(q).is_none()) {
            return Err(EmitError::Unmapped(q));
        }
        let phys = op.map_qubits(|q| phys_of(q).unwrap());
        let gates = generate(&phys, v, &p.aux).map_err(|err| EmitError::Library { node: node.label.clone(), err })?;
        c.gates.extend(gates);
    }
    Ok(c)
}

/// The model's semantics with every library call in its zero-aux form,
/// over logical qubit ids.
pub fn reference_circuit(
    el: &Elaborated,
    choices: &BTreeMap<String, usize>,
) -> Result<Circuit, crate::model::ModelError> {
    let mut items = Vec::new();
    let mut choose = |site: &str, n: usize| choices.get(site).copied().or(if n == 1 { Some(0) } else { None });
    flatten(&el.body, &mut choose, &mut items)?;
    let mut c = Circuit::new(el.num_logical);
    for it in items {
        if let FlatItem::Op(op) = it {
            let v = variants_for(op.shape())[0];
            c.gates.extend(generate(&op, v, &[]).expect("zero-aux variant always applies"));
        }
    }
    Ok(c)
}

/// Largest amplitude error, up to one global phase, between the emitted
/// circuit and the reference on every basis state of the declared qubits
/// with everything else starting in |0>. Locals freed by the model must end
/// clean in the reference; live locals are compared at their physical slot.
pub fn equivalence_error(el: &Elaborated, graph: &CallGraph, sol: &Solution, circuit: &Circuit) -> Result<f64, String> {
    let reference = reference_circuit(el, &sol.choices).map_err(|e| e.to_string())?;
    let f = el.num_functional;
    let width = sol.width.max(f);
    let live = live_locals(graph, sol);
    let mut got = Vec::new();
    let mut want = Vec::new();
    for k in 0..(1usize << f) {
        let r = apply(&reference, &StateVector::basis(el.num_logical, k).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let mut mapped = vec![Complex64::new(0.0, 0.0); 1 << width];
        for (i, a) in r.amps.iter().enumerate() {
            if a.norm() < 1e-12 {
                continue;
            }
            let mut j = i & ((1 << f) - 1);
            for q in f..el.num_logical {
                if i >> q & 1 == 1 {
                    match live.get(&q) {
                        Some(&p) => j |= 1 << p,
                        None => return Err(format!("reference leaves freed qubit {} set", el.qubit_names[q])),
                    }
                }
            }
            mapped[j] += a;
        }
        want.push(mapped);
        got.push(
            apply(circuit, &StateVector::basis(width, k).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?.amps,
        );
    }
    Ok(columns_distance_up_to_phase(&want, &got))
}

/// Compares an arbitrary circuit against the model on the declared qubits.
/// Every qubit beyond them must start and end in |0>, so models that leave
/// locals allocated cannot be checked this way.
pub fn functional_error(el: &Elaborated, choices: &BTreeMap<String, usize>, circuit: &Circuit) -> Result<f64, String> {
    let reference = reference_circuit(el, choices).map_err(|e| e.to_string())?;
    let f = el.num_functional;
    let width = circuit.num_qubits.max(f);
    let low = 1usize << f;
    let mut got = Vec::new();
    let mut want = Vec::new();
    for k in 0..low {
        let r = apply(&reference, &StateVector::basis(el.num_logical, k).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        if r.amps[low..].iter().any(|a| a.norm() > 1e-9) {
            return Err("model leaves local qubits allocated".into());
        }
        let c = apply(circuit, &StateVector::basis(width, k).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        if c.amps[low..].iter().any(|a| a.norm() > 1e-9) {
            return Err(format!("circuit leaves auxiliary qubits dirty on input {k}"));
        }
        want.push(r.amps[..low].to_vec());
        got.push(c.amps[..low].to_vec());
    }
    Ok(columns_distance_up_to_phase(&want, &got))
}

/// Locals that are never released, with their physical slot.
fn live_locals(graph: &CallGraph, sol: &Solution) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    for p in &sol.placements {
        for &(l, ph) in &p.locals {
            out.insert(l, ph);
        }
    }
    for p in &sol.placements {
        for l in &graph.nodes[p.node].releases {
            out.remove(l);
        }
    }
    out
}

pub fn to_qasm(c: &Circuit) -> String {
    let mut s = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    let _ = writeln!(s, "qreg q[{}];", c.num_qubits);
    for g in &c.gates {
        let _ = match *g {
            Gate::H(q) => writeln!(s, "h q[{q}];"),
            Gate::X(q) => writeln!(s, "x q[{q}];"),
            Gate::Rz(t, q) => writeln!(s, "rz({t:?}) q[{q}];"),
            Gate::Cx(a, b) => writeln!(s, "cx q[{a}],q[{b}];"),
        };
    }
    s
}

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {msg}")]
pub struct QasmError {
    pub line: usize,
    pub msg: String,
}

/// Reads the OpenQASM 2.0 subset this crate writes, plus `cp`, which is
/// expanded into `rz` and `cx`.
pub fn parse_qasm(text: &str) -> Result<Circuit, QasmError> {
    let mut reg: Option<(String, usize)> = None;
    let mut b = GateBuf::new();
    let mut header = false;
    let body: String = text.lines().map(|l| l.split("//").next().unwrap_or("")).collect::<Vec<_>>().join("\n");
    let mut line = 1;
    for raw in body.split(';') {
        let at = line;
        line += raw.matches('\n').count();
        let stmt = raw.trim();
        let lead = raw.len() - raw.trim_start().len();
        let at = at + raw[..lead].matches('\n').count();
        let err = |msg: String| QasmError { line: at, msg };
        if stmt.is_empty() {
            continue;
        }
        let (head, rest) = stmt.split_once(char::is_whitespace).unwrap_or((stmt, ""));
        let rest = rest.trim();
        if !header {
            if head != "OPENQASM" || rest != "2.0" {
                return Err(err("expected `OPENQASM 2.0`".into()));
            }
            header = true;
            continue;
        }
        match head {
            "include" | "creg" | "barrier" => {}
            "qreg" => {
                let (name, n) = parse_ref(rest).ok_or_else(|| err(format!("bad register `{rest}`")))?;
                if reg.is_some() {
                    return Err(err("only one quantum register is supported".into()));
                }
                reg = Some((name, n));
            }
            _ => {
                let (name, param) = match head.split_once('(') {
                    Some((n, p)) => (n, Some(p)),
                    None => (head, None),
                };
                // A parameter list may contain spaces, so rejoin it.
                let (param, args) = match param {
                    Some(_) => {
                        let open = stmt.find('(').unwrap();
                        let close = stmt.rfind(')').ok_or_else(|| err("unclosed parameter list".into()))?;
                        (Some(stmt[open + 1..close].to_string()), stmt[close + 1..].trim().to_string())
                    }
                    None => (None, rest.to_string()),
                };
                let Some((rname, size)) = &reg else { return Err(err("gate before qreg".into())) };
                let mut qs = Vec::new();
                for a in args.split(',') {
                    let (n, i) = parse_ref(a.trim()).ok_or_else(|| err(format!("bad operand `{a}`")))?;
                    if &n != rname || i >= *size {
                        return Err(err(format!("operand `{}` out of range", a.trim())));
                    }
                    qs.push(i);
                }
                let angle = |p: &Option<String>| -> Result<f64, QasmError> {
                    let p = p.as_deref().ok_or_else(|| err(format!("`{name}` needs an angle")))?;
                    let e = Expr::parse(p).map_err(|e| err(e.to_string()))?;
                    e.eval(&EmptyScope).map_err(|e| err(e.to_string()))
                };
                let arity =
                    |n: usize| if qs.len() == n { Ok(()) } else { Err(err(format!("`{name}` takes {n} operands"))) };
                match name {
                    "h" => {
                        arity(1)?;
                        b.h(qs[0])
                    }
                    "x" => {
                        arity(1)?;
                        b.x(qs[0])
                    }
                    "rz" => {
                        arity(1)?;
                        b.rz(angle(&param)?, qs[0])
                    }
                    "cx" | "CX" => {
                        arity(2)?;
                        if qs[0] == qs[1] {
                            return Err(err("cx on a single qubit".into()));
                        }
                        b.cx(qs[0], qs[1])
                    }
                    "cp" | "cu1" => {
                        arity(2)?;
                        b.cphase(angle(&param)?, qs[0], qs[1])
                    }
                    other => return Err(err(format!("unsupported gate `{other}`"))),
                }
            }
        }
    }
    if !header {
        return Err(QasmError { line: 1, msg: "missing header".into() });
    }
    let n = reg.map(|r| r.1).unwrap_or(0);
    Ok(Circuit::from_gates(n, b.gates))
}

fn parse_ref(s: &str) -> Option<(String, usize)> {
    let (name, rest) = s.split_once('[')?;
    let idx = rest.strip_suffix(']')?.trim().parse().ok()?;
    Some((name.trim().to_string(), idx))
}

/// Everything the report needs besides the solver output.
pub struct ReportInput<'a> {
    pub result: &'a SolveResult,
    pub metrics: Option<Metrics>,
    pub constraints: &'a ConstraintSet,
    pub objective: Objective,
    pub seed: u64,
}

/// Solution report. Contains no timings so identical inputs give
/// identical bytes.
pub fn report_json(r: &ReportInput) -> Value {
    let res = r.result;
    let mut out = json!({
        "status": res.status,
        "optimal": res.optimal(),
        "objective": r.objective.name(),
        "constraints": r.constraints,
        "seed": r.seed,
    });
    if let (Some(sol), Some(m)) = (&res.solution, r.metrics) {
        let nodes: Vec<Value> = sol
            .placements
            .iter()
            .enumerate()
            .map(|(i, p)| {
                json!({
                    "index": i,
                    "node": p.node,
                    "label": p.label,
                    "variant": p.tuple.choice.to_string(),
                    "aux": p.aux,
                    "locals": p.locals.iter().map(|(_, ph)| ph).collect::<Vec<_>>(),
                    "start": p.start,
                    "end": p.end,
                    "cx": p.tuple.counts.cx,
                    "single": p.tuple.counts.single,
                })
            })
            .collect();
        let reuse: Vec<Value> = sol
            .placements
            .iter()
            .flat_map(|p| {
                p.reused.iter().map(move |e| json!({"consumer": p.node, "producer": e.producer, "qubit": e.qubit}))
            })
            .collect();
        out["metrics"] = json!({"width": m.width, "depth": m.depth, "cx": m.counts.cx, "single": m.counts.single});
        out["allocated_qubits"] = json!(sol.width);
        out["scheduled_depth"] = json!(sol.scheduled_depth);
        out["objective_value"] = json!(crate::solver::objective_value(r.objective, m.width, m.depth, m.counts));
        out["choices"] = json!(sol.choices);
        out["nodes"] = Value::Array(nodes);
        out["reuse"] = Value::Array(reuse);
    }
    out["counters"] = serde_json::to_value(&res.stats).unwrap();
    out["seeds"] = Value::Array(res.seeds.iter().map(|(s, v)| json!({"strategy": s.name(), "value": v})).collect());
    out
}

/// Emits and measures a solution.
pub fn materialize(graph: &CallGraph, sol: &Solution) -> Result<(Circuit, Metrics), EmitError> {
    let c = emit(graph, sol)?;
    let m = measure(&c);
    Ok((c, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::callgraph::{lower_to_graph, LowerOptions};
    use crate::circuit::GateClass;
    use crate::model::{elaborate, parse_model};
    use crate::solver::{solve, SolveOptions};
    use crate::stdlib::LibOp;

    #[test]
    fn single_h() {
        let mut g = CallGraph::new(1);
        g.add_lib(LibOp::H { q: 0 });
        g.finish().unwrap();
        let r = solve(&g, &ConstraintSet::default(), Objective::None, &SolveOptions::default());
        let (c, m) = materialize(&g, r.solution.as_ref().unwrap()).unwrap();
        assert_eq!(c.gates, vec![Gate::H(0)]);
        assert_eq!((m.width, m.depth, m.counts.single), (1, 1, 1));
        assert!(to_qasm(&c).ends_with("qreg q[1];\nh q[0];\n"));
    }

    #[test]
    fn empty_qasm() {
        assert_eq!(to_qasm(&Circuit::new(2)), "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[2];\n");
    }

    #[test]
    fn toffoli_round_trip() {
        let mut b = GateBuf::new();
        b.toffoli(0, 1, 2);
        let c = Circuit::from_gates(3, b.gates);
        let text = to_qasm(&c);
        assert_eq!(text.matches("\ncx ").count(), 6);
        let back = parse_qasm(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(measure(&back), measure(&c));
    }

    #[test]
    fn qasm_accepts_pi_and_cp() {
        let c = parse_qasm(
            "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[2];\nrz(pi / 2) q[0]; // note\ncp(pi) q[0], q[1];\n",
        )
        .unwrap();
        assert_eq!(c.gates.len(), 6);
        assert!(matches!(c.gates[0], Gate::Rz(t, 0) if (t - std::f64::consts::FRAC_PI_2).abs() < 1e-15));
    }

    #[test]
    fn qasm_errors() {
        assert!(parse_qasm("qreg q[1];").is_err());
        let e = parse_qasm("OPENQASM 2.0;\nqreg q[1];\nh q[3];\n").unwrap_err();
        assert!(e.msg.contains("out of range"));
        assert!(parse_qasm("OPENQASM 2.0;\nqreg q[2];\nccx q[0],q[1];").is_err());
    }

    #[test]
    fn increment_emits_plus_one() {
        let m = parse_model(include_str!("../fixtures/listing1_increment.json")).unwrap();
        let el = elaborate(&m).unwrap();
        let g = lower_to_graph(&el, LowerOptions::default()).unwrap();
        let r = solve(&g, &ConstraintSet::default(), Objective::Count(GateClass::Cx), &SolveOptions::default());
        let sol = r.solution.unwrap();
        let (c, m) = materialize(&g, &sol).unwrap();
        assert_eq!(m.counts, sol.counts);
        assert!(m.depth <= sol.scheduled_depth);
        for k in 0..8 {
            let out = apply(&c, &StateVector::basis(c.num_qubits, k).unwrap()).unwrap();
            let want = (k + 1) % 8;
            assert!((out.amps[want].norm() - 1.0).abs() < 1e-9, "{k}");
        }
        assert!(equivalence_error(&el, &g, &sol, &c).unwrap() < 1e-9);
    }

    #[test]
    fn report_is_stable() {
        let m = parse_model(include_str!("../fixtures/listing1_increment.json")).unwrap();
        let g = lower_to_graph(&elaborate(&m).unwrap(), LowerOptions::default()).unwrap();
        let cons = ConstraintSet { max_width: Some(4), ..Default::default() };
        let obj = Objective::Count(GateClass::Cx);
        let run = || {
            let r = solve(&g, &cons, obj, &SolveOptions::default());
            let (_, m) = materialize(&g, r.solution.as_ref().unwrap()).unwrap();
            let input = ReportInput { result: &r, metrics: Some(m), constraints: &cons, objective: obj, seed: 0 };
            serde_json::to_string_pretty(&report_json(&input)).unwrap()
        };
        let a = run();
        assert_eq!(a, run());
        let v: Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["optimal"], true);
        assert!(v["metrics"]["width"].as_u64().unwrap() <= 4);
    }
}

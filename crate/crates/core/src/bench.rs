//! The two experiment families as models, sweeps over them, and the
//! fixed-implementation baseline.

use crate::callgraph::{CallGraph, NodeKind};
use crate::domains::{ConstraintSet, Objective};
use crate::model::{parse_model, Model};
use crate::solver::{SolveOptions, Status};
use crate::stdlib::variants_for;
use crate::synth::{build_graph, synthesize_graph, SynthError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use std::time::{Duration, Instant};

fn increment_defs() -> Value {
    json!({
        "my_mcx": {
            "params": [{"name": "x", "kind": "qnum"}, {"name": "y", "kind": "qubit"}],
            "body": [{"control": "x", "value": "(2**x.size)-1", "body": [{"gate": "X", "args": ["y"]}]}]
        },
        "increment": {
            "params": [{"name": "x", "kind": "qubit_array"}],
            "body": [
                {"repeat": "x.len - 1", "var": "i", "body": [
                    {"call": "my_mcx", "args": ["x[0:(x.len - 1) - i]", "x[(x.len - 1) - i]"]}
                ]},
                {"gate": "X", "args": ["x[0]"]}
            ]
        }
    })
}

fn model_from(functions: Value, variables: Value) -> Model {
    let text = json!({"functions": functions, "entry": "main", "variables": variables});
    parse_model(&text.to_string()).expect("benchmark model is valid")
}

/// One step of the walk on a circle of `2^n` nodes: coin flip, then
/// increment when the coin is 0 and decrement when it is 1.
pub fn build_walk_model(n: usize) -> Model {
    assert!(n >= 1);
    let mut f = increment_defs();
    f["single_step"] = json!({
        "params": [{"name": "coin", "kind": "qubit"}, {"name": "x", "kind": "qnum"}],
        "body": [
            {"gate": "H", "args": ["coin"]},
            {"control": "coin", "value": 0, "body": [{"call": "increment", "args": ["x"]}]},
            {"control": "coin", "value": 1, "body": [{"invert": [{"call": "increment", "args": ["x"]}]}]}
        ]
    });
    f["main"] = json!({"body": [{"call": "single_step", "args": ["coin", "x"]}]});
    model_from(f, json!({"coin": 1, "x": n}))
}

fn block_encoding_defs() -> Value {
    json!({
        "be_amat0": {
            "params": [{"name": "data", "kind": "qubit_array"}, {"name": "block", "kind": "qubit_array", "width": 2}],
            "body": [
                {"let": "select", "be": "block[0]"},
                {"let": "del_qubit", "be": "block[1]"},
                {"let": "packed", "be": ["data", "del_qubit"]},
                {"within": [{"call": "hadamard_transform", "args": ["select"]}], "apply": [
                    {"control": "select", "value": 0, "body": [{"call": "add_const", "args": [2, "packed"]}]},
                    {"call": "add_const", "args": [-1, "packed"]}
                ]}
            ]
        },
        "be_projection": {
            "params": [{"name": "x", "kind": "qubit_array"}, {"name": "aux", "kind": "qubit"}],
            "body": [
                {"within": [{"gate": "H", "args": ["aux"]}], "apply": [
                    {"control": "aux", "value": 0, "body": [{"call": "reflect_about_zero", "args": ["x"]}]}
                ]}
            ]
        },
        "be_amat": {
            "params": [{"name": "data", "kind": "qubit_array"}, {"name": "block", "kind": "qubit_array", "width": 3}],
            "body": [
                {"call": "be_amat0", "args": ["data", "block[0:2]"]},
                {"call": "be_projection", "args": ["data", "block[2]"]}
            ]
        },
        "my_projector_controlled_phase": {
            "params": [{"name": "phase", "kind": "real"}, {"name": "block", "kind": "qnum"}, {"name": "aux", "kind": "qubit"}],
            "body": [
                {"control": "block", "value": 0, "body": [{"gate": "X", "args": ["aux"]}]},
                {"gate": "RZ", "args": ["phase", "aux"]},
                {"control": "block", "value": 0, "body": [{"gate": "X", "args": ["aux"]}]}
            ]
        }
    })
}

/// The block encoding of the tridiagonal matrix on `n` data qubits, plus
/// the extra one-qubit variable `s` put in superposition.
pub fn build_block_encoding_model(n: usize) -> Model {
    assert!(n >= 2);
    let mut f = block_encoding_defs();
    f["main"] = json!({"body": [
        {"gate": "H", "args": ["s"]},
        {"call": "be_amat", "args": ["data", "block"]}
    ]});
    model_from(f, json!({"data": n, "block": 3, "s": 1}))
}

/// QSVT with `phases.len() - 1` applications of the block encoding,
/// alternating with its inverse. In time order the circuit is
/// `R(p0) U R(p1) U' R(p2) U ... R(pd)` where `R(p)` multiplies the
/// block-zero subspace by `e^{ip}` and the rest by `e^{-ip}`.
pub fn build_qsvt_model(n: usize, phases: &[f64]) -> Model {
    let degree = phases.len().saturating_sub(1);
    assert!(degree % 2 == 1, "degree must be odd");
    let mut body = Vec::new();
    let rot =
        |p: f64| json!({"call": "my_projector_controlled_phase", "args": [format!("{:?}", 2.0 * p), "block", "aux"]});
    let u = json!({"call": "be_amat", "args": ["data", "block"]});
    body.push(rot(phases[0]));
    for (j, &p) in phases.iter().enumerate().skip(1) {
        if j % 2 == 1 {
            body.push(u.clone());
        } else {
            body.push(json!({"invert": [u.clone()]}));
        }
        body.push(rot(p));
    }
    let mut f = block_encoding_defs();
    f["main"] = json!({"body": body});
    model_from(f, json!({"data": n, "block": 3, "aux": 1}))
}

/// `degree + 1` phases drawn uniformly from `[0, 2pi)`.
pub fn random_phases(degree: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..=degree).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Walk,
    Qsvt,
    BlockEncoding,
}

impl Family {
    pub fn parse(s: &str) -> Option<Family> {
        match s {
            "walk" => Some(Family::Walk),
            "qsvt" => Some(Family::Qsvt),
            "block-encoding" | "block_encoding" | "be" => Some(Family::BlockEncoding),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Walk => "walk",
            Family::Qsvt => "qsvt",
            Family::BlockEncoding => "block-encoding",
        }
    }

    pub fn build(self, n: usize, degree: usize, seed: u64) -> Model {
        match self {
            Family::Walk => build_walk_model(n),
            Family::Qsvt => build_qsvt_model(n, &random_phases(degree, seed)),
            Family::BlockEncoding => build_block_encoding_model(n),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub family: Family,
    pub ns: Vec<usize>,
    pub widths: Vec<Option<usize>>,
    pub objective: Objective,
    pub timeout: Duration,
    pub seed: u64,
    pub degree: usize,
    /// Force every library call to its zero-aux implementation.
    pub baseline: bool,
    pub jobs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub family: String,
    pub n: usize,
    pub max_width: Option<usize>,
    pub objective: String,
    pub width: Option<usize>,
    pub depth: Option<usize>,
    pub cx: Option<u64>,
    pub gen_time_ms: u128,
    pub optimal: bool,
    pub timeout: bool,
}

pub const CSV_HEADER: &str = "family,N,max_width,objective,width,depth,cx,gen_time_ms,optimal,timeout";

impl SweepRow {
    pub fn csv(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.family,
            self.n,
            opt(self.max_width.map(|w| w.to_string())),
            self.objective,
            opt(self.width.map(|w| w.to_string())),
            opt(self.depth.map(|w| w.to_string())),
            opt(self.cx.map(|w| w.to_string())),
            self.gen_time_ms,
            self.optimal,
            self.timeout
        )
    }
}

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv());
        s.push('\n');
    }
    s
}

/// Keeps only the zero-aux implementation of every library node.
pub fn restrict_to_zero_aux(g: &mut CallGraph) {
    for node in &mut g.nodes {
        if let NodeKind::Lib(op) = &node.kind {
            let v = variants_for(op.shape())[0];
            node.options.retain(|t| t.choice == crate::domains::Choice::Impl(v));
        }
    }
}

/// Synthesizes one point of a sweep.
pub fn run_point(spec: &SweepSpec, n: usize, max_width: Option<usize>) -> Result<SweepRow, SynthError> {
    let model = spec.family.build(n, spec.degree, spec.seed);
    let t0 = Instant::now();
    let (el, mut graph) = build_graph(&model)?;
    if spec.baseline {
        restrict_to_zero_aux(&mut graph);
    }
    let cons = ConstraintSet { max_width, ..Default::default() };
    let opts = SolveOptions { seed: spec.seed, timeout: Some(spec.timeout), ..Default::default() };
    let s = synthesize_graph(el, graph, &cons, spec.objective, &opts)?;
    let ms = t0.elapsed().as_millis();
    let family =
        if spec.baseline { format!("{}-baseline", spec.family.name()) } else { spec.family.name().to_string() };
    let st = s.result.status;
    Ok(SweepRow {
        family,
        n,
        max_width,
        objective: spec.objective.name().to_string(),
        width: s.metrics.map(|m| m.width),
        depth: s.metrics.map(|m| m.depth),
        cx: s.metrics.map(|m| m.counts.cx),
        gen_time_ms: ms,
        optimal: st == Status::Optimal,
        timeout: matches!(st, Status::Feasible | Status::Unknown),
    })
}

/// One row per (N, width) in that order; rows run on `spec.jobs` threads
/// but the output order is fixed.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, SynthError> {
    let points: Vec<(usize, Option<usize>)> =
        spec.ns.iter().flat_map(|&n| spec.widths.iter().map(move |&w| (n, w))).collect();
    let jobs = spec.jobs.max(1).min(points.len().max(1));
    let mut slots: Vec<Option<Result<SweepRow, SynthError>>> = (0..points.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let chunks: Vec<Vec<usize>> = (0..jobs).map(|j| (j..points.len()).step_by(jobs).collect()).collect();
        let handles: Vec<_> = chunks
            .into_iter()
            .map(|idx| {
                let points = &points;
                scope.spawn(move || {
                    idx.into_iter().map(|i| (i, run_point(spec, points[i].0, points[i].1))).collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("sweep worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    slots.into_iter().map(|r| r.unwrap()).collect()
}

/// Zero-aux sweep of the same points, minimizing CX.
pub fn run_baseline(spec: &SweepSpec) -> Result<Vec<SweepRow>, SynthError> {
    run_sweep(&SweepSpec { baseline: true, ..spec.clone() })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

//! End-to-end acceptance run: one PASS/FAIL line per criterion.

mod common;

use common::*;
use qsynth::bench::*;
use qsynth::callgraph::{CallGraph, NodeKind};
use qsynth::circuit::{GateClass, GateCounts};
use qsynth::domains::{propagate, Choice, ConstraintSet, Domains, Objective, PropResult, PropState, ResourceTuple};
use qsynth::emitter::{report_json, to_qasm, ReportInput};
use qsynth::reuse::{nondominated_choices, AuxPool, PoolEntry};
use qsynth::simulator::columns_distance_up_to_phase;
use qsynth::solver::{solve, Search, SolveOptions, Status, Strategy};
use qsynth::stdlib::{LibOp, Variant};
use qsynth::synth::{synthesize, Synthesis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const CX: Objective = Objective::Count(GateClass::Cx);

fn width(w: usize) -> ConstraintSet {
    ConstraintSet { max_width: Some(w), ..Default::default() }
}

fn run(model: &qsynth::model::Model, cons: &ConstraintSet, obj: Objective) -> Result<Synthesis, String> {
    let opts = SolveOptions { timeout: Some(Duration::from_secs(600)), ..Default::default() };
    let s = synthesize(model, cons, obj, &opts).map_err(|e| e.to_string())?;
    if s.circuit.is_none() {
        return Err(format!("no solution: {:?}", s.result.status));
    }
    Ok(s)
}

fn within(t0: Instant, limit: Duration) -> Result<(), String> {
    let e = t0.elapsed();
    if e > limit {
        Err(format!("took {e:?}, limit {limit:?}"))
    } else {
        Ok(())
    }
}

fn functional_equivalence() -> Outcome {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    for n in 2..=6 {
        for (cons, obj) in [
            (ConstraintSet::default(), Objective::Width),
            (width(2 * n + 3), CX),
            (ConstraintSet::default(), Objective::Depth),
        ] {
            let s = run(&build_walk_model(n), &cons, obj)?;
            let cols = functional_columns(s.circuit.as_ref().unwrap(), n + 1)?;
            let d = columns_distance_up_to_phase(&walk_columns(n), &cols);
            if d > 1e-9 {
                return Err(format!("walk N={n} under {cons:?}/{}: distance {d:e}", obj.name()));
            }
            worst = worst.max(d);
        }
    }
    let phases = random_phases(3, 2024);
    let s = run(&build_qsvt_model(2, &phases), &ConstraintSet::default(), CX)?;
    let cols = functional_columns(s.circuit.as_ref().unwrap(), 6)?;
    let want = qsvt_degree3(&amat(2), &phases)?;
    let dq = distance_up_to_phase(&want, &top_left_block(&cols, 2));
    if dq > 1e-6 {
        return Err(format!("qsvt N=2 block distance {dq:e}"));
    }
    within(t0, Duration::from_secs(60))?;
    Ok(format!("walk N=2..6 max error {worst:.1e}; qsvt N=2 block error {dq:.1e}"))
}

fn flexibility_effect() -> Outcome {
    let t0 = Instant::now();
    let m = build_walk_model(5);
    let a = run(&m, &width(10), CX)?.metrics.unwrap();
    let b = run(&m, &ConstraintSet::default(), Objective::Width)?.metrics.unwrap();
    let aux = a.width - 6;
    let msg =
        format!("min-cx@10: width {} cx {}; min-width: width {} cx {}", a.width, a.counts.cx, b.width, b.counts.cx);
    within(t0, Duration::from_secs(30))?;
    if a.counts.cx < b.counts.cx && aux > 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Variants picked for the adders, in placement order.
fn adder_variants(s: &Synthesis) -> Vec<(Choice, usize)> {
    let sol = s.result.solution.as_ref().unwrap();
    sol.placements
        .iter()
        .filter(|p| matches!(s.graph.nodes[p.node].kind, NodeKind::Lib(LibOp::AddConst { .. })))
        .map(|p| (p.tuple.choice, p.aux.len()))
        .collect()
}

fn adder_selection() -> Outcome {
    let t0 = Instant::now();
    let m = build_block_encoding_model(20);
    let tight = run(&m, &width(45), CX)?;
    let loose = run(&m, &width(90), CX)?;
    let (mt, ml) = (tight.metrics.unwrap(), loose.metrics.unwrap());
    let (vt, vl) = (adder_variants(&tight), adder_variants(&loose));
    let msg = format!(
        "W=45: {} qubits cx {} adders {:?}; W=90: {} qubits cx {} adders {:?}",
        mt.width,
        mt.counts.cx,
        vt.iter().map(|v| v.0.to_string()).collect::<Vec<_>>(),
        ml.width,
        ml.counts.cx,
        vl.iter().map(|v| v.0.to_string()).collect::<Vec<_>>()
    );
    within(t0, Duration::from_secs(600))?;
    let qft = !vt.is_empty() && vt.iter().all(|&(c, aux)| c == Choice::Impl(Variant::Qft) && aux == 0);
    let ripple = !vl.is_empty() && vl.iter().all(|&(c, _)| c == Choice::Impl(Variant::Ripple));
    if qft && ripple && ml.counts.cx < mt.counts.cx {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn scaling() -> Outcome {
    let t0 = Instant::now();
    let spec = SweepSpec {
        family: Family::Walk,
        ns: (8..=40).step_by(4).collect(),
        widths: vec![Some(100)],
        objective: CX,
        timeout: Duration::from_secs(600),
        seed: 0,
        degree: 3,
        baseline: false,
        jobs: 4,
    };
    let slope = |rows: &[SweepRow]| -> Result<f64, String> {
        let pts = rows
            .iter()
            .map(|r| r.cx.map(|c| (r.n as f64, c as f64)).ok_or(format!("N={} has no solution", r.n)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(loglog_slope(&pts))
    };
    let flex = slope(&run_sweep(&spec).map_err(|e| e.to_string())?)?;
    let base = slope(&run_baseline(&spec).map_err(|e| e.to_string())?)?;
    within(t0, Duration::from_secs(20 * 60))?;
    let msg = format!("flexible slope {flex:.3}, zero-aux baseline slope {base:.3}");
    if (1.7..=2.4).contains(&flex) && base >= 2.7 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn solver_optimality() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut feasible = 0;
    for case in 0..200 {
        let inst = random_instance(&mut rng);
        let g = to_graph(&inst);
        let want = brute_force(&inst, &[]);
        let r = solve(&g, &inst.cons, inst.obj, &SolveOptions::default());
        let got = r.solution.as_ref().map(|s| s.value);
        let ok = match want {
            None => r.status == Status::Infeasible,
            Some(v) => r.status == Status::Optimal && (inst.obj == Objective::None || got == Some(v)),
        };
        if !ok {
            return Err(format!("case {case}: want {want:?}, got {:?} {got:?}", r.status));
        }
        feasible += want.is_some() as usize;
    }
    within(t0, Duration::from_secs(120))?;
    Ok(format!("200/200 match brute force ({feasible} feasible)"))
}

fn cx_node(g: &mut CallGraph, q: usize, cx: &[u64]) {
    let opts = cx
        .iter()
        .enumerate()
        .map(|(k, &c)| ResourceTuple {
            aux: 0,
            depth: 1,
            counts: GateCounts { cx: c, single: 0 },
            choice: Choice::Opaque(k),
        })
        .collect();
    g.add_opaque(&format!("f{q}"), &[q], opts);
}

fn arc_consistency() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut pruned = 0;
    for case in 0..200 {
        let inst = random_instance(&mut rng);
        let g = to_graph(&inst);
        let mut d = Domains::new(&g);
        let frontier = vec![0; g.num_logical];
        let st = PropState {
            graph: &g,
            order: &g.top,
            frontier: &frontier,
            committed: GateCounts::default(),
            allocated: g.num_functional,
        };
        propagate(&mut d, &st, &inst.cons, None);
        for n in 0..g.nodes.len() {
            for i in 0..g.nodes[n].options.len() {
                if !d.get(n).is_alive(i) {
                    pruned += 1;
                    if brute_force(&inst, &[(n, i)]).is_some() {
                        return Err(format!("case {case}: node {n} tuple {i} pruned but supported"));
                    }
                }
            }
        }
    }
    let mut g = CallGraph::new(2);
    cx_node(&mut g, 0, &[1500, 2000, 3000]);
    cx_node(&mut g, 1, &[1500, 2000, 3000]);
    g.finish().map_err(|e| e.to_string())?;
    let mut d = Domains::new(&g);
    let frontier = [0, 0];
    let st =
        PropState { graph: &g, order: &g.top, frontier: &frontier, committed: GateCounts::default(), allocated: 2 };
    let cons = ConstraintSet { max_cx: Some(3500), ..Default::default() };
    if propagate(&mut d, &st, &cons, None) != PropResult::Consistent {
        return Err("worked example reported inconsistent".into());
    }
    for n in 0..2 {
        let left: Vec<u64> = d.get(n).alive().map(|(_, t)| t.counts.cx).collect();
        if left != [1500, 2000] {
            return Err(format!("worked example left {left:?}"));
        }
    }
    within(t0, Duration::from_secs(120))?;
    Ok(format!("{pruned} pruned tuples all unsupported; {{1500,2000,3000}} with sum <= 3500 gives {{1500,2000}}"))
}

fn reuse_completeness() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..500 {
        let c = random_reuse_case(&mut rng);
        let (w, full) = (reuse_optimum(&c, true), reuse_optimum(&c, false));
        if w != full {
            return Err(format!("case {case}: windows {w:?} vs subsets {full:?} for {c:?}"));
        }
    }
    let mut pool = AuxPool::new();
    for (i, d) in [800, 440, 150].into_iter().enumerate() {
        pool.insert(PoolEntry { qubit: i, depth: d, producer: i });
    }
    let pairs: Vec<Vec<usize>> =
        nondominated_choices(&pool, 2).iter().map(|w| w.iter().map(|e| e.depth).collect()).collect();
    if pairs != [vec![440, 150], vec![800, 440]] {
        return Err(format!("{{800,440,150}} pairs: {pairs:?}"));
    }
    within(t0, Duration::from_secs(60))?;
    Ok(format!("500/500 windows reach the subset optimum; pairs {pairs:?}"))
}

fn reducer() -> Outcome {
    let mut g = CallGraph::new(40);
    for k in 0..10 {
        g.add_lib(LibOp::Mcx { controls: vec![4 * k, 4 * k + 1, 4 * k + 2], target: 4 * k + 3 });
    }
    g.finish().map_err(|e| e.to_string())?;
    let cons = width(60);
    let capped = SolveOptions { enumerate_all: true, max_decisions: Some(20_000), ..Default::default() };
    let red = solve(&g, &cons, CX, &capped);
    let plain = solve(&g, &cons, CX, &SolveOptions { reduce: false, ..capped.clone() });
    let a = solve(&g, &cons, CX, &SolveOptions::default());
    let b = solve(&g, &cons, CX, &SolveOptions { reduce: false, ..Default::default() });
    let (sa, sb) = (a.solution.ok_or("no reduced solution")?, b.solution.ok_or("no plain solution")?);
    let msg = format!(
        "orderings explored: {} reduced, {} plain (capped); optimum cx {} vs {}",
        red.stats.orderings_explored, plain.stats.orderings_explored, sa.counts.cx, sb.counts.cx
    );
    let same = (sa.width, sa.scheduled_depth, sa.counts) == (sb.width, sb.scheduled_depth, sb.counts);
    if red.stats.orderings_explored == 1 && plain.stats.orderings_explored >= 10 && same {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn synth_bytes(seed: u64) -> Result<(String, String), String> {
    let m = build_walk_model(5);
    let cons = width(10);
    let opts = SolveOptions {
        seed,
        strategies: Some(vec![Strategy::Random, Strategy::GreedyReuse]),
        record_log: true,
        ..Default::default()
    };
    let s = synthesize(&m, &cons, CX, &opts).map_err(|e| e.to_string())?;
    let report =
        report_json(&ReportInput { result: &s.result, metrics: s.metrics, constraints: &cons, objective: CX, seed });
    let log = serde_json::to_string(&s.result.log).unwrap();
    Ok((to_qasm(s.circuit.as_ref().ok_or("no circuit")?), format!("{report}{log}")))
}

/// Random descent with checkpoints; every restore must reproduce the
/// fingerprint taken when the checkpoint was made.
fn journal_cycles(g: &CallGraph, cons: ConstraintSet, rng: &mut ChaCha8Rng, cycles: usize) -> Result<(), String> {
    let mut s = Search::new(g, cons, CX, SolveOptions::default());
    let mut stack = vec![(s.checkpoint(), s.fingerprint())];
    for c in 0..cycles {
        let cand = s.candidates();
        let descend = !cand.is_empty() && (stack.len() == 1 || rng.gen_bool(0.6));
        if descend {
            stack.push((s.checkpoint(), s.fingerprint()));
            let n = cand[rng.gen_range(0..cand.len())];
            if g.nodes[n].is_composite() {
                s.expand(n, rng.gen_range(0..g.nodes[n].alts().len()));
            } else {
                let alive = s.doms.get(n).alive_indices();
                if alive.is_empty() {
                    continue;
                }
                let ti = alive[rng.gen_range(0..alive.len())];
                s.assign(n, ti);
                let t = g.nodes[n].options[ti];
                if let Some((lo, hi)) = s.reuse_range(n, &t) {
                    let ws = s.windows(rng.gen_range(lo..=hi));
                    let w = ws[rng.gen_range(0..ws.len())].clone();
                    s.place(n, &w);
                }
            }
            s.propagate();
        } else {
            let (cp, f) = stack.pop().unwrap();
            s.restore(&cp);
            if s.fingerprint() != f {
                return Err(format!("cycle {c}: fingerprint differs after restore"));
            }
        }
    }
    while let Some((cp, f)) = stack.pop() {
        s.restore(&cp);
        if s.fingerprint() != f {
            return Err("final unwinding: fingerprint differs".into());
        }
    }
    Ok(())
}

fn determinism() -> Outcome {
    let a = synth_bytes(42)?;
    let b = synth_bytes(42)?;
    if a != b {
        return Err("two runs with seed 42 differ".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (_, walk) = qsynth::synth::build_graph(&build_walk_model(4)).map_err(|e| e.to_string())?;
    journal_cycles(&walk, width(12), &mut rng, 500)?;
    let mut done = 500;
    while done < 1000 {
        let inst = random_instance(&mut rng);
        journal_cycles(&to_graph(&inst), inst.cons, &mut rng, 50)?;
        done += 50;
    }
    Ok(format!("identical QASM, report and log over two runs; {done} decide/propagate/undo cycles restored exactly"))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("functional equivalence", functional_equivalence),
        ("implementation flexibility", flexibility_effect),
        ("adder selection", adder_selection),
        ("scaling", scaling),
        ("solver optimality", solver_optimality),
        ("arc consistency", arc_consistency),
        ("reuse completeness", reuse_completeness),
        ("graph reducer", reducer),
        ("determinism and journal", determinism),
    ];
    let mut failed = vec![];
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let r = f();
        let secs = t0.elapsed().as_secs_f64();
        match r {
            Ok(msg) => println!("PASS {} {name} ({secs:.1}s): {msg}", i + 1),
            Err(msg) => {
                println!("FAIL {} {name} ({secs:.1}s): {msg}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

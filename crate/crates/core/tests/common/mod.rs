//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use qsynth::callgraph::CallGraph;
use qsynth::circuit::{GateClass, GateCounts};
use qsynth::domains::{Choice, ConstraintSet, Objective, ResourceTuple};
use rand::Rng;

/// A small abstract instance: nodes in program order on shared wires.
#[derive(Clone, Debug)]
pub struct Instance {
    pub functional: usize,
    pub nodes: Vec<(Vec<usize>, Vec<ResourceTuple>)>,
    pub cons: ConstraintSet,
    pub obj: Objective,
}

pub fn random_instance(rng: &mut impl Rng) -> Instance {
    let functional = rng.gen_range(1..=3);
    let n = rng.gen_range(1..=4);
    let mut nodes = Vec::new();
    for _ in 0..n {
        let mut qs: Vec<usize> = (0..functional).filter(|_| rng.gen_bool(0.5)).collect();
        if qs.is_empty() {
            qs.push(rng.gen_range(0..functional));
        }
        let m = rng.gen_range(1..=3);
        let tuples = (0..m)
            .map(|k| ResourceTuple {
                aux: rng.gen_range(0..=2),
                depth: rng.gen_range(1..=4),
                counts: GateCounts { cx: rng.gen_range(0..=10), single: rng.gen_range(0..=5) },
                choice: Choice::Opaque(k),
            })
            .collect();
        nodes.push((qs, tuples));
    }
    let cons = ConstraintSet {
        max_width: rng.gen_bool(0.5).then(|| functional + rng.gen_range(0..=4)),
        max_depth: rng.gen_bool(0.5).then(|| rng.gen_range(2..=12)),
        max_cx: rng.gen_bool(0.4).then(|| rng.gen_range(3..=30)),
        max_single: rng.gen_bool(0.2).then(|| rng.gen_range(2..=15)),
    };
    let obj = match rng.gen_range(0..5) {
        0 => Objective::None,
        1 => Objective::Width,
        2 => Objective::Depth,
        3 => Objective::Count(GateClass::Cx),
        _ => Objective::Count(GateClass::Single),
    };
    Instance { functional, nodes, cons, obj }
}

pub fn to_graph(inst: &Instance) -> CallGraph {
    let mut g = CallGraph::new(inst.functional);
    for (i, (qs, ts)) in inst.nodes.iter().enumerate() {
        g.add_opaque(&format!("n{i}"), qs, ts.clone());
    }
    g.finish().unwrap();
    g
}

#[derive(Clone)]
struct Bf {
    placed: Vec<bool>,
    frontier: Vec<usize>,
    pool: Vec<usize>,
    alloc: usize,
    depth: usize,
    counts: GateCounts,
}

fn value(obj: Objective, s: &Bf) -> u64 {
    match obj {
        Objective::None => 0,
        Objective::Width => s.alloc as u64,
        Objective::Depth => s.depth as u64,
        Objective::Count(c) => s.counts.get(c),
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize == k {
            out.push((0..n).filter(|i| mask & (1 << i) != 0).collect());
        }
    }
    out
}

/// Optimum over every topological order, every tuple, and every subset of
/// released qubits to reuse. `fixed` pins tuples of some nodes. `None` when
/// nothing satisfies the constraints.
pub fn brute_force(inst: &Instance, fixed: &[(usize, usize)]) -> Option<u64> {
    let s = Bf {
        placed: vec![false; inst.nodes.len()],
        frontier: vec![0; inst.functional],
        pool: vec![],
        alloc: inst.functional,
        depth: 0,
        counts: GateCounts::default(),
    };
    let mut best = None;
    go(inst, fixed, s, &mut best);
    best
}

fn go(inst: &Instance, fixed: &[(usize, usize)], s: Bf, best: &mut Option<u64>) {
    let n = inst.nodes.len();
    if s.placed.iter().all(|&p| p) {
        let c = &inst.cons;
        let ok = c.max_width.is_none_or(|w| s.alloc <= w)
            && c.max_depth.is_none_or(|d| s.depth <= d)
            && c.max_cx.is_none_or(|x| s.counts.cx <= x)
            && c.max_single.is_none_or(|x| s.counts.single <= x);
        if ok {
            let v = value(inst.obj, &s);
            *best = Some(best.map_or(v, |b: u64| b.min(v)));
        }
        return;
    }
    for i in 0..n {
        if s.placed[i] {
            continue;
        }
        // Earlier unplaced nodes sharing a wire must go first.
        let blocked = (0..i).any(|j| !s.placed[j] && inst.nodes[j].0.iter().any(|q| inst.nodes[i].0.contains(q)));
        if blocked {
            continue;
        }
        let (qs, ts) = &inst.nodes[i];
        for (ti, t) in ts.iter().enumerate() {
            if fixed.iter().any(|&(fi, ft)| fi == i && ft != ti) {
                continue;
            }
            let dep = qs.iter().map(|&q| s.frontier[q]).max().unwrap_or(0);
            for k in 0..=t.aux.min(s.pool.len()) {
                for sub in subsets(s.pool.len(), k) {
                    let mut nx = s.clone();
                    let start = sub.iter().map(|&j| s.pool[j]).max().unwrap_or(0).max(dep);
                    let end = start + t.depth;
                    nx.pool = (0..s.pool.len()).filter(|j| !sub.contains(j)).map(|j| s.pool[j]).collect();
                    nx.pool.extend(std::iter::repeat_n(end, t.aux));
                    nx.alloc += t.aux - k;
                    if inst.cons.max_width.is_some_and(|w| nx.alloc > w) {
                        continue;
                    }
                    for &q in qs {
                        nx.frontier[q] = end;
                    }
                    nx.depth = nx.depth.max(end);
                    nx.counts += t.counts;
                    nx.placed[i] = true;
                    go(inst, fixed, nx, best);
                }
            }
        }
    }
}

pub type C = num_complex::Complex64;

/// Columns of `circuit` for every functional basis input, restricted to the
/// functional subspace. Fails if any aux amplitude is left behind.
pub fn functional_columns(circuit: &qsynth::circuit::Circuit, functional: usize) -> Result<Vec<Vec<C>>, String> {
    use qsynth::simulator::{apply, StateVector};
    let width = circuit.num_qubits.max(functional);
    let mut cols = Vec::new();
    for k in 0..1usize << functional {
        let out =
            apply(circuit, &StateVector::basis(width, k).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let leak: f64 = out.amps[1 << functional..].iter().map(|a| a.norm_sqr()).sum();
        if leak > 1e-18 {
            return Err(format!("aux not returned to zero for input {k}: leak {leak:e}"));
        }
        cols.push(out.amps[..1 << functional].to_vec());
    }
    Ok(cols)
}

/// One walk step on a circle of `2^n` nodes, coin at bit 0 and position in
/// bits `1..=n`: coin Hadamard, then `x+1` on coin 0 and `x-1` on coin 1.
pub fn walk_columns(n: usize) -> Vec<Vec<C>> {
    let m = 1usize << n;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut cols = Vec::new();
    for k in 0..2 * m {
        let (c, x) = (k & 1, k >> 1);
        let mut col = vec![C::new(0.0, 0.0); 2 * m];
        col[2 * ((x + 1) % m)] += s;
        col[1 + 2 * ((x + m - 1) % m)] += if c == 0 { s } else { -s };
        cols.push(col);
    }
    cols
}

pub type Mat = Vec<Vec<C>>;

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let m = b[0].len();
    (0..n).map(|i| (0..m).map(|j| (0..b.len()).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
}

pub fn adjoint(a: &Mat) -> Mat {
    (0..a[0].len()).map(|j| (0..a.len()).map(|i| a[i][j].conj()).collect()).collect()
}

/// The tridiagonal test matrix: zero first row, 0.5 on both off-diagonals
/// of every other row.
pub fn amat(n: usize) -> Mat {
    let m = 1usize << n;
    let mut a = vec![vec![C::new(0.0, 0.0); m]; m];
    for (i, row) in a.iter_mut().enumerate().skip(1) {
        row[i - 1] = C::new(0.5, 0.0);
        if i + 1 < m {
            row[i + 1] = C::new(0.5, 0.0);
        }
    }
    a
}

/// `[e^{i p_d Z} W(x) ... W(x) e^{i p_0 Z}]_{00}` with the reflection
/// signal `W(x) = [[x, s], [s, -x]]`.
pub fn qsvt_scalar(phases: &[f64], x: f64) -> C {
    let s = (1.0 - x * x).sqrt();
    let w = [[C::new(x, 0.0), C::new(s, 0.0)], [C::new(s, 0.0), C::new(-x, 0.0)]];
    let rot = |p: f64| [C::from_polar(1.0, p), C::from_polar(1.0, -p)];
    let mut v = [C::new(1.0, 0.0), C::new(0.0, 0.0)];
    let r = rot(phases[0]);
    v = [v[0] * r[0], v[1] * r[1]];
    for &p in &phases[1..] {
        v = [w[0][0] * v[0] + w[0][1] * v[1], w[1][0] * v[0] + w[1][1] * v[1]];
        let r = rot(p);
        v = [v[0] * r[0], v[1] * r[1]];
    }
    v[0]
}

/// Singular-value transform of `a` by the degree-3 odd polynomial defined
/// by `phases`, fitted as `c1 x + c3 x^3` from the scalar recursion.
pub fn qsvt_degree3(a: &Mat, phases: &[f64]) -> Result<Mat, String> {
    assert_eq!(phases.len(), 4);
    let (x1, x2) = (0.3, 0.8);
    let (p1, p2) = (qsvt_scalar(phases, x1), qsvt_scalar(phases, x2));
    // p = c1 x + c3 x^3, solved by Cramer's rule.
    let det = x1 * x2.powi(3) - x2 * x1.powi(3);
    let c1 = (p1 * x2.powi(3) - p2 * x1.powi(3)) / det;
    let c3 = (p2 * x1 - p1 * x2) / det;
    for x in [0.0, 0.5, 0.95, 1.0] {
        let p = qsvt_scalar(phases, x);
        if (p - (c1 * x + c3 * x.powi(3))).norm() > 1e-9 {
            return Err(format!("recursion is not an odd cubic at {x}"));
        }
    }
    let aaa = matmul(&matmul(a, &adjoint(a)), a);
    Ok((0..a.len()).map(|i| (0..a.len()).map(|j| c1 * a[i][j] + c3 * aaa[i][j]).collect()).collect())
}

/// Top-left `2^n` block of a unitary given as columns.
pub fn top_left_block(cols: &[Vec<C>], n: usize) -> Mat {
    let m = 1usize << n;
    (0..m).map(|i| (0..m).map(|j| cols[j][i]).collect()).collect()
}

/// Largest entry difference after the best global phase.
pub fn distance_up_to_phase(a: &Mat, b: &Mat) -> f64 {
    let fa: Vec<C> = a.iter().flatten().copied().collect();
    let fb: Vec<C> = b.iter().flatten().copied().collect();
    qsynth::simulator::distance_up_to_phase(&fa, &fb)
}

/// A reuse scenario: an initial pool, then a sequence of nodes on
/// independent wires, each needing fresh aux qubits it releases at its end.
#[derive(Clone, Debug)]
pub struct ReuseCase {
    pub pool: Vec<usize>,
    pub allocated: usize,
    pub max_width: Option<usize>,
    /// (need, dependency depth, node depth)
    pub nodes: Vec<(usize, usize, usize)>,
}

pub fn random_reuse_case(rng: &mut impl Rng) -> ReuseCase {
    let m = rng.gen_range(0..=8);
    let pool: Vec<usize> = (0..m).map(|_| rng.gen_range(0..=20)).collect();
    let allocated = m + rng.gen_range(0..=3);
    let nodes = (0..rng.gen_range(1..=3))
        .map(|_| (rng.gen_range(0..=4), rng.gen_range(0..=20), rng.gen_range(1..=10)))
        .collect();
    let max_width = rng.gen_bool(0.6).then(|| allocated + rng.gen_range(0..=4));
    ReuseCase { pool, allocated, max_width, nodes }
}

/// Best (final depth, width) over every reuse count and, per count, either
/// the engine's windows or every subset of the pool.
pub fn reuse_optimum(case: &ReuseCase, windows_only: bool) -> Option<(usize, usize)> {
    use qsynth::reuse::{apply_reuse, nondominated_choices, reuse_bounds, AuxPool, PoolEntry};
    let mut pool = AuxPool::new();
    for (i, &d) in case.pool.iter().enumerate() {
        pool.insert(PoolEntry { qubit: i, depth: d, producer: 0 });
    }
    fn go(
        case: &ReuseCase,
        i: usize,
        pool: &AuxPool,
        allocated: usize,
        depth: usize,
        windows_only: bool,
        best: &mut Option<(usize, usize)>,
    ) {
        if i == case.nodes.len() {
            let v = (depth, allocated);
            if best.is_none_or(|b| v < b) {
                *best = Some(v);
            }
            return;
        }
        let (need, dep, len) = case.nodes[i];
        let Some((lo, hi)) = reuse_bounds(need, pool.len(), allocated, case.max_width) else { return };
        for k in lo..=hi {
            let choices = if windows_only {
                nondominated_choices(pool, k)
            } else {
                subsets(pool.len(), k).into_iter().map(|s| s.iter().map(|&j| pool.entries()[j]).collect()).collect()
            };
            for w in choices {
                let mut p = pool.clone();
                let mut next = allocated;
                let pl = apply_reuse(&mut p, &w, need, dep, len, &mut next);
                for &q in &pl.qubits {
                    p.insert(PoolEntry { qubit: q, depth: pl.end, producer: i + 1 });
                }
                go(case, i + 1, &p, next, depth.max(pl.end), windows_only, best);
            }
        }
    }
    let mut best = None;
    go(case, 0, &pool, case.allocated, 0, windows_only, &mut best);
    best
}

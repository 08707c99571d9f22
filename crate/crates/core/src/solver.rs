//! Depth-first search over node order, implementation, reuse count and reuse
//! window, with propagation between decisions and branch-and-bound on the
//! objective.

use crate::callgraph::{CallGraph, NodeId};
use crate::circuit::{GateClass, GateCounts};
use crate::domains::{
    initialize_domains, propagate, should_skip_propagation, ConstraintSet, Domains, Objective, PropResult, PropState,
    ResourceTuple, StepKind,
};
use crate::reuse::{apply_reuse, nondominated_choices, reuse_bounds, AuxPool, PoolEntry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::time::{Duration, Instant};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    GreedyReuse,
    MinWidth,
    MinDepth,
    MinDepthMinReuse,
    Random,
}

impl Strategy {
    pub const ALL: [Strategy; 5] =
        [Strategy::GreedyReuse, Strategy::MinWidth, Strategy::MinDepth, Strategy::MinDepthMinReuse, Strategy::Random];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::GreedyReuse => "greedy-reuse",
            Strategy::MinWidth => "min-width",
            Strategy::MinDepth => "min-depth",
            Strategy::MinDepthMinReuse => "min-depth-min-reuse",
            Strategy::Random => "random",
        }
    }

    pub fn parse(s: &str) -> Option<Strategy> {
        Strategy::ALL.into_iter().find(|x| x.name() == s)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Seeding strategies for a constraint and objective combination.
pub fn select_strategies(cons: &ConstraintSet, obj: Objective) -> Vec<Strategy> {
    use Strategy::*;
    let width = cons.max_width.is_some() || obj == Objective::Width;
    let depth = cons.max_depth.is_some() || obj == Objective::Depth;
    let counts = cons.max_cx.is_some() || cons.max_single.is_some() || matches!(obj, Objective::Count(_));
    match (width, depth, counts) {
        (false, false, false) => vec![GreedyReuse],
        (true, false, false) => vec![MinWidth, GreedyReuse],
        (true, true, _) => vec![MinDepthMinReuse, MinDepth, MinWidth],
        (false, true, false) => vec![MinDepth, GreedyReuse],
        _ => vec![GreedyReuse, MinWidth, Random],
    }
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Seeding strategies; `None` picks them from the constraints.
    pub strategies: Option<Vec<Strategy>>,
    pub seed: u64,
    pub timeout: Option<Duration>,
    pub max_decisions: Option<u64>,
    /// Run the exhaustive search after the strategies.
    pub exhaustive: bool,
    /// Visit every complete solution instead of tightening the bound.
    pub enumerate_all: bool,
    pub reduce: bool,
    pub trace_propagation: bool,
    pub record_log: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            strategies: None,
            seed: 0,
            timeout: None,
            max_decisions: None,
            exhaustive: true,
            enumerate_all: false,
            reduce: true,
            trace_propagation: false,
            record_log: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Decision {
    NextNode {
        node: NodeId,
    },
    NodeValues {
        node: NodeId,
        tuple: usize,
    },
    ReuseCount {
        node: NodeId,
        k: usize,
    },
    ReuseOptions {
        node: NodeId,
        qubits: Vec<usize>,
    },
    LogicFlow {
        node: NodeId,
        alt: usize,
    },
    Collapse {
        node: NodeId,
    },
    /// Opens a level of the search: the next node is still to be picked.
    NodeFail,
    NodeDone {
        node: NodeId,
    },
    Solution {
        value: u64,
    },
    Backtrack,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub decisions: u64,
    pub backtracks: u64,
    pub propagations: u64,
    pub propagation_failures: u64,
    pub solutions: u64,
    /// Distinct node orders among complete solutions reached.
    pub orderings_explored: u64,
    pub nodes_placed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PlacedNode {
    pub node: NodeId,
    pub label: String,
    pub tuple: ResourceTuple,
    pub start: usize,
    pub end: usize,
    /// Physical aux qubits handed to the implementation.
    pub aux: Vec<usize>,
    /// (logical, physical) for locals this node brings to life.
    pub locals: Vec<(usize, usize)>,
    pub reused: Vec<PoolEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Solution {
    pub placements: Vec<PlacedNode>,
    pub choices: BTreeMap<String, usize>,
    /// Physical qubits allocated.
    pub width: usize,
    pub scheduled_depth: usize,
    pub counts: GateCounts,
    pub value: u64,
    /// Physical id of every logical qubit that was used.
    pub phys_of: Vec<Option<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Search exhausted with a solution.
    Optimal,
    /// Solution found but the budget ran out first.
    Feasible,
    /// Search exhausted without a solution.
    Infeasible,
    /// Budget ran out without a solution.
    Unknown,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: Status,
    pub solution: Option<Solution>,
    pub stats: Stats,
    pub log: Vec<Decision>,
    pub trace: Vec<String>,
    /// Objective value found by each seeding strategy.
    pub seeds: Vec<(Strategy, Option<u64>)>,
    /// Every solution value, in discovery order, when enumerating.
    pub all_values: Vec<u64>,
}

impl SolveResult {
    pub fn optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct State {
    /// Unplaced active nodes sorted by position.
    active: Vec<NodeId>,
    placed: Vec<bool>,
    frontier: Vec<usize>,
    phys_of: Vec<Option<usize>>,
    pool: AuxPool,
    allocated: usize,
    committed: GateCounts,
    depth: usize,
    placements: Vec<PlacedNode>,
    choices: BTreeMap<String, usize>,
}

/// Restores the search to an earlier point.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    journal: usize,
    state: State,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Exhaustive,
    Greedy(Strategy),
}

pub struct Search<'g> {
    graph: &'g CallGraph,
    pub doms: Domains,
    cons: ConstraintSet,
    obj: Objective,
    st: State,
    mode: Mode,
    rng: ChaCha8Rng,
    opts: SolveOptions,
    deadline: Option<Instant>,
    out_of_budget: bool,
    /// Incumbent meets a lower bound of zero.
    proven: bool,
    best: Option<Solution>,
    run_best: Option<u64>,
    pub stats: Stats,
    log: Vec<Decision>,
    trace: Vec<String>,
    orders: HashSet<u64>,
    all_values: Vec<u64>,
    /// Bumped whenever the bound tightens; levels re-propagate on change.
    epoch: u64,
}

const LOG_CAP: usize = 1 << 20;

impl<'g> Search<'g> {
    pub fn new(graph: &'g CallGraph, cons: ConstraintSet, obj: Objective, opts: SolveOptions) -> Search<'g> {
        let doms = initialize_domains(graph, &cons, obj);
        let n = graph.nodes.len();
        let mut phys_of = vec![None; graph.num_logical];
        for (q, p) in phys_of.iter_mut().enumerate().take(graph.num_functional) {
            *p = Some(q);
        }
        let mut active = graph.top.clone();
        active.sort_by_key(|&m| graph.nodes[m].pos);
        let st = State {
            active,
            placed: vec![false; n],
            frontier: vec![0; graph.num_logical],
            phys_of,
            pool: AuxPool::new(),
            allocated: graph.num_functional,
            committed: GateCounts::default(),
            depth: 0,
            placements: vec![],
            choices: BTreeMap::new(),
        };
        let deadline = opts.timeout.map(|t| Instant::now() + t);
        Search {
            graph,
            doms,
            cons,
            obj,
            st,
            mode: Mode::Exhaustive,
            rng: ChaCha8Rng::seed_from_u64(opts.seed),
            opts,
            deadline,
            out_of_budget: false,
            proven: false,
            best: None,
            run_best: None,
            stats: Stats::default(),
            log: vec![],
            trace: vec![],
            orders: HashSet::new(),
            all_values: vec![],
            epoch: 0,
        }
    }

    pub fn constraints(&self) -> &ConstraintSet {
        &self.cons
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint { journal: self.doms.mark(), state: self.st.clone() }
    }

    pub fn restore(&mut self, cp: &Checkpoint) {
        self.doms.undo(cp.journal);
        self.st = cp.state.clone();
    }

    /// Hash of everything a checkpoint restores.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.doms.fingerprint().hash(&mut h);
        self.st.hash(&mut h);
        h.finish()
    }

    pub fn is_complete(&self) -> bool {
        self.st.active.is_empty()
    }

    pub fn active(&self) -> &[NodeId] {
        &self.st.active
    }

    /// Ready nodes: first on each of their wires among active nodes, with
    /// every reducer predecessor placed.
    pub fn candidates(&self) -> Vec<NodeId> {
        let mut seen = vec![false; self.graph.num_logical];
        let mut out = Vec::new();
        for &n in &self.st.active {
            let node = &self.graph.nodes[n];
            let ready = node.qubits.iter().all(|&q| !seen[q]) && node.art_preds.iter().all(|&p| self.st.placed[p]);
            if ready {
                out.push(n);
            }
            for &q in &node.qubits {
                seen[q] = true;
            }
        }
        out
    }

    pub fn propagate(&mut self) -> PropResult {
        self.stats.propagations += 1;
        let mut trace = std::mem::take(&mut self.trace);
        let st = PropState {
            graph: self.graph,
            order: &self.st.active,
            frontier: &self.st.frontier,
            committed: self.st.committed,
            allocated: self.st.allocated,
        };
        let tr = if self.opts.trace_propagation && trace.len() < LOG_CAP { Some(&mut trace) } else { None };
        let r = propagate(&mut self.doms, &st, &self.cons, tr);
        self.trace = trace;
        if r != PropResult::Consistent {
            self.stats.propagation_failures += 1;
        }
        r
    }

    /// Narrows a node's domain to one tuple.
    pub fn assign(&mut self, n: NodeId, tuple: usize) {
        self.doms.assign(n, tuple);
    }

    /// Replaces a composite by the nodes of its chosen alternative.
    pub fn expand(&mut self, n: NodeId, alt: usize) {
        let node = &self.graph.nodes[n];
        let i = self.st.active.iter().position(|&m| m == n).expect("composite not active");
        self.st.active.remove(i);
        let inner = &node.alts()[alt];
        for (k, &m) in inner.iter().enumerate() {
            self.st.active.insert(i + k, m);
        }
        if let crate::callgraph::NodeKind::Composite { site: Some(site), .. } = &node.kind {
            self.st.choices.insert(site.clone(), alt);
        }
        self.st.placed[n] = true;
    }

    /// New qubits a leaf needs under tuple `t`.
    fn need(&self, n: NodeId, t: &ResourceTuple) -> usize {
        t.aux + self.graph.nodes[n].acquires.len()
    }

    fn dep_depth(&self, n: NodeId) -> usize {
        self.graph.nodes[n].qubits.iter().map(|&q| self.st.frontier[q]).max().unwrap_or(0)
    }

    /// Range of reuse counts for leaf `n` under tuple `t`.
    pub fn reuse_range(&self, n: NodeId, t: &ResourceTuple) -> Option<(usize, usize)> {
        reuse_bounds(self.need(n, t), self.st.pool.len(), self.st.allocated, self.cons.max_width)
    }

    pub fn windows(&self, k: usize) -> Vec<Vec<PoolEntry>> {
        nondominated_choices(&self.st.pool, k)
    }

    /// Places leaf `n` with its single live tuple, reusing `window`.
    pub fn place(&mut self, n: NodeId, window: &[PoolEntry]) {
        let node = &self.graph.nodes[n];
        let (ti, t) = {
            let d = self.doms.get(n);
            let (i, t) = d.alive().next().expect("placing a node with an empty domain");
            (i, *t)
        };
        debug_assert_eq!(self.doms.get(n).live(), 1, "tuple {ti} not assigned");
        let need = self.need(n, &t);
        let dep = self.dep_depth(n);
        let mut next = self.st.allocated;
        let pl = apply_reuse(&mut self.st.pool, window, need, dep, t.depth, &mut next);
        self.st.allocated = next;
        let (local_phys, aux) = pl.qubits.split_at(node.acquires.len());
        let locals: Vec<(usize, usize)> = node.acquires.iter().copied().zip(local_phys.iter().copied()).collect();
        for &(l, p) in &locals {
            self.st.phys_of[l] = Some(p);
        }
        for &q in &node.qubits {
            self.st.frontier[q] = pl.end;
        }
        for &a in aux {
            self.st.pool.insert(PoolEntry { qubit: a, depth: pl.end, producer: n });
        }
        for &l in &node.releases {
            if let Some(p) = self.st.phys_of[l] {
                self.st.pool.insert(PoolEntry { qubit: p, depth: pl.end, producer: n });
            }
        }
        self.st.committed += t.counts;
        self.st.depth = self.st.depth.max(pl.end);
        self.st.placed[n] = true;
        self.st.active.retain(|&m| m != n);
        self.st.placements.push(PlacedNode {
            node: n,
            label: node.label.clone(),
            tuple: t,
            start: pl.start,
            end: pl.end,
            aux: aux.to_vec(),
            locals,
            reused: pl.reused,
        });
        self.stats.nodes_placed += 1;
    }

    fn value(&self) -> u64 {
        match self.obj {
            Objective::None => 0,
            Objective::Width => self.st.allocated as u64,
            Objective::Depth => self.st.depth as u64,
            Objective::Count(c) => self.st.committed.get(c),
        }
    }

    fn current_solution(&self) -> Solution {
        Solution {
            placements: self.st.placements.clone(),
            choices: self.st.choices.clone(),
            width: self.st.allocated,
            scheduled_depth: self.st.depth,
            counts: self.st.committed,
            value: self.value(),
            phys_of: self.st.phys_of.clone(),
        }
    }

    fn record(&mut self, d: Decision) {
        if self.opts.record_log && self.log.len() < LOG_CAP {
            self.log.push(d);
        }
    }

    /// Counts a decision; false once the budget is spent.
    fn tick(&mut self) -> bool {
        if self.out_of_budget {
            return false;
        }
        self.stats.decisions += 1;
        if self.opts.max_decisions.is_some_and(|m| self.stats.decisions > m) {
            self.out_of_budget = true;
        }
        if self.stats.decisions.is_multiple_of(256) && self.deadline.is_some_and(|d| Instant::now() >= d) {
            self.out_of_budget = true;
        }
        !self.out_of_budget
    }

    fn on_solution(&mut self) {
        let sol = self.current_solution();
        if !self.cons.satisfied_by(sol.width, sol.scheduled_depth, sol.counts) {
            return;
        }
        self.stats.solutions += 1;
        let mut h = DefaultHasher::new();
        for p in &sol.placements {
            p.node.hash(&mut h);
        }
        if self.orders.insert(h.finish()) {
            self.stats.orderings_explored += 1;
        }
        self.record(Decision::Solution { value: sol.value });
        if self.opts.enumerate_all {
            self.all_values.push(sol.value);
        }
        self.run_best = Some(self.run_best.map_or(sol.value, |v| v.min(sol.value)));
        let better = self.best.as_ref().is_none_or(|b| sol.value < b.value);
        if better {
            self.best = Some(sol);
        }
        if self.mode == Mode::Exhaustive && !self.opts.enumerate_all && self.obj != Objective::None {
            let v = self.best.as_ref().unwrap().value;
            if v == 0 {
                self.proven = true;
                return;
            }
            self.cons.tighten(self.obj, v - 1);
            self.epoch += 1;
        }
    }

    fn stop(&self) -> bool {
        if self.out_of_budget || self.proven {
            return true;
        }
        // Without an objective any solution is optimal.
        self.best.is_some() && self.obj == Objective::None && !self.opts.enumerate_all
    }

    /// Re-propagates if the bound tightened since `epoch`; false if the
    /// current subtree is now infeasible.
    fn refresh(&mut self, epoch: &mut u64) -> bool {
        if *epoch == self.epoch {
            return true;
        }
        *epoch = self.epoch;
        self.propagate() == PropResult::Consistent
    }

    fn neutral(&self, n: NodeId) -> bool {
        let node = &self.graph.nodes[n];
        !node.is_composite()
            && node.acquires.is_empty()
            && node.releases.is_empty()
            && self.doms.get(n).alive().all(|(_, t)| t.aux == 0)
    }

    fn ordered_candidates(&mut self) -> Vec<NodeId> {
        let cands = self.candidates();
        // Composites and nodes that neither take nor return qubits commute
        // with every other ready node, so they are placed without branching.
        if let Some(&n) = cands.iter().find(|&&n| self.graph.nodes[n].is_composite() || self.neutral(n)) {
            return vec![n];
        }
        let Mode::Greedy(s) = self.mode else { return cands };
        let pick = match s {
            Strategy::Random => cands[self.rng.gen_range(0..cands.len())],
            Strategy::GreedyReuse | Strategy::MinWidth => *cands
                .iter()
                .max_by_key(|&&n| {
                    let rel =
                        self.graph.nodes[n].releases.len() as i64 + self.doms.get(n).min_of(|t| t.aux as u64) as i64;
                    (rel, std::cmp::Reverse(self.graph.nodes[n].pos))
                })
                .unwrap(),
            Strategy::MinDepth | Strategy::MinDepthMinReuse => {
                *cands.iter().min_by_key(|&&n| (self.dep_depth(n), self.graph.nodes[n].pos)).unwrap()
            }
        };
        vec![pick]
    }

    fn ordered_tuples(&mut self, n: NodeId) -> Vec<usize> {
        let d = self.doms.get(n);
        let mut idx = d.alive_indices();
        let obj = self.obj;
        let key = |t: &ResourceTuple| (t.coord(obj), t.aux, t.counts.cx, t.depth, t.counts.single);
        idx.sort_by_key(|&i| key(&d.tuples[i]));
        let Mode::Greedy(s) = self.mode else { return idx };
        let pick = match s {
            Strategy::Random => idx[self.rng.gen_range(0..idx.len())],
            Strategy::MinWidth => *idx.iter().min_by_key(|&&i| (d.tuples[i].aux, key(&d.tuples[i]))).unwrap(),
            Strategy::MinDepth | Strategy::MinDepthMinReuse => {
                *idx.iter().min_by_key(|&&i| (d.tuples[i].depth, key(&d.tuples[i]))).unwrap()
            }
            Strategy::GreedyReuse => {
                if self.graph.nodes[n].is_composite() {
                    idx[0]
                } else {
                    let avg = idx.iter().map(|&i| d.tuples[i].aux as f64).sum::<f64>() / idx.len() as f64;
                    *idx.iter()
                        .min_by(|&&a, &&b| {
                            let da = (d.tuples[a].aux as f64 - avg).abs();
                            let db = (d.tuples[b].aux as f64 - avg).abs();
                            da.total_cmp(&db).then(key(&d.tuples[a]).cmp(&key(&d.tuples[b])))
                        })
                        .unwrap()
                }
            }
        };
        vec![pick]
    }

    fn depth_matters(&self) -> bool {
        self.obj == Objective::Depth || self.cons.max_depth.is_some()
    }

    fn ordered_counts(&mut self, n: NodeId, lo: usize, hi: usize) -> Vec<usize> {
        match self.mode {
            Mode::Exhaustive if !self.depth_matters() => vec![hi],
            Mode::Exhaustive if self.obj == Objective::Depth => (lo..=hi).collect(),
            Mode::Exhaustive => (lo..=hi).rev().collect(),
            Mode::Greedy(Strategy::Random) => vec![self.rng.gen_range(lo..=hi)],
            Mode::Greedy(Strategy::GreedyReuse | Strategy::MinWidth) => vec![hi],
            Mode::Greedy(Strategy::MinDepthMinReuse) => vec![lo],
            Mode::Greedy(Strategy::MinDepth) => {
                let dep = self.dep_depth(n);
                let free = self.st.pool.entries().iter().filter(|e| e.depth <= dep).count();
                vec![free.clamp(lo, hi)]
            }
        }
    }

    fn ordered_windows(&mut self, k: usize) -> Vec<Vec<PoolEntry>> {
        let mut w = self.windows(k);
        match self.mode {
            Mode::Exhaustive if self.depth_matters() => w,
            Mode::Greedy(Strategy::Random) if !w.is_empty() => {
                let i = self.rng.gen_range(0..w.len());
                vec![w.swap_remove(i)]
            }
            _ => {
                w.truncate(1);
                w
            }
        }
    }

    /// Depth-first search from the current state.
    fn dfs(&mut self) {
        if self.stop() {
            return;
        }
        if self.is_complete() {
            self.on_solution();
            return;
        }
        self.record(Decision::NodeFail);
        let mut epoch = self.epoch;
        let cands = self.ordered_candidates();
        for n in cands {
            if !self.refresh(&mut epoch) || !self.tick() {
                return;
            }
            self.record(Decision::NextNode { node: n });
            self.branch_node(n, &mut epoch);
            if self.stop() {
                return;
            }
        }
    }

    fn branch_node(&mut self, n: NodeId, epoch: &mut u64) {
        let composite = self.graph.nodes[n].is_composite();
        let tuples = self.ordered_tuples(n);
        for ti in tuples {
            if !self.refresh(epoch) || !self.tick() || !self.doms.get(n).is_alive(ti) {
                if self.stop() {
                    return;
                }
                continue;
            }
            let cp = self.checkpoint();
            self.record(Decision::NodeValues { node: n, tuple: ti });
            let was_singleton = self.doms.get(n).live() == 1;
            self.assign(n, ti);
            let skip = should_skip_propagation(StepKind::NodeValues { was_singleton }, self.depth_matters());
            if skip || self.propagate() == PropResult::Consistent {
                if composite {
                    self.record(Decision::LogicFlow { node: n, alt: ti });
                    self.expand(n, ti);
                    self.dfs();
                    self.record(Decision::Collapse { node: n });
                } else {
                    self.branch_reuse(n, ti, epoch);
                }
            }
            self.restore(&cp);
            self.stats.backtracks += 1;
            self.record(Decision::Backtrack);
            if self.stop() {
                return;
            }
        }
    }

    fn branch_reuse(&mut self, n: NodeId, ti: usize, epoch: &mut u64) {
        let t = self.doms.get(n).tuples[ti];
        let Some((lo, hi)) = self.reuse_range(n, &t) else { return };
        for k in self.ordered_counts(n, lo, hi) {
            if !self.refresh(epoch) || !self.tick() {
                return;
            }
            self.record(Decision::ReuseCount { node: n, k });
            let windows = self.ordered_windows(k);
            let had_options = windows.len() > 1;
            for w in windows {
                if !self.refresh(epoch) || !self.tick() {
                    return;
                }
                let cp = self.checkpoint();
                self.record(Decision::ReuseOptions { node: n, qubits: w.iter().map(|e| e.qubit).collect() });
                let dep = self.dep_depth(n);
                let delayed = w.iter().any(|e| e.depth > dep);
                self.place(n, &w);
                self.record(Decision::NodeDone { node: n });
                let skip =
                    should_skip_propagation(StepKind::ReuseOptions { delayed, had_options }, self.depth_matters());
                if skip || self.propagate() == PropResult::Consistent {
                    self.dfs();
                }
                self.restore(&cp);
                self.stats.backtracks += 1;
                if self.stop() {
                    return;
                }
            }
        }
    }

    fn run(&mut self, mode: Mode) {
        self.mode = mode;
        self.run_best = None;
        let cp = self.checkpoint();
        if self.propagate() == PropResult::Consistent {
            self.dfs();
        }
        self.restore(&cp);
    }
}

/// Reduces (if asked) and solves.
pub fn solve(graph: &CallGraph, cons: &ConstraintSet, obj: Objective, opts: &SolveOptions) -> SolveResult {
    let reduced;
    let g = if opts.reduce {
        let mut r = graph.clone();
        r.reduce_graph();
        reduced = r;
        &reduced
    } else {
        graph
    };
    let mut s = Search::new(g, *cons, obj, opts.clone());
    let mut seeds = Vec::new();
    if !opts.enumerate_all {
        let strategies = opts.strategies.clone().unwrap_or_else(|| select_strategies(cons, obj));
        for strat in strategies {
            s.run(Mode::Greedy(strat));
            seeds.push((strat, s.run_best));
            if s.out_of_budget {
                break;
            }
        }
        if let Some(b) = &s.best {
            if obj != Objective::None {
                if b.value == 0 {
                    s.proven = true;
                } else {
                    let v = b.value - 1;
                    s.cons.tighten(obj, v);
                }
            }
        }
    }
    let settled = s.proven || (obj == Objective::None && s.best.is_some());
    if opts.exhaustive && !settled {
        s.run(Mode::Exhaustive);
    }
    let exhausted = (opts.exhaustive || settled) && !s.out_of_budget;
    finish(s, seeds, exhausted)
}

fn finish(s: Search, seeds: Vec<(Strategy, Option<u64>)>, exhausted: bool) -> SolveResult {
    let status = match (&s.best, exhausted) {
        (Some(_), true) => Status::Optimal,
        (Some(_), false) => Status::Feasible,
        (None, true) => Status::Infeasible,
        (None, false) => Status::Unknown,
    };
    SolveResult {
        status,
        solution: s.best,
        stats: s.stats,
        log: s.log,
        trace: s.trace,
        seeds,
        all_values: s.all_values,
    }
}

/// Values of the objective's class, for reporting.
pub fn objective_value(obj: Objective, width: usize, depth: usize, counts: GateCounts) -> u64 {
    match obj {
        Objective::None => 0,
        Objective::Width => width as u64,
        Objective::Depth => depth as u64,
        Objective::Count(GateClass::Cx) => counts.cx,
        Objective::Count(GateClass::Single) => counts.single,
    }
}

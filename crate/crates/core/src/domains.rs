//! Resource tuples, per-node domains with an undo journal, and the bounds
//! propagators used by the search.

use crate::callgraph::{CallGraph, NodeId};
use crate::circuit::{GateClass, GateCounts};
use crate::stdlib::Variant;
use serde::Serialize;
use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};

/// What a tuple selects: a library implementation, a composite
/// alternative, or an index into an abstract node's list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    Impl(Variant),
    Alt(usize),
    Opaque(usize),
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Choice::Impl(v) => write!(f, "{v}"),
            Choice::Alt(k) => write!(f, "alt{k}"),
            Choice::Opaque(k) => write!(f, "opt{k}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ResourceTuple {
    pub aux: usize,
    pub depth: usize,
    pub counts: GateCounts,
    pub choice: Choice,
}

impl ResourceTuple {
    pub fn zero(choice: Choice) -> ResourceTuple {
        ResourceTuple { aux: 0, depth: 0, counts: GateCounts::default(), choice }
    }

    fn costs(&self) -> [u64; 4] {
        [self.aux as u64, self.depth as u64, self.counts.cx, self.counts.single]
    }

    /// No coordinate larger and at least one smaller.
    pub fn dominates(&self, o: &ResourceTuple) -> bool {
        let (a, b) = (self.costs(), o.costs());
        a.iter().zip(&b).all(|(x, y)| x <= y) && a != b
    }

    /// The coordinate the objective cares about; `None` ranks everything 0.
    pub fn coord(&self, obj: Objective) -> u64 {
        match obj {
            Objective::None => 0,
            Objective::Width => self.aux as u64,
            Objective::Depth => self.depth as u64,
            Objective::Count(c) => self.counts.get(c),
        }
    }
}

impl fmt::Display for ResourceTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}(aux={} depth={} cx={} single={})",
            self.choice, self.aux, self.depth, self.counts.cx, self.counts.single
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    None,
    Width,
    Depth,
    Count(GateClass),
}

impl Objective {
    pub fn parse(s: &str) -> Option<Objective> {
        match s {
            "none" => Some(Objective::None),
            "width" => Some(Objective::Width),
            "depth" => Some(Objective::Depth),
            "cx" | "cx-count" | "cx_count" => Some(Objective::Count(GateClass::Cx)),
            "single" | "single-count" | "single_count" => Some(Objective::Count(GateClass::Single)),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Objective::None => "none",
            Objective::Width => "width",
            Objective::Depth => "depth",
            Objective::Count(GateClass::Cx) => "cx",
            Objective::Count(GateClass::Single) => "single",
        }
    }
}

/// Upper bounds on the final circuit. The search tightens the objective's
/// bound as solutions are found.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ConstraintSet {
    pub max_width: Option<usize>,
    pub max_depth: Option<usize>,
    pub max_cx: Option<u64>,
    pub max_single: Option<u64>,
}

impl ConstraintSet {
    pub fn count(&self, c: GateClass) -> Option<u64> {
        match c {
            GateClass::Cx => self.max_cx,
            GateClass::Single => self.max_single,
        }
    }

    pub fn is_empty(&self) -> bool {
        *self == ConstraintSet::default()
    }

    /// Sets the bound on the objective's coordinate to `v` if tighter.
    pub fn tighten(&mut self, obj: Objective, v: u64) {
        fn min_into<T: Ord + Copy>(slot: &mut Option<T>, v: T) {
            *slot = Some(slot.map_or(v, |s| s.min(v)));
        }
        match obj {
            Objective::None => {}
            Objective::Width => min_into(&mut self.max_width, v as usize),
            Objective::Depth => min_into(&mut self.max_depth, v as usize),
            Objective::Count(GateClass::Cx) => min_into(&mut self.max_cx, v),
            Objective::Count(GateClass::Single) => min_into(&mut self.max_single, v),
        }
    }

    /// True if some bound is on a coordinate other than the objective's.
    pub fn competes_with(&self, obj: Objective) -> bool {
        let w = self.max_width.is_some() && obj != Objective::Width;
        let d = self.max_depth.is_some() && obj != Objective::Depth;
        let c = self.max_cx.is_some() && obj != Objective::Count(GateClass::Cx);
        let s = self.max_single.is_some() && obj != Objective::Count(GateClass::Single);
        w || d || c || s
    }

    pub fn satisfied_by(&self, width: usize, depth: usize, counts: GateCounts) -> bool {
        self.max_width.is_none_or(|w| width <= w)
            && self.max_depth.is_none_or(|d| depth <= d)
            && self.max_cx.is_none_or(|c| counts.cx <= c)
            && self.max_single.is_none_or(|s| counts.single <= s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Domain {
    pub tuples: Vec<ResourceTuple>,
    alive: Vec<bool>,
    live: usize,
}

impl Domain {
    pub fn new(tuples: Vec<ResourceTuple>) -> Domain {
        let n = tuples.len();
        Domain { tuples, alive: vec![true; n], live: n }
    }

    pub fn live(&self) -> usize {
        self.live
    }

    pub fn is_alive(&self, i: usize) -> bool {
        self.alive[i]
    }

    pub fn alive(&self) -> impl Iterator<Item = (usize, &ResourceTuple)> + '_ {
        self.tuples.iter().enumerate().filter(|(i, _)| self.alive[*i])
    }

    pub fn alive_indices(&self) -> Vec<usize> {
        (0..self.tuples.len()).filter(|&i| self.alive[i]).collect()
    }

    pub fn min_of(&self, f: impl Fn(&ResourceTuple) -> u64) -> u64 {
        self.alive().map(|(_, t)| f(t)).min().unwrap_or(0)
    }
}

/// All node domains plus the journal of removals since construction.
#[derive(Clone, Debug)]
pub struct Domains {
    doms: Vec<Domain>,
    journal: Vec<(NodeId, usize)>,
}

impl Domains {
    pub fn new(graph: &CallGraph) -> Domains {
        Domains { doms: graph.nodes.iter().map(|n| Domain::new(n.options.clone())).collect(), journal: vec![] }
    }

    pub fn get(&self, n: NodeId) -> &Domain {
        &self.doms[n]
    }

    /// Kills tuple `i` of node `n`; returns false if it was already dead.
    pub fn remove(&mut self, n: NodeId, i: usize) -> bool {
        let d = &mut self.doms[n];
        if !d.alive[i] {
            return false;
        }
        d.alive[i] = false;
        d.live -= 1;
        self.journal.push((n, i));
        true
    }

    /// Keeps only tuple `keep` alive.
    pub fn assign(&mut self, n: NodeId, keep: usize) {
        for i in 0..self.doms[n].tuples.len() {
            if i != keep {
                self.remove(n, i);
            }
        }
    }

    pub fn mark(&self) -> usize {
        self.journal.len()
    }

    pub fn undo(&mut self, mark: usize) {
        while self.journal.len() > mark {
            let (n, i) = self.journal.pop().unwrap();
            self.doms[n].alive[i] = true;
            self.doms[n].live += 1;
        }
    }

    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for d in &self.doms {
            d.alive.hash(&mut h);
        }
        h.finish()
    }
}

/// Applies the static reductions before search: drops tuples that violate a
/// bound on their own, collapses domains to the best tuple when a single
/// objective has nothing competing with it, and removes dominated tuples.
/// Composite summaries are lower bounds, so composites are only truncated.
pub fn initialize_domains(graph: &CallGraph, cons: &ConstraintSet, obj: Objective) -> Domains {
    let mut doms = Domains::new(graph);
    let f = graph.num_functional;
    for node in &graph.nodes {
        let n = node.id;
        let locals = node.qubits.iter().filter(|&&q| q >= f).count();
        for (i, t) in node.options.iter().enumerate() {
            let bad = cons.max_width.is_some_and(|w| f + locals + t.aux > w)
                || cons.max_depth.is_some_and(|d| t.depth > d)
                || cons.max_cx.is_some_and(|c| t.counts.cx > c)
                || cons.max_single.is_some_and(|s| t.counts.single > s);
            if bad {
                doms.remove(n, i);
            }
        }
        if node.is_composite() {
            continue;
        }
        if obj != Objective::None && !cons.competes_with(obj) && doms.doms[n].live > 1 {
            let best = doms.doms[n].alive().min_by_key(|(_, t)| (t.coord(obj), t.costs())).map(|(i, _)| i);
            if let Some(b) = best {
                doms.assign(n, b);
            }
        }
        let alive = doms.doms[n].alive_indices();
        for &i in &alive {
            let t = node.options[i];
            // Equal tuples keep the earliest.
            let beaten = alive.iter().any(|&j| {
                let u = node.options[j];
                j != i && doms.doms[n].alive[j] && (u.dominates(&t) || (u.costs() == t.costs() && j < i))
            });
            if beaten {
                doms.remove(n, i);
            }
        }
    }
    // Constructing a fresh search should not be able to undo these.
    doms.journal.clear();
    doms
}

/// Search state the propagators read.
pub struct PropState<'a> {
    pub graph: &'a CallGraph,
    /// Unplaced active nodes in program order.
    pub order: &'a [NodeId],
    /// Earliest free layer of every logical qubit.
    pub frontier: &'a [usize],
    pub committed: GateCounts,
    pub allocated: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PropResult {
    Consistent,
    Inconsistent(String),
}

/// Lower bound on the final count of one gate class.
pub fn bound_gate_count(doms: &Domains, st: &PropState, class: GateClass) -> u64 {
    st.committed.get(class) + st.order.iter().map(|&n| doms.get(n).min_of(|t| t.counts.get(class))).sum::<u64>()
}

/// Earliest-start and tail information from one pass over the active nodes.
struct DepthPass {
    /// Per node in `order`, per qubit of the node: earliest input layer.
    inp: Vec<Vec<usize>>,
    /// Per node, per qubit: minimum layers after the node on that wire.
    tail: Vec<Vec<usize>>,
    total: usize,
}

fn depth_pass(doms: &Domains, st: &PropState) -> DepthPass {
    let g = st.graph;
    let mut out = st.frontier.to_vec();
    let mut inp = Vec::with_capacity(st.order.len());
    let delay = |n: NodeId, q: usize| -> usize {
        let node = &g.nodes[n];
        if node.is_composite() {
            doms.get(n).alive().map(|(i, _)| node.alt_delays[i].get(&q).copied().unwrap_or(0)).min().unwrap_or(0)
        } else {
            doms.get(n).min_of(|t| t.depth as u64) as usize
        }
    };
    for &n in st.order {
        let node = &g.nodes[n];
        let ins: Vec<usize> = node.qubits.iter().map(|&q| out[q]).collect();
        if node.is_composite() {
            for &q in &node.qubits {
                out[q] += delay(n, q);
            }
        } else {
            let start = ins.iter().copied().max().unwrap_or(0);
            let d = delay(n, 0);
            for &q in &node.qubits {
                out[q] = start + d;
            }
        }
        inp.push(ins);
    }
    let total = out.iter().copied().max().unwrap_or(0);
    let mut tail_of = vec![0usize; out.len()];
    let mut tail = vec![vec![]; st.order.len()];
    for (k, &n) in st.order.iter().enumerate().rev() {
        let node = &g.nodes[n];
        let after: Vec<usize> = node.qubits.iter().map(|&q| tail_of[q]).collect();
        if node.is_composite() {
            for &q in &node.qubits {
                tail_of[q] += delay(n, q);
            }
        } else {
            let m = after.iter().copied().max().unwrap_or(0);
            let d = delay(n, 0);
            for &q in &node.qubits {
                tail_of[q] = d + m;
            }
        }
        tail[k] = after;
    }
    DepthPass { inp, tail, total }
}

/// Lower bound on the final depth: longest path through the active nodes
/// using minimum depths, starting from the current frontier.
pub fn bound_depth(doms: &Domains, st: &PropState) -> usize {
    depth_pass(doms, st).total
}

/// Largest aux count a candidate can take: the width bound minus qubits in
/// use, plus pool entries that could be reused, minus the candidate's own
/// local acquisitions.
pub fn bound_width(max_width: usize, allocated: usize, pool: usize, acquires: usize) -> i64 {
    max_width as i64 - allocated as i64 + pool as i64 - acquires as i64
}

fn prune(
    doms: &mut Domains,
    g: &CallGraph,
    n: NodeId,
    i: usize,
    rule: &str,
    trace: &mut Option<&mut Vec<String>>,
) -> bool {
    let removed = doms.remove(n, i);
    if removed {
        if let Some(t) = trace.as_deref_mut() {
            t.push(format!("prune {} {} by {rule}", g.nodes[n].label, g.nodes[n].options[i]));
        }
    }
    removed
}

/// Runs the count, depth and width propagators to a fixpoint.
pub fn propagate(
    doms: &mut Domains,
    st: &PropState,
    cons: &ConstraintSet,
    mut trace: Option<&mut Vec<String>>,
) -> PropResult {
    let g = st.graph;
    let f = g.num_functional;
    if let Some(w) = cons.max_width {
        if st.allocated > w {
            return PropResult::Inconsistent(format!("width {} already exceeds {w}", st.allocated));
        }
        for &n in st.order {
            let locals = g.nodes[n].qubits.iter().filter(|&&q| q >= f).count();
            for i in doms.get(n).alive_indices() {
                if f + locals + g.nodes[n].options[i].aux > w {
                    prune(doms, g, n, i, "width", &mut trace);
                }
            }
        }
    }
    loop {
        let mut changed = false;
        for class in GateClass::ALL {
            let Some(b) = cons.count(class) else { continue };
            let total = bound_gate_count(doms, st, class);
            if total > b {
                return PropResult::Inconsistent(format!("{} count bound {total} exceeds {b}", class.name()));
            }
            for &n in st.order {
                let min = doms.get(n).min_of(|t| t.counts.get(class));
                for i in doms.get(n).alive_indices() {
                    if total - min + g.nodes[n].options[i].counts.get(class) > b {
                        changed |= prune(doms, g, n, i, class.name(), &mut trace);
                    }
                }
            }
        }
        if let Some(d) = cons.max_depth {
            let pass = depth_pass(doms, st);
            if pass.total > d {
                return PropResult::Inconsistent(format!("depth bound {} exceeds {d}", pass.total));
            }
            for (k, &n) in st.order.iter().enumerate() {
                let node = &g.nodes[n];
                for i in doms.get(n).alive_indices() {
                    let over = if node.is_composite() {
                        node.qubits.iter().enumerate().any(|(j, q)| {
                            pass.inp[k][j] + node.alt_delays[i].get(q).copied().unwrap_or(0) + pass.tail[k][j] > d
                        })
                    } else {
                        let start = pass.inp[k].iter().copied().max().unwrap_or(0);
                        let after = pass.tail[k].iter().copied().max().unwrap_or(0);
                        start + node.options[i].depth + after > d
                    };
                    if over {
                        changed |= prune(doms, g, n, i, "depth", &mut trace);
                    }
                }
            }
        }
        if let Some(&n) = st.order.iter().find(|&&n| doms.get(n).live() == 0) {
            return PropResult::Inconsistent(format!("empty domain at {}", g.nodes[n].label));
        }
        if !changed {
            return PropResult::Consistent;
        }
    }
}

/// The decision kinds after which propagation may be skipped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    NextNode,
    /// Value assignment; `was_singleton` if the domain had one live tuple.
    NodeValues {
        was_singleton: bool,
    },
    ReuseCount,
    /// Reuse window chosen; `delayed` if it pushed the node's start later.
    ReuseOptions {
        delayed: bool,
        had_options: bool,
    },
    LogicFlow,
    Tightened,
}

/// True when the step cannot have changed any bound the propagators read.
pub fn should_skip_propagation(step: StepKind, depth_constrained: bool) -> bool {
    match step {
        StepKind::Tightened => false,
        StepKind::NextNode | StepKind::ReuseCount | StepKind::LogicFlow => true,
        StepKind::NodeValues { was_singleton } => was_singleton,
        StepKind::ReuseOptions { delayed, had_options } => !depth_constrained || !delayed || !had_options,
    }
}

//! Wire-level call graph: one node per library call, selects kept as
//! composite nodes whose alternatives are lowered eagerly and spliced in by
//! the solver.

use crate::circuit::GateCounts;
use crate::domains::{Choice, ResourceTuple};
use crate::model::{Elaborated, Elem};
use crate::stdlib::{impl_variants, LibOp};
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write;
use thiserror::Error;

pub type NodeId = usize;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("qubit {0} is allocated in one scope and freed in another")]
    ScopeMismatch(String),
    #[error("node {0} has an empty domain")]
    EmptyDomain(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    Lib(LibOp),
    /// Abstract node with caller-supplied resource tuples.
    Opaque,
    Composite {
        site: Option<String>,
        alts: Vec<Vec<NodeId>>,
    },
}

#[derive(Clone, Debug)]
pub struct Node {
    pub id: NodeId,
    pub label: String,
    pub kind: NodeKind,
    /// Logical qubits visible outside the node, sorted.
    pub qubits: Vec<usize>,
    /// Locally allocated qubits that become live at this node.
    pub acquires: Vec<usize>,
    /// Locally allocated qubits that are freed after this node.
    pub releases: Vec<usize>,
    /// Implementation tuples; for composites one summary per alternative.
    pub options: Vec<ResourceTuple>,
    /// For composites, per alternative, a lower bound on the layers each
    /// qubit spends inside the alternative.
    pub alt_delays: Vec<BTreeMap<usize, usize>>,
    pub parent: Option<NodeId>,
    /// Pre-order position; sorting active nodes by it gives program order.
    pub pos: usize,
    /// Ordering edges added by the reducer.
    pub art_preds: Vec<NodeId>,
}

impl Node {
    pub fn is_composite(&self) -> bool {
        matches!(self.kind, NodeKind::Composite { .. })
    }

    pub fn alts(&self) -> &[Vec<NodeId>] {
        match &self.kind {
            NodeKind::Composite { alts, .. } => alts,
            _ => &[],
        }
    }
}

#[derive(Clone, Debug)]
pub struct CallGraph {
    pub nodes: Vec<Node>,
    /// Top-level sequence in program order.
    pub top: Vec<NodeId>,
    /// Declared qubits, always live; ids `0..num_functional`.
    pub num_functional: usize,
    pub num_logical: usize,
    pub qubit_names: Vec<String>,
}

#[derive(Clone, Copy, Debug)]
pub struct LowerOptions {
    /// Inline single-implementation user calls instead of keeping them as
    /// one-alternative composites.
    pub flatten_calls: bool,
}

impl Default for LowerOptions {
    fn default() -> Self {
        LowerOptions { flatten_calls: true }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WireEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub qubit: usize,
}

enum Event {
    Alloc(Vec<usize>, usize),
    Free(Vec<usize>, usize),
}

struct Lowerer<'a> {
    g: CallGraph,
    _el: &'a Elaborated,
    opts: LowerOptions,
}

pub fn lower_to_graph(el: &Elaborated, opts: LowerOptions) -> Result<CallGraph, GraphError> {
    let g = CallGraph {
        nodes: vec![],
        top: vec![],
        num_functional: el.num_functional,
        num_logical: el.num_logical,
        qubit_names: el.qubit_names.clone(),
    };
    let mut l = Lowerer { g, _el: el, opts };
    let top = l.sequence(&el.body, None, "")?;
    l.g.top = top;
    l.g.finish()?;
    Ok(l.g)
}

impl Lowerer<'_> {
    fn add(&mut self, label: String, kind: NodeKind, qubits: Vec<usize>, parent: Option<NodeId>) -> NodeId {
        let id = self.g.nodes.len();
        self.g.nodes.push(Node {
            id,
            label,
            kind,
            qubits,
            acquires: vec![],
            releases: vec![],
            options: vec![],
            alt_delays: vec![],
            parent,
            pos: 0,
            art_preds: vec![],
        });
        id
    }

    /// Lowers one scope and resolves its allocation events.
    fn sequence(&mut self, elems: &[Elem], parent: Option<NodeId>, prefix: &str) -> Result<Vec<NodeId>, GraphError> {
        let mut out = Vec::new();
        let mut events = Vec::new();
        self.walk(elems, parent, prefix, &mut out, &mut events)?;
        for ev in events {
            match ev {
                Event::Alloc(qs, at) => {
                    for q in qs {
                        if let Some(&n) = out[at..].iter().find(|&&n| self.g.nodes[n].qubits.contains(&q)) {
                            self.push_down(n, q, true);
                        }
                    }
                }
                Event::Free(qs, at) => {
                    for q in qs {
                        if let Some(&n) = out[..at].iter().rev().find(|&&n| self.g.nodes[n].qubits.contains(&q)) {
                            self.push_down(n, q, false);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Attaches an acquire or release of `q` to `n`, and to the first (last)
    /// user of `q` inside each alternative of a composite.
    fn push_down(&mut self, n: NodeId, q: usize, acquire: bool) {
        if acquire {
            self.g.nodes[n].acquires.push(q);
        } else {
            self.g.nodes[n].releases.push(q);
        }
        let alts = self.g.nodes[n].alts().to_vec();
        for alt in alts {
            let user = if acquire {
                alt.iter().find(|&&m| self.g.nodes[m].qubits.contains(&q)).copied()
            } else {
                alt.iter().rev().find(|&&m| self.g.nodes[m].qubits.contains(&q)).copied()
            };
            if let Some(m) = user {
                self.push_down(m, q, acquire);
            }
        }
    }

    fn walk(
        &mut self,
        elems: &[Elem],
        parent: Option<NodeId>,
        prefix: &str,
        out: &mut Vec<NodeId>,
        events: &mut Vec<Event>,
    ) -> Result<(), GraphError> {
        for e in elems {
            match e {
                Elem::Op(op) => {
                    let mut qs = op.operands();
                    qs.sort_unstable();
                    let id = self.add(format!("{prefix}{}", op.label()), NodeKind::Lib(op.clone()), qs, parent);
                    out.push(id);
                }
                Elem::Call { name, body } if self.opts.flatten_calls => {
                    self.walk(body, parent, &format!("{prefix}{name}/"), out, events)?
                }
                Elem::Call { name, body } => {
                    let id = self.add(
                        format!("{prefix}{name}"),
                        NodeKind::Composite { site: None, alts: vec![] },
                        vec![],
                        parent,
                    );
                    let alt = self.sequence(body, Some(id), &format!("{prefix}{name}/"))?;
                    self.finish_composite(id, vec![alt]);
                    out.push(id);
                }
                Elem::Select { site, alts } => {
                    let id = self.add(
                        format!("{prefix}select[{site}]"),
                        NodeKind::Composite { site: Some(site.clone()), alts: vec![] },
                        vec![],
                        parent,
                    );
                    let mut lowered = Vec::new();
                    for (k, a) in alts.iter().enumerate() {
                        lowered.push(self.sequence(a, Some(id), &format!("{prefix}select[{site}]:{k}/"))?);
                    }
                    self.finish_composite(id, lowered);
                    out.push(id);
                }
                Elem::Conj { outer, inner } => {
                    self.walk(outer, parent, prefix, out, events)?;
                    self.walk(inner, parent, prefix, out, events)?;
                    self.walk(&crate::model::invert_elems(outer), parent, prefix, out, events)?;
                }
                Elem::Alloc(qs) => events.push(Event::Alloc(qs.clone(), out.len())),
                Elem::Free(qs) => events.push(Event::Free(qs.clone(), out.len())),
            }
        }
        Ok(())
    }

    fn finish_composite(&mut self, id: NodeId, alts: Vec<Vec<NodeId>>) {
        // Qubits acquired inside an alternative are internal to it.
        let mut internal = HashSet::new();
        let mut all = BTreeSet::new();
        for alt in &alts {
            for &n in alt {
                collect_acquired(&self.g, n, &mut internal);
                all.extend(self.g.nodes[n].qubits.iter().copied());
            }
        }
        self.g.nodes[id].qubits = all.into_iter().filter(|q| !internal.contains(q)).collect();
        if let NodeKind::Composite { alts: a, .. } = &mut self.g.nodes[id].kind {
            *a = alts;
        }
    }
}

fn collect_acquired(g: &CallGraph, n: NodeId, out: &mut HashSet<usize>) {
    out.extend(g.nodes[n].acquires.iter().copied());
    for alt in g.nodes[n].alts() {
        for &m in alt {
            collect_acquired(g, m, out);
        }
    }
}

/// Tuples for a library op, one per implementation.
pub fn lib_options(op: &LibOp) -> Vec<ResourceTuple> {
    impl_variants(op.shape())
        .into_iter()
        .map(|v| ResourceTuple {
            aux: v.profile.aux,
            depth: v.profile.depth,
            counts: v.profile.counts,
            choice: Choice::Impl(v.variant),
        })
        .collect()
}

impl CallGraph {
    /// Empty graph for hand-built instances.
    pub fn new(num_functional: usize) -> CallGraph {
        CallGraph {
            nodes: vec![],
            top: vec![],
            num_functional,
            num_logical: num_functional,
            qubit_names: (0..num_functional).map(|i| format!("q[{i}]")).collect(),
        }
    }

    /// Appends a top-level abstract node.
    pub fn add_opaque(&mut self, label: &str, qubits: &[usize], options: Vec<ResourceTuple>) -> NodeId {
        let id = self.nodes.len();
        let mut qs = qubits.to_vec();
        qs.sort_unstable();
        qs.dedup();
        self.nodes.push(Node {
            id,
            label: label.to_string(),
            kind: NodeKind::Opaque,
            qubits: qs,
            acquires: vec![],
            releases: vec![],
            options,
            alt_delays: vec![],
            parent: None,
            pos: 0,
            art_preds: vec![],
        });
        self.top.push(id);
        id
    }

    /// Appends a top-level library node.
    pub fn add_lib(&mut self, op: LibOp) -> NodeId {
        let id = self.nodes.len();
        let mut qs = op.operands();
        qs.sort_unstable();
        self.nodes.push(Node {
            id,
            label: op.label(),
            options: lib_options(&op),
            kind: NodeKind::Lib(op),
            qubits: qs,
            acquires: vec![],
            releases: vec![],
            alt_delays: vec![],
            parent: None,
            pos: 0,
            art_preds: vec![],
        });
        self.top.push(id);
        id
    }

    /// Fills library options, composite summaries and positions.
    pub fn finish(&mut self) -> Result<(), GraphError> {
        for n in 0..self.nodes.len() {
            if let NodeKind::Lib(op) = &self.nodes[n].kind {
                self.nodes[n].options = lib_options(op);
            }
        }
        for &n in &self.top.clone() {
            self.summarize(n);
        }
        let mut pos = 0;
        for &n in &self.top.clone() {
            self.assign_pos(n, &mut pos);
        }
        for n in &self.nodes {
            if n.options.is_empty() && self.is_reachable(n.id) {
                return Err(GraphError::EmptyDomain(n.label.clone()));
            }
        }
        Ok(())
    }

    fn is_reachable(&self, n: NodeId) -> bool {
        let mut cur = n;
        loop {
            match self.nodes[cur].parent {
                Some(p) => cur = p,
                None => return self.top.contains(&cur),
            }
        }
    }

    fn assign_pos(&mut self, n: NodeId, pos: &mut usize) {
        self.nodes[n].pos = *pos;
        *pos += 1;
        for alt in self.nodes[n].alts().to_vec() {
            for m in alt {
                self.assign_pos(m, pos);
            }
        }
    }

    /// Minimum layers qubit `q` spends inside node `n`.
    pub fn min_delay(&self, n: NodeId, q: usize) -> usize {
        let node = &self.nodes[n];
        if node.is_composite() {
            node.alt_delays.iter().map(|d| d.get(&q).copied().unwrap_or(0)).min().unwrap_or(0)
        } else {
            node.options.iter().map(|t| t.depth).min().unwrap_or(0)
        }
    }

    fn summarize(&mut self, n: NodeId) {
        let alts = self.nodes[n].alts().to_vec();
        if alts.is_empty() {
            return;
        }
        let mut options = Vec::new();
        let mut delays = Vec::new();
        for (k, alt) in alts.iter().enumerate() {
            for &m in alt {
                self.summarize(m);
            }
            let mut counts = GateCounts::default();
            let mut aux = 0;
            let mut per_qubit: BTreeMap<usize, usize> = BTreeMap::new();
            let mut finish: HashMap<usize, usize> = HashMap::new();
            for &m in alt {
                let node = &self.nodes[m];
                for class in crate::circuit::GateClass::ALL {
                    let min = node.options.iter().map(|t| t.counts.get(class)).min().unwrap_or(0);
                    match class {
                        crate::circuit::GateClass::Cx => counts.cx += min,
                        crate::circuit::GateClass::Single => counts.single += min,
                    }
                }
                let min_aux = node.options.iter().map(|t| t.aux).min().unwrap_or(0);
                aux = aux.max(min_aux + node.acquires.len());
                for &q in &node.qubits {
                    *per_qubit.entry(q).or_default() += self.min_delay(m, q);
                }
                // Critical path over the alternative, for the summary depth.
                let start = node.qubits.iter().map(|q| finish.get(q).copied().unwrap_or(0)).max().unwrap_or(0);
                let dmax = node.qubits.iter().map(|&q| self.min_delay(m, q)).max().unwrap_or(0);
                for &q in &node.qubits {
                    finish.insert(q, start + dmax);
                }
            }
            let depth = finish.values().copied().max().unwrap_or(0);
            options.push(ResourceTuple { aux, depth, counts, choice: Choice::Alt(k) });
            delays.push(per_qubit);
        }
        self.nodes[n].options = options;
        self.nodes[n].alt_delays = delays;
    }

    /// Consecutive users of each qubit within one sequence.
    pub fn wire_edges(&self, seq: &[NodeId]) -> Vec<WireEdge> {
        let mut last: HashMap<usize, NodeId> = HashMap::new();
        let mut out = Vec::new();
        for &n in seq {
            for &q in &self.nodes[n].qubits {
                if let Some(&p) = last.get(&q) {
                    out.push(WireEdge { from: p, to: n, qubit: q });
                }
                last.insert(q, n);
            }
        }
        out
    }

    /// Wire predecessors of every node in a sequence.
    fn seq_preds(&self, seq: &[NodeId]) -> HashMap<NodeId, BTreeSet<NodeId>> {
        let mut preds: HashMap<NodeId, BTreeSet<NodeId>> = seq.iter().map(|&n| (n, BTreeSet::new())).collect();
        for e in self.wire_edges(seq) {
            preds.get_mut(&e.to).unwrap().insert(e.from);
        }
        preds
    }

    /// Top-level nodes whose predecessors, including reducer edges, are all
    /// in `placed`.
    pub fn next_candidates(&self, placed: &HashSet<NodeId>) -> Vec<NodeId> {
        let preds = self.seq_preds(&self.top);
        self.top
            .iter()
            .copied()
            .filter(|n| !placed.contains(n))
            .filter(|n| preds[n].iter().all(|p| placed.contains(p)))
            .filter(|n| self.nodes[*n].art_preds.iter().all(|p| placed.contains(p)))
            .collect()
    }

    /// Adds ordering edges between interchangeable nodes of every sequence.
    /// Nodes are interchangeable when they have the same kind and options,
    /// the same operand width, no allocation events, and identical wire
    /// predecessor and successor sets. Inside an alternative the sequence
    /// boundary counts as a distinct neighbour per qubit.
    pub fn reduce_graph(&mut self) {
        let mut seqs = vec![(self.top.clone(), false)];
        for n in &self.nodes {
            for alt in n.alts() {
                seqs.push((alt.clone(), true));
            }
        }
        for (seq, bounded) in seqs {
            self.reduce_sequence(&seq, bounded);
        }
    }

    fn reduce_sequence(&mut self, seq: &[NodeId], bounded: bool) {
        const ENTRY: usize = usize::MAX / 2;
        const EXIT: usize = usize::MAX / 4;
        let mut preds: HashMap<NodeId, BTreeSet<usize>> = seq.iter().map(|&n| (n, BTreeSet::new())).collect();
        let mut succs = preds.clone();
        let mut first_seen = HashSet::new();
        let mut last_user: HashMap<usize, NodeId> = HashMap::new();
        for &n in seq {
            for &q in &self.nodes[n].qubits {
                match last_user.get(&q) {
                    Some(&p) => {
                        preds.get_mut(&n).unwrap().insert(p);
                        succs.get_mut(&p).unwrap().insert(n);
                    }
                    None if bounded => {
                        preds.get_mut(&n).unwrap().insert(ENTRY + q);
                    }
                    None => {}
                }
                first_seen.insert(q);
                last_user.insert(q, n);
            }
        }
        if bounded {
            for (&q, &n) in &last_user {
                succs.get_mut(&n).unwrap().insert(EXIT + q);
            }
        }
        let key = |g: &CallGraph, n: NodeId| -> Option<String> {
            let node = &g.nodes[n];
            if node.is_composite() || !node.acquires.is_empty() || !node.releases.is_empty() {
                return None;
            }
            let kind = match &node.kind {
                NodeKind::Lib(op) => format!("{:?}", op.shape()),
                _ => "opaque".to_string(),
            };
            Some(format!("{kind}|{}|{:?}|{:?}|{:?}", node.qubits.len(), node.options, preds[&n], succs[&n]))
        };
        let mut groups: BTreeMap<String, Vec<NodeId>> = BTreeMap::new();
        for &n in seq {
            self.nodes[n].art_preds.clear();
            if let Some(k) = key(self, n) {
                groups.entry(k).or_default().push(n);
            }
        }
        for members in groups.values() {
            for w in members.windows(2) {
                self.nodes[w[1]].art_preds = vec![w[0]];
            }
        }
    }

    /// Number of reducer edges in the graph.
    pub fn artificial_edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.art_preds.len()).sum()
    }

    /// Counts linear extensions of the top-level sequence (for small graphs).
    pub fn count_topological_orders(&self, cap: u64) -> u64 {
        let preds = self.seq_preds(&self.top);
        let idx: HashMap<NodeId, usize> = self.top.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let masks: Vec<u64> = self
            .top
            .iter()
            .map(|n| preds[n].iter().chain(self.nodes[*n].art_preds.iter()).fold(0u64, |m, p| m | (1 << idx[p])))
            .collect();
        assert!(self.top.len() <= 24, "too many nodes to count orders");
        let full = (1u64 << self.top.len()) - 1;
        let mut memo: HashMap<u64, u64> = HashMap::new();
        fn go(placed: u64, full: u64, masks: &[u64], memo: &mut HashMap<u64, u64>, cap: u64) -> u64 {
            if placed == full {
                return 1;
            }
            if let Some(&v) = memo.get(&placed) {
                return v;
            }
            let mut total = 0u64;
            for (i, &m) in masks.iter().enumerate() {
                if placed & (1 << i) == 0 && m & !placed == 0 {
                    total = total.saturating_add(go(placed | (1 << i), full, masks, memo, cap)).min(cap);
                }
            }
            memo.insert(placed, total);
            total
        }
        go(0, full, &masks, &mut memo, cap)
    }

    /// Graphviz rendering: wire edges solid, reducer edges dashed,
    /// alternatives as clusters.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph callgraph {\n  rankdir=LR;\n  node [shape=box];\n");
        let emit_seq = |s: &mut String, seq: &[NodeId], indent: &str| {
            for &n in seq {
                let node = &self.nodes[n];
                let shape = if node.is_composite() { ", shape=box3d" } else { "" };
                let _ = writeln!(s, "{indent}n{n} [label=\"{}\"{shape}];", node.label.replace('"', "'"));
            }
            for e in self.wire_edges(seq) {
                let _ = writeln!(s, "{indent}n{} -> n{} [label=\"{}\"];", e.from, e.to, self.qubit_names[e.qubit]);
            }
        };
        emit_seq(&mut s, &self.top, "  ");
        for node in &self.nodes {
            for (k, alt) in node.alts().iter().enumerate() {
                let _ = writeln!(
                    s,
                    "  subgraph cluster_{}_{k} {{\n    label=\"{} alt {k}\";",
                    node.id,
                    node.label.replace('"', "'")
                );
                emit_seq(&mut s, alt, "    ");
                s.push_str("  }\n");
                if let Some(&first) = alt.first() {
                    let _ = writeln!(s, "  n{} -> n{first} [style=dotted];", node.id);
                }
            }
        }
        for node in &self.nodes {
            for p in &node.art_preds {
                let _ = writeln!(s, "  n{p} -> n{} [style=dashed, color=gray];", node.id);
            }
        }
        s.push_str("}\n");
        s
    }
}

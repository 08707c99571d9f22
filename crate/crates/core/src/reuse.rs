//! Pool of released auxiliary qubits and the choices for reusing them.

use crate::callgraph::NodeId;
use serde::Serialize;

/// A released physical qubit, free from layer `depth` on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PoolEntry {
    pub qubit: usize,
    pub depth: usize,
    /// Node whose aux or local released the qubit.
    pub producer: NodeId,
}

/// Entries kept sorted deepest first; among equal depths higher ids come
/// first so the shallow end prefers low ids.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct AuxPool {
    entries: Vec<PoolEntry>,
}

impl AuxPool {
    pub fn new() -> AuxPool {
        AuxPool::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    pub fn insert(&mut self, e: PoolEntry) {
        let key = |x: &PoolEntry| (std::cmp::Reverse(x.depth), std::cmp::Reverse(x.qubit));
        let at = self.entries.partition_point(|x| key(x) < key(&e));
        self.entries.insert(at, e);
    }

    /// Removes the given entries; panics if one is missing.
    pub fn take(&mut self, chosen: &[PoolEntry]) {
        for c in chosen {
            let i = self.entries.iter().position(|e| e == c).expect("entry not in pool");
            self.entries.remove(i);
        }
    }
}

/// Range of reuse counts for a node needing `need` new qubits: at least
/// enough to stay within `max_width`, at most what the pool holds. `None`
/// when no count fits.
pub fn reuse_bounds(need: usize, pool: usize, allocated: usize, max_width: Option<usize>) -> Option<(usize, usize)> {
    let k_max = need.min(pool);
    let k_min = match max_width {
        Some(w) => (allocated + need).saturating_sub(w),
        None => 0,
    };
    (k_min <= k_max).then_some((k_min, k_max))
}

/// Candidate sets of `k` entries: contiguous windows of the depth-sorted
/// pool, shallowest first. Windows with the same depth profile as an
/// earlier one are dropped since they delay the node identically.
pub fn nondominated_choices(pool: &AuxPool, k: usize) -> Vec<Vec<PoolEntry>> {
    let n = pool.len();
    if k == 0 {
        return vec![vec![]];
    }
    if k > n {
        return vec![];
    }
    let mut out: Vec<Vec<PoolEntry>> = Vec::new();
    for start in (0..=n - k).rev() {
        let w = pool.entries[start..start + k].to_vec();
        let sig: Vec<usize> = w.iter().map(|e| e.depth).collect();
        if !out.iter().any(|o| o.iter().map(|e| e.depth).eq(sig.iter().copied())) {
            out.push(w);
        }
    }
    out
}

/// Where a node lands once its reused entries are fixed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Placement {
    pub start: usize,
    pub end: usize,
    /// Physical qubits handed to the node: reused entries first, then fresh.
    pub qubits: Vec<usize>,
    pub reused: Vec<PoolEntry>,
}

/// Takes `window` from the pool, allocates the rest of `need` fresh from
/// `next_phys`, and schedules the node after both its wire dependencies
/// (`dep_depth`) and the release of every reused qubit.
pub fn apply_reuse(
    pool: &mut AuxPool,
    window: &[PoolEntry],
    need: usize,
    dep_depth: usize,
    node_depth: usize,
    next_phys: &mut usize,
) -> Placement {
    assert!(window.len() <= need);
    pool.take(window);
    let mut qubits: Vec<usize> = window.iter().map(|e| e.qubit).collect();
    for _ in window.len()..need {
        qubits.push(*next_phys);
        *next_phys += 1;
    }
    let start = window.iter().map(|e| e.depth).max().unwrap_or(0).max(dep_depth);
    Placement { start, end: start + node_depth, qubits, reused: window.to_vec() }
}

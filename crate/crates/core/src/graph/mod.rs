//! Finite directed mixed graphs over time-indexed nodes.
//!
//! A [`DirectedMixedGraph`] holds directed edges (optionally weighted with a
//! linear coefficient) and bi-directed edges. With no bi-directed edges it is
//! a DAG and every operation behaves as the DAG version.
//!
//! Set-valued results are returned as `BTreeSet<TimedNode>`, ordered by
//! (time, component, kind).

mod io;
mod projection;
mod separation;

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{GraphJson, NodeRef};
pub use separation::{
    EdgeMark, Path, Separation, SeparationQuery, UndirectedGraph, DEFAULT_PATH_LIMIT,
};

/// Whether a node is a process component or one of its innovations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Endogenous,
    Innovation,
}

/// A node `S^i_t` (or `ε^i_t`) of a full-time graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimedNode {
    pub component: usize,
    pub time: i64,
    pub kind: NodeKind,
}

impl TimedNode {
    pub fn endo(component: usize, time: i64) -> Self {
        Self { component, time, kind: NodeKind::Endogenous }
    }

    pub fn innov(component: usize, time: i64) -> Self {
        Self { component, time, kind: NodeKind::Innovation }
    }

    pub fn is_endogenous(&self) -> bool {
        self.kind == NodeKind::Endogenous
    }

    /// Same node moved `dt` steps in time.
    pub fn shifted(&self, dt: i64) -> Self {
        Self { time: self.time + dt, ..*self }
    }
}

impl Ord for TimedNode {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.time, self.component, self.kind).cmp(&(other.time, other.component, other.kind))
    }
}

impl PartialOrd for TimedNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for TimedNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            NodeKind::Endogenous => write!(f, "S{}@{}", self.component, self.time),
            NodeKind::Innovation => write!(f, "e{}@{}", self.component, self.time),
        }
    }
}

/// A directed edge with its optional linear coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectedEdge {
    pub from: TimedNode,
    pub to: TimedNode,
    pub coefficient: Option<f64>,
}

/// Immutable acyclic directed mixed graph.
#[derive(Debug, Clone)]
pub struct DirectedMixedGraph {
    nodes: Vec<TimedNode>,
    index: HashMap<TimedNode, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    spouses: Vec<Vec<usize>>,
    coefficients: HashMap<(usize, usize), f64>,
    topo: Vec<usize>,
}

impl DirectedMixedGraph {
    /// Builds and validates a graph. Duplicate directed edges are merged
    /// (coefficients added); duplicate bi-directed edges are merged.
    pub fn new(
        nodes: impl IntoIterator<Item = TimedNode>,
        directed: impl IntoIterator<Item = DirectedEdge>,
        bidirected: impl IntoIterator<Item = (TimedNode, TimedNode)>,
    ) -> Result<Self> {
        let mut nodes: Vec<TimedNode> = nodes.into_iter().collect();
        nodes.sort();
        for w in nodes.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateNode(w[0]));
            }
        }
        let index: HashMap<TimedNode, usize> =
            nodes.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let n = nodes.len();
        let lookup = |v: &TimedNode| index.get(v).copied().ok_or(Error::UnknownNode(*v));

        let mut dir: std::collections::BTreeMap<(usize, usize), Option<f64>> = Default::default();
        for e in directed {
            let (u, v) = (lookup(&e.from)?, lookup(&e.to)?);
            if u == v {
                return Err(Error::SelfLoop(e.from));
            }
            dir.entry((u, v))
                .and_modify(|c| *c = c.zip(e.coefficient).map(|(a, b)| a + b))
                .or_insert(e.coefficient);
        }
        let mut bi = BTreeSet::new();
        for (a, b) in bidirected {
            let (u, v) = (lookup(&a)?, lookup(&b)?);
            if u == v {
                return Err(Error::SelfLoop(a));
            }
            bi.insert((u.min(v), u.max(v)));
        }

        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        let mut spouses = vec![Vec::new(); n];
        let mut coefficients = HashMap::new();
        for (&(u, v), c) in &dir {
            children[u].push(v);
            parents[v].push(u);
            if let Some(c) = c {
                coefficients.insert((u, v), *c);
            }
        }
        for &(u, v) in &bi {
            spouses[u].push(v);
            spouses[v].push(u);
        }
        for l in parents.iter_mut().chain(children.iter_mut()).chain(spouses.iter_mut()) {
            l.sort_unstable();
        }

        let topo = topological_order(&parents, &children)
            .map_err(|i| Error::DirectedCycle(nodes[i]))?;

        Ok(Self { nodes, index, parents, children, spouses, coefficients, topo })
    }

    /// A graph with only directed edges.
    pub fn dag(
        nodes: impl IntoIterator<Item = TimedNode>,
        directed: impl IntoIterator<Item = DirectedEdge>,
    ) -> Result<Self> {
        Self::new(nodes, directed, std::iter::empty())
    }

    pub fn nodes(&self) -> &[TimedNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, v: &TimedNode) -> bool {
        self.index.contains_key(v)
    }

    pub fn has_bidirected(&self) -> bool {
        self.spouses.iter().any(|s| !s.is_empty())
    }

    pub fn directed_edges(&self) -> Vec<DirectedEdge> {
        let mut out = Vec::new();
        for (u, ch) in self.children.iter().enumerate() {
            for &v in ch {
                out.push(DirectedEdge {
                    from: self.nodes[u],
                    to: self.nodes[v],
                    coefficient: self.coefficients.get(&(u, v)).copied(),
                });
            }
        }
        out
    }

    /// Bi-directed edges as ordered pairs `(a, b)` with `a < b`.
    pub fn bidirected_edges(&self) -> Vec<(TimedNode, TimedNode)> {
        let mut out = Vec::new();
        for (u, sp) in self.spouses.iter().enumerate() {
            for &v in sp.iter().filter(|&&v| v > u) {
                out.push((self.nodes[u], self.nodes[v]));
            }
        }
        out
    }

    pub fn has_directed_edge(&self, from: &TimedNode, to: &TimedNode) -> bool {
        match (self.index.get(from), self.index.get(to)) {
            (Some(&u), Some(&v)) => self.children[u].binary_search(&v).is_ok(),
            _ => false,
        }
    }

    pub fn has_bidirected_edge(&self, a: &TimedNode, b: &TimedNode) -> bool {
        match (self.index.get(a), self.index.get(b)) {
            (Some(&u), Some(&v)) => self.spouses[u].binary_search(&v).is_ok(),
            _ => false,
        }
    }

    pub fn coefficient(&self, from: &TimedNode, to: &TimedNode) -> Option<f64> {
        let (u, v) = (*self.index.get(from)?, *self.index.get(to)?);
        self.coefficients.get(&(u, v)).copied()
    }

    /// Nodes in a topological order of the directed part.
    pub fn topological_order(&self) -> Vec<TimedNode> {
        self.topo.iter().map(|&i| self.nodes[i]).collect()
    }

    pub fn ancestors(&self, s: &[TimedNode]) -> Result<BTreeSet<TimedNode>> {
        let idx = self.indices(s)?;
        Ok(self.to_set(&self.ancestor_mask(&idx)))
    }

    pub fn descendants(&self, s: &[TimedNode]) -> Result<BTreeSet<TimedNode>> {
        let idx = self.indices(s)?;
        Ok(self.to_set(&self.descendant_mask(&idx)))
    }

    pub fn parents(&self, s: &[TimedNode]) -> Result<BTreeSet<TimedNode>> {
        self.neighbours(s, &self.parents)
    }

    pub fn children(&self, s: &[TimedNode]) -> Result<BTreeSet<TimedNode>> {
        self.neighbours(s, &self.children)
    }

    /// Spouses over bi-directed edges; every node is its own spouse.
    pub fn spouses(&self, s: &[TimedNode]) -> Result<BTreeSet<TimedNode>> {
        let mut out = self.neighbours(s, &self.spouses)?;
        out.extend(s.iter().copied());
        Ok(out)
    }

    /// Subgraph induced by `keep`.
    pub fn induced(&self, keep: &[TimedNode]) -> Result<Self> {
        let idx = self.indices(keep)?;
        let mut mask = vec![false; self.len()];
        for &i in &idx {
            mask[i] = true;
        }
        self.induced_mask(&mask)
    }

    pub(crate) fn induced_mask(&self, mask: &[bool]) -> Result<Self> {
        let nodes = self.nodes.iter().zip(mask).filter(|(_, &m)| m).map(|(v, _)| *v);
        let directed = self
            .directed_edges()
            .into_iter()
            .filter(|e| mask[self.index[&e.from]] && mask[self.index[&e.to]]);
        let bidirected = self
            .bidirected_edges()
            .into_iter()
            .filter(|(a, b)| mask[self.index[a]] && mask[self.index[b]]);
        Self::new(nodes, directed, bidirected)
    }

    pub(crate) fn idx(&self, v: &TimedNode) -> Result<usize> {
        self.index.get(v).copied().ok_or(Error::UnknownNode(*v))
    }

    pub(crate) fn indices(&self, s: &[TimedNode]) -> Result<Vec<usize>> {
        s.iter().map(|v| self.idx(v)).collect()
    }

    pub(crate) fn node(&self, i: usize) -> TimedNode {
        self.nodes[i]
    }

    pub(crate) fn parent_idx(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub(crate) fn child_idx(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub(crate) fn spouse_idx(&self, i: usize) -> &[usize] {
        &self.spouses[i]
    }

    pub(crate) fn coef_idx(&self, u: usize, v: usize) -> Option<f64> {
        self.coefficients.get(&(u, v)).copied()
    }

    pub(crate) fn topo_idx(&self) -> &[usize] {
        &self.topo
    }

    pub(crate) fn ancestor_mask(&self, s: &[usize]) -> Vec<bool> {
        self.closure(s, &self.parents)
    }

    pub(crate) fn descendant_mask(&self, s: &[usize]) -> Vec<bool> {
        self.closure(s, &self.children)
    }

    pub(crate) fn to_set(&self, mask: &[bool]) -> BTreeSet<TimedNode> {
        mask.iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| self.nodes[i])
            .collect()
    }

    fn closure(&self, s: &[usize], step: &[Vec<usize>]) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &i in s {
            if !seen[i] {
                seen[i] = true;
                queue.push_back(i);
            }
        }
        while let Some(u) = queue.pop_front() {
            for &w in &step[u] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    fn neighbours(&self, s: &[TimedNode], step: &[Vec<usize>]) -> Result<BTreeSet<TimedNode>> {
        let idx = self.indices(s)?;
        Ok(idx.iter().flat_map(|&i| step[i].iter().map(|&j| self.nodes[j])).collect())
    }
}

/// Kahn's algorithm; on failure returns a node on a cycle.
fn topological_order(parents: &[Vec<usize>], children: &[Vec<usize>]) -> Result<Vec<usize>, usize> {
    let n = parents.len();
    let mut indeg: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for &w in &children[u] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                queue.push_back(w);
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err((0..n).find(|&i| indeg[i] > 0).unwrap_or(0))
    }
}

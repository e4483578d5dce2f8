//! Moralization, augmentation and the separation criteria.
//!
//! The production check for m-separation is the ancestral-augmented-graph
//! criterion: `B` separates `A` from `C` in the augmented graph of the
//! subgraph induced by `AN(A ∪ B ∪ C)`. The path-enumeration oracle checks
//! the blocking definition directly and is meant for cross-checking.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;

use super::{DirectedMixedGraph, TimedNode};
use crate::error::{Error, Result};

/// Default cap on enumerated simple paths for the oracle.
pub const DEFAULT_PATH_LIMIT: usize = 1_000_000;

/// Three pairwise disjoint node sets: is `a` separated from `c` given `b`?
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparationQuery {
    pub a: BTreeSet<TimedNode>,
    pub b: BTreeSet<TimedNode>,
    pub c: BTreeSet<TimedNode>,
}

impl SeparationQuery {
    pub fn new(
        a: impl IntoIterator<Item = TimedNode>,
        b: impl IntoIterator<Item = TimedNode>,
        c: impl IntoIterator<Item = TimedNode>,
    ) -> Result<Self> {
        let q = Self {
            a: a.into_iter().collect(),
            b: b.into_iter().collect(),
            c: c.into_iter().collect(),
        };
        if let Some(v) = q.a.intersection(&q.b).chain(q.a.intersection(&q.c)).next() {
            return Err(Error::OverlappingSets(*v));
        }
        if let Some(v) = q.b.intersection(&q.c).next() {
            return Err(Error::OverlappingSets(*v));
        }
        Ok(q)
    }

    pub fn all_nodes(&self) -> impl Iterator<Item = &TimedNode> {
        self.a.iter().chain(&self.b).chain(&self.c)
    }
}

/// Orientation of a path edge, read in the direction of travel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeMark {
    /// `u -> v`
    Forward,
    /// `u <- v`
    Backward,
    /// `u <-> v`
    Bidirected,
}

impl EdgeMark {
    fn head_at_end(self) -> bool {
        matches!(self, EdgeMark::Forward | EdgeMark::Bidirected)
    }

    fn head_at_start(self) -> bool {
        matches!(self, EdgeMark::Backward | EdgeMark::Bidirected)
    }
}

/// A path `nodes[0] marks[0] nodes[1] ... nodes[k]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Path {
    pub nodes: Vec<TimedNode>,
    pub marks: Vec<EdgeMark>,
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.nodes.iter().enumerate() {
            if i > 0 {
                let arrow = match self.marks[i - 1] {
                    EdgeMark::Forward => "->",
                    EdgeMark::Backward => "<-",
                    EdgeMark::Bidirected => "<->",
                };
                write!(f, " {arrow} ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Verdict of a separation check; `witness` is an m-connecting path when the
/// sets are not separated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Separation {
    pub separated: bool,
    pub witness: Option<Path>,
}

/// Simple undirected graph used for moral and augmented graphs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    nodes: Vec<TimedNode>,
    adj: Vec<BTreeSet<usize>>,
}

impl UndirectedGraph {
    pub fn nodes(&self) -> &[TimedNode] {
        &self.nodes
    }

    /// Edges as `(a, b)` with `a < b`.
    pub fn edges(&self) -> BTreeSet<(TimedNode, TimedNode)> {
        let mut out = BTreeSet::new();
        for (u, nb) in self.adj.iter().enumerate() {
            for &v in nb.iter().filter(|&&v| v > u) {
                out.insert((self.nodes[u], self.nodes[v]));
            }
        }
        out
    }

    pub fn has_edge(&self, a: &TimedNode, b: &TimedNode) -> bool {
        let pos = |x: &TimedNode| self.nodes.binary_search(x).ok();
        match (pos(a), pos(b)) {
            (Some(u), Some(v)) => self.adj[u].contains(&v),
            _ => false,
        }
    }
}

fn adjacency_to_graph(g: &DirectedMixedGraph, mask: &[bool], adj: &[BTreeSet<usize>]) -> UndirectedGraph {
    // re-index onto the masked nodes, keeping the global node order
    let keep: Vec<usize> = (0..g.len()).filter(|&i| mask[i]).collect();
    let mut pos = vec![usize::MAX; g.len()];
    for (k, &i) in keep.iter().enumerate() {
        pos[i] = k;
    }
    UndirectedGraph {
        nodes: keep.iter().map(|&i| g.node(i)).collect(),
        adj: keep
            .iter()
            .map(|&i| adj[i].iter().map(|&j| pos[j]).collect())
            .collect(),
    }
}

impl DirectedMixedGraph {
    /// Moral graph of a DAG: skeleton plus edges between parents of a
    /// common child.
    pub fn moralize(&self) -> Result<UndirectedGraph> {
        if self.has_bidirected() {
            return Err(Error::BidirectedPresent("moralize; use augment for ADMGs"));
        }
        let n = self.len();
        let mut adj = vec![BTreeSet::new(); n];
        for v in 0..n {
            let pa = self.parent_idx(v);
            for (k, &u) in pa.iter().enumerate() {
                adj[u].insert(v);
                adj[v].insert(u);
                for &w in &pa[k + 1..] {
                    adj[u].insert(w);
                    adj[w].insert(u);
                }
            }
        }
        Ok(adjacency_to_graph(self, &vec![true; n], &adj))
    }

    /// Augmented graph: `v - w` iff `v` and `w` are collider connected.
    pub fn augment(&self) -> UndirectedGraph {
        let mask = vec![true; self.len()];
        let adj = self.augmented_adjacency(&mask);
        adjacency_to_graph(self, &mask, &adj)
    }

    /// Collider connectivity in the subgraph induced by `mask`.
    ///
    /// Two non-adjacent nodes are collider connected iff both lie in
    /// `D ∪ pa(D)` for some district `D` (bi-directed component).
    pub(crate) fn augmented_adjacency(&self, mask: &[bool]) -> Vec<BTreeSet<usize>> {
        let n = self.len();
        let mut adj = vec![BTreeSet::new(); n];
        for u in (0..n).filter(|&u| mask[u]) {
            for &v in self.child_idx(u).iter().chain(self.spouse_idx(u)) {
                if mask[v] {
                    adj[u].insert(v);
                    adj[v].insert(u);
                }
            }
        }
        let mut district = vec![usize::MAX; n];
        for s in (0..n).filter(|&s| mask[s]) {
            if district[s] != usize::MAX || self.spouse_idx(s).iter().all(|&w| !mask[w]) {
                continue;
            }
            let mut members = vec![s];
            district[s] = s;
            let mut head = 0;
            while head < members.len() {
                let u = members[head];
                head += 1;
                for &w in self.spouse_idx(u) {
                    if mask[w] && district[w] == usize::MAX {
                        district[w] = s;
                        members.push(w);
                    }
                }
            }
            let mut closed: BTreeSet<usize> = members.iter().copied().collect();
            for &m in &members {
                closed.extend(self.parent_idx(m).iter().filter(|&&p| mask[p]));
            }
            let closed: Vec<usize> = closed.into_iter().collect();
            for (k, &u) in closed.iter().enumerate() {
                for &w in &closed[k + 1..] {
                    adj[u].insert(w);
                    adj[w].insert(u);
                }
            }
        }
        // singleton districts: a node with its parents
        for v in (0..n).filter(|&v| mask[v]) {
            let pa: Vec<usize> = self.parent_idx(v).iter().copied().filter(|&p| mask[p]).collect();
            for (k, &u) in pa.iter().enumerate() {
                for &w in &pa[k + 1..] {
                    adj[u].insert(w);
                    adj[w].insert(u);
                }
            }
        }
        adj
    }

    fn check_query(&self, q: &SeparationQuery) -> Result<()> {
        // re-validate disjointness in case the fields were mutated
        SeparationQuery::new(q.a.iter().copied(), q.b.iter().copied(), q.c.iter().copied())?;
        for v in q.all_nodes() {
            self.idx(v)?;
        }
        Ok(())
    }

    /// m-separation via the augmented ancestral graph, with a connecting
    /// path as witness when the sets are not separated.
    pub fn m_separated(&self, q: &SeparationQuery) -> Result<Separation> {
        self.check_query(q)?;
        let a = self.indices(&q.a.iter().copied().collect::<Vec<_>>())?;
        let b = self.indices(&q.b.iter().copied().collect::<Vec<_>>())?;
        let c = self.indices(&q.c.iter().copied().collect::<Vec<_>>())?;
        let all: Vec<usize> = a.iter().chain(&b).chain(&c).copied().collect();
        let mask = self.ancestor_mask(&all);
        let adj = self.augmented_adjacency(&mask);
        match undirected_path(&adj, &a, &b, &c, self.len()) {
            None => Ok(Separation { separated: true, witness: None }),
            Some(route) => {
                let witness = self.reconstruct_witness(&route, &mask, &a, &b, &c);
                Ok(Separation { separated: false, witness })
            }
        }
    }

    /// d-separation in a DAG through the moral graph of the ancestral set.
    pub fn d_separated(&self, q: &SeparationQuery) -> Result<bool> {
        if self.has_bidirected() {
            return Err(Error::BidirectedPresent("d-separation; use m_separated"));
        }
        self.check_query(q)?;
        let all: Vec<TimedNode> = q.all_nodes().copied().collect();
        let an: Vec<TimedNode> = self.ancestors(&all)?.into_iter().collect();
        let moral = self.induced(&an)?.moralize()?;
        let pos = |v: &TimedNode| moral.nodes.binary_search(v).expect("ancestral node");
        let a: Vec<usize> = q.a.iter().map(pos).collect();
        let b: Vec<usize> = q.b.iter().map(pos).collect();
        let c: Vec<usize> = q.c.iter().map(pos).collect();
        Ok(undirected_path(&moral.adj, &a, &b, &c, moral.nodes.len()).is_none())
    }

    /// Direct check of the path-blocking definition by enumerating simple
    /// paths. Errors once more than `limit` partial paths were explored.
    pub fn m_separated_oracle(&self, q: &SeparationQuery, limit: usize) -> Result<bool> {
        self.check_query(q)?;
        Ok(self.search_open_path(q, limit)?.is_none())
    }

    /// Whether `path` is a simple path of this graph that is open given `b`.
    pub fn is_open_path(&self, path: &Path, b: &BTreeSet<TimedNode>) -> bool {
        if path.nodes.is_empty() || path.marks.len() + 1 != path.nodes.len() {
            return false;
        }
        let distinct: BTreeSet<_> = path.nodes.iter().collect();
        if distinct.len() != path.nodes.len() {
            return false;
        }
        for (k, m) in path.marks.iter().enumerate() {
            let (u, v) = (&path.nodes[k], &path.nodes[k + 1]);
            let ok = match m {
                EdgeMark::Forward => self.has_directed_edge(u, v),
                EdgeMark::Backward => self.has_directed_edge(v, u),
                EdgeMark::Bidirected => self.has_bidirected_edge(u, v),
            };
            if !ok {
                return false;
            }
        }
        let Ok(bi) = self.indices(&b.iter().copied().collect::<Vec<_>>()) else {
            return false;
        };
        let an_b = self.ancestor_mask(&bi);
        (1..path.nodes.len() - 1).all(|k| {
            let v = self.idx(&path.nodes[k]).expect("checked above");
            let collider = path.marks[k - 1].head_at_end() && path.marks[k].head_at_start();
            if collider {
                an_b[v]
            } else {
                !b.contains(&path.nodes[k])
            }
        })
    }

    /// Depth-first search for an open simple path from `a` to `c`.
    fn search_open_path(&self, q: &SeparationQuery, limit: usize) -> Result<Option<Path>> {
        let b = self.indices(&q.b.iter().copied().collect::<Vec<_>>())?;
        let an_b = self.ancestor_mask(&b);
        let mut in_b = vec![false; self.len()];
        for &i in &b {
            in_b[i] = true;
        }
        let mut in_c = vec![false; self.len()];
        for v in &q.c {
            in_c[self.idx(v)?] = true;
        }
        let mut budget = limit;
        for start in &q.a {
            let s = self.idx(start)?;
            let mut on_path = vec![false; self.len()];
            on_path[s] = true;
            let mut nodes = vec![s];
            let mut marks = Vec::new();
            let ctx = SearchCtx { an_b: &an_b, in_b: &in_b, in_c: &in_c };
            if self.dfs(&ctx, &mut on_path, &mut nodes, &mut marks, &mut budget, limit)? {
                return Ok(Some(Path {
                    nodes: nodes.iter().map(|&i| self.node(i)).collect(),
                    marks,
                }));
            }
        }
        Ok(None)
    }

    fn dfs(
        &self,
        ctx: &SearchCtx<'_>,
        on_path: &mut [bool],
        nodes: &mut Vec<usize>,
        marks: &mut Vec<EdgeMark>,
        budget: &mut usize,
        limit: usize,
    ) -> Result<bool> {
        let u = *nodes.last().expect("non-empty path");
        let steps = self
            .child_idx(u)
            .iter()
            .map(|&w| (w, EdgeMark::Forward))
            .chain(self.parent_idx(u).iter().map(|&w| (w, EdgeMark::Backward)))
            .chain(self.spouse_idx(u).iter().map(|&w| (w, EdgeMark::Bidirected)));
        for (w, mark) in steps {
            if on_path[w] {
                continue;
            }
            // u becomes interior once we leave it; check its status
            if let Some(&prev) = marks.last() {
                let prev: EdgeMark = prev;
                let collider = prev.head_at_end() && mark.head_at_start();
                let open = if collider { ctx.an_b[u] } else { !ctx.in_b[u] };
                if !open {
                    continue;
                }
            }
            if *budget == 0 {
                return Err(Error::PathLimitExceeded(limit));
            }
            *budget -= 1;
            nodes.push(w);
            marks.push(mark);
            if ctx.in_c[w] {
                return Ok(true);
            }
            on_path[w] = true;
            if self.dfs(ctx, on_path, nodes, marks, budget, limit)? {
                return Ok(true);
            }
            on_path[w] = false;
            nodes.pop();
            marks.pop();
        }
        Ok(false)
    }

    /// Builds an m-connecting path from a route in the augmented graph.
    ///
    /// Augmented edges are expanded into collider paths; colliders without
    /// descendants in `B` are bypassed through their directed path to `A`
    /// or `C` (first such collider when all reach `C`, otherwise the last
    /// one reaching `A`). The result is loop-erased and re-verified; if that
    /// fails a bounded depth-first search supplies the witness.
    fn reconstruct_witness(
        &self,
        route: &[usize],
        mask: &[bool],
        a: &[usize],
        b: &[usize],
        c: &[usize],
    ) -> Option<Path> {
        let b_set: BTreeSet<TimedNode> = b.iter().map(|&i| self.node(i)).collect();
        let built = self.expand_route(route, mask).map(|walk| {
            let walk = self.bypass_colliders(walk, mask, a, b, c);
            let walk = loop_erase(walk);
            trim_to_endpoints(walk, a, c)
        });
        if let Some((nodes, marks)) = built {
            let path = Path { nodes: nodes.iter().map(|&i| self.node(i)).collect(), marks };
            if self.is_open_path(&path, &b_set) {
                return Some(path);
            }
        }
        let q = SeparationQuery {
            a: a.iter().map(|&i| self.node(i)).collect(),
            b: b_set,
            c: c.iter().map(|&i| self.node(i)).collect(),
        };
        self.search_open_path(&q, DEFAULT_PATH_LIMIT).ok().flatten()
    }

    fn expand_route(&self, route: &[usize], mask: &[bool]) -> Option<(Vec<usize>, Vec<EdgeMark>)> {
        let mut nodes = vec![route[0]];
        let mut marks = Vec::new();
        for pair in route.windows(2) {
            let (u, v) = (pair[0], pair[1]);
            if self.child_idx(u).binary_search(&v).is_ok() {
                marks.push(EdgeMark::Forward);
                nodes.push(v);
            } else if self.parent_idx(u).binary_search(&v).is_ok() {
                marks.push(EdgeMark::Backward);
                nodes.push(v);
            } else if self.spouse_idx(u).binary_search(&v).is_ok() {
                marks.push(EdgeMark::Bidirected);
                nodes.push(v);
            } else {
                let (ns, ms) = self.collider_path(u, v, mask)?;
                nodes.extend(ns);
                marks.extend(ms);
            }
        }
        Some((nodes, marks))
    }

    /// Path `u *-> c1 <-> ... <-> ck <-* v` inside `mask`, excluding `u`.
    fn collider_path(&self, u: usize, v: usize, mask: &[bool]) -> Option<(Vec<usize>, Vec<EdgeMark>)> {
        let n = self.len();
        let mut prev = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        for &w in self.child_idx(u).iter().chain(self.spouse_idx(u)) {
            if mask[w] && w != v && prev[w] == usize::MAX {
                prev[w] = u;
                queue.push_back(w);
            }
        }
        while let Some(x) = queue.pop_front() {
            let into_v = if self.parent_idx(x).binary_search(&v).is_ok() {
                Some(EdgeMark::Backward)
            } else if self.spouse_idx(x).binary_search(&v).is_ok() {
                Some(EdgeMark::Bidirected)
            } else {
                None
            };
            if let Some(last) = into_v {
                let mut chain = vec![x];
                let mut y = x;
                while prev[y] != u {
                    y = prev[y];
                    chain.push(y);
                }
                chain.reverse();
                let first = if self.child_idx(u).binary_search(&chain[0]).is_ok() {
                    EdgeMark::Forward
                } else {
                    EdgeMark::Bidirected
                };
                let mut marks = vec![first];
                marks.extend(std::iter::repeat_n(EdgeMark::Bidirected, chain.len() - 1));
                marks.push(last);
                chain.push(v);
                return Some((chain, marks));
            }
            for &w in self.spouse_idx(x) {
                if mask[w] && w != u && w != v && prev[w] == usize::MAX {
                    prev[w] = x;
                    queue.push_back(w);
                }
            }
        }
        None
    }

    fn bypass_colliders(
        &self,
        (nodes, marks): (Vec<usize>, Vec<EdgeMark>),
        mask: &[bool],
        a: &[usize],
        b: &[usize],
        c: &[usize],
    ) -> (Vec<usize>, Vec<EdgeMark>) {
        let an_b = self.ancestor_mask(b);
        let reach_a = self.ancestor_mask(a);
        let reach_c = self.ancestor_mask(c);
        // interior colliders that do not have a descendant in B
        let blocked: Vec<usize> = (1..nodes.len().saturating_sub(1))
            .filter(|&k| marks[k - 1].head_at_end() && marks[k].head_at_start() && !an_b[nodes[k]])
            .collect();
        if blocked.is_empty() {
            return (nodes, marks);
        }
        let mut in_a = vec![false; self.len()];
        a.iter().for_each(|&i| in_a[i] = true);
        let mut in_c = vec![false; self.len()];
        c.iter().for_each(|&i| in_c[i] = true);

        if blocked.iter().all(|&k| reach_c[nodes[k]]) {
            let k = blocked[0];
            let (down, down_marks) = self.directed_path(nodes[k], &in_c, mask);
            let mut ns = nodes[..=k].to_vec();
            let mut ms = marks[..k].to_vec();
            ns.extend(&down[1..]);
            ms.extend(down_marks);
            return (ns, ms);
        }
        let k = *blocked.iter().rev().find(|&&k| reach_a[nodes[k]]).expect("collider reaching A");
        let (down, down_marks) = self.directed_path(nodes[k], &in_a, mask);
        // reverse: a <- ... <- delta
        let mut ns: Vec<usize> = down.iter().rev().copied().collect();
        let mut ms: Vec<EdgeMark> = down_marks.iter().rev().map(|_| EdgeMark::Backward).collect();
        let next = blocked.iter().copied().find(|&j| j > k);
        match next {
            Some(j) => {
                ns.extend(&nodes[k + 1..=j]);
                ms.extend(&marks[k..j]);
                let (down, down_marks) = self.directed_path(nodes[j], &in_c, mask);
                ns.extend(&down[1..]);
                ms.extend(down_marks);
            }
            None => {
                ns.extend(&nodes[k + 1..]);
                ms.extend(&marks[k..]);
            }
        }
        (ns, ms)
    }

    /// Shortest directed path from `s` to a target node within `mask`.
    fn directed_path(&self, s: usize, target: &[bool], mask: &[bool]) -> (Vec<usize>, Vec<EdgeMark>) {
        let mut prev = vec![usize::MAX; self.len()];
        prev[s] = s;
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            if target[x] {
                let mut path = vec![x];
                let mut y = x;
                while y != s {
                    y = prev[y];
                    path.push(y);
                }
                path.reverse();
                let marks = vec![EdgeMark::Forward; path.len() - 1];
                return (path, marks);
            }
            for &w in self.child_idx(x) {
                if mask[w] && prev[w] == usize::MAX {
                    prev[w] = x;
                    queue.push_back(w);
                }
            }
        }
        (vec![s], Vec::new())
    }

    /// Extends separated `A`, `C` to a partition `A⁺ ∪ B ∪ C⁺` of the nodes.
    ///
    /// Requires the graph to consist of exactly `AN(A ∪ B ∪ C)`. Components of
    /// the augmented graph minus `B` that touch neither set go to `A⁺`.
    pub fn extend_separated_sets(
        &self,
        q: &SeparationQuery,
    ) -> Result<(BTreeSet<TimedNode>, BTreeSet<TimedNode>)> {
        self.check_query(q)?;
        let all: Vec<TimedNode> = q.all_nodes().copied().collect();
        if self.ancestors(&all)?.len() != self.len() {
            return Err(Error::Precondition(
                "graph nodes must equal AN(A ∪ B ∪ C)".into(),
            ));
        }
        if !self.m_separated(q)?.separated {
            return Err(Error::Precondition("A and C are not separated given B".into()));
        }
        let n = self.len();
        let adj = self.augmented_adjacency(&vec![true; n]);
        let mut in_b = vec![false; n];
        for v in &q.b {
            in_b[self.idx(v)?] = true;
        }
        let mut comp = vec![usize::MAX; n];
        let mut ncomp = 0;
        for s in 0..n {
            if in_b[s] || comp[s] != usize::MAX {
                continue;
            }
            comp[s] = ncomp;
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &w in &adj[u] {
                    if !in_b[w] && comp[w] == usize::MAX {
                        comp[w] = ncomp;
                        stack.push(w);
                    }
                }
            }
            ncomp += 1;
        }
        let mut c_comps = BTreeSet::new();
        for v in &q.c {
            c_comps.insert(comp[self.idx(v)?]);
        }
        let mut a_plus = BTreeSet::new();
        let mut c_plus = BTreeSet::new();
        for i in (0..n).filter(|&i| !in_b[i]) {
            if c_comps.contains(&comp[i]) {
                c_plus.insert(self.node(i));
            } else {
                a_plus.insert(self.node(i));
            }
        }
        Ok((a_plus, c_plus))
    }
}

struct SearchCtx<'a> {
    an_b: &'a [bool],
    in_b: &'a [bool],
    in_c: &'a [bool],
}

/// Shortest path from `a` to `c` avoiding `b`, in an undirected adjacency.
fn undirected_path(
    adj: &[BTreeSet<usize>],
    a: &[usize],
    b: &[usize],
    c: &[usize],
    n: usize,
) -> Option<Vec<usize>> {
    let mut blocked = vec![false; n];
    for &i in b {
        blocked[i] = true;
    }
    let mut is_c = vec![false; n];
    for &i in c {
        is_c[i] = true;
    }
    let mut prev = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for &s in a {
        if prev[s] == usize::MAX {
            prev[s] = s;
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        if is_c[u] {
            let mut route = vec![u];
            let mut x = u;
            while prev[x] != x {
                x = prev[x];
                route.push(x);
            }
            route.reverse();
            return Some(route);
        }
        for &w in &adj[u] {
            if !blocked[w] && prev[w] == usize::MAX {
                prev[w] = u;
                queue.push_back(w);
            }
        }
    }
    None
}

/// Removes cycles from a walk: on revisiting a node, the loop is cut out.
fn loop_erase((nodes, marks): (Vec<usize>, Vec<EdgeMark>)) -> (Vec<usize>, Vec<EdgeMark>) {
    let mut ns: Vec<usize> = Vec::with_capacity(nodes.len());
    let mut ms: Vec<EdgeMark> = Vec::with_capacity(marks.len());
    for (k, &v) in nodes.iter().enumerate() {
        if let Some(pos) = ns.iter().position(|&x| x == v) {
            ns.truncate(pos + 1);
            ms.truncate(pos);
        } else {
            if k > 0 {
                ms.push(marks[k - 1]);
            }
            ns.push(v);
        }
    }
    (ns, ms)
}

/// Keeps the sub-path from the last `A` node to the first `C` node after it.
fn trim_to_endpoints(
    (nodes, marks): (Vec<usize>, Vec<EdgeMark>),
    a: &[usize],
    c: &[usize],
) -> (Vec<usize>, Vec<EdgeMark>) {
    let first_c = nodes.iter().position(|v| c.contains(v)).unwrap_or(nodes.len() - 1);
    let last_a = nodes[..=first_c].iter().rposition(|v| a.contains(v)).unwrap_or(0);
    (nodes[last_a..=first_c].to_vec(), marks[last_a..first_c].to_vec())
}

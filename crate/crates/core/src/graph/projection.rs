use std::collections::{BTreeMap, BTreeSet};

use super::{DirectedEdge, DirectedMixedGraph, TimedNode};
use crate::error::{Error, Result};

type Reach = BTreeMap<usize, Option<f64>>;

impl DirectedMixedGraph {
    /// Latent projection of a DAG onto `keep`.
    ///
    /// `v -> w` iff `G` has a directed path from `v` to `w` whose interior is
    /// latent; `v <-> w` iff some latent node reaches both through latent-only
    /// directed paths. Directed coefficients are sums of path products when
    /// every edge involved carries one.
    pub fn latent_project(&self, keep: &[TimedNode]) -> Result<DirectedMixedGraph> {
        if self.has_bidirected() {
            return Err(Error::BidirectedPresent("latent projection expects a DAG"));
        }
        let n = self.len();
        let mut visible = vec![false; n];
        for i in self.indices(keep)? {
            visible[i] = true;
        }

        // reach[u] for latent u: visible nodes hit by latent-only paths out of u
        let mut reach: Vec<Reach> = vec![Reach::new(); n];
        for &u in self.topo_idx().iter().rev() {
            if visible[u] {
                continue;
            }
            let mut r = Reach::new();
            for &c in self.child_idx(u) {
                let ec = self.coef_idx(u, c);
                if visible[c] {
                    accumulate(&mut r, c, ec);
                } else {
                    for (&w, &cw) in &reach[c] {
                        accumulate(&mut r, w, ec.zip(cw).map(|(a, b)| a * b));
                    }
                }
            }
            reach[u] = r;
        }

        let mut directed = Vec::new();
        for v in (0..n).filter(|&v| visible[v]) {
            let mut out = Reach::new();
            for &c in self.child_idx(v) {
                let ec = self.coef_idx(v, c);
                if visible[c] {
                    accumulate(&mut out, c, ec);
                } else {
                    for (&w, &cw) in &reach[c] {
                        accumulate(&mut out, w, ec.zip(cw).map(|(a, b)| a * b));
                    }
                }
            }
            for (w, coefficient) in out {
                directed.push(DirectedEdge { from: self.node(v), to: self.node(w), coefficient });
            }
        }

        let mut bidirected = BTreeSet::new();
        for u in (0..n).filter(|&u| !visible[u]) {
            let hits: Vec<usize> = reach[u].keys().copied().collect();
            for (k, &a) in hits.iter().enumerate() {
                for &b in &hits[k + 1..] {
                    bidirected.insert((self.node(a), self.node(b)));
                }
            }
        }

        let nodes: Vec<TimedNode> = (0..n).filter(|&v| visible[v]).map(|v| self.node(v)).collect();
        DirectedMixedGraph::new(nodes, directed, bidirected)
    }
}

fn accumulate(r: &mut Reach, w: usize, c: Option<f64>) {
    r.entry(w)
        .and_modify(|x| *x = x.zip(c).map(|(a, b)| a + b))
        .or_insert(c);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: usize) -> TimedNode {
        TimedNode::endo(i, 0)
    }

    fn e(a: usize, b: usize, c: f64) -> DirectedEdge {
        DirectedEdge { from: v(a), to: v(b), coefficient: Some(c) }
    }

    #[test]
    fn keeping_everything_is_identity() {
        let g = DirectedMixedGraph::dag((0..4).map(v), [e(0, 1, 0.5), e(1, 2, 2.0), e(0, 3, 1.0)]).unwrap();
        let p = g.latent_project(g.nodes()).unwrap();
        assert_eq!(p.directed_edges(), g.directed_edges());
        assert!(!p.has_bidirected());
    }

    #[test]
    fn latent_confounder_becomes_bidirected() {
        let g = DirectedMixedGraph::dag((0..3).map(v), [e(0, 1, 1.0), e(0, 2, 1.0)]).unwrap();
        let p = g.latent_project(&[v(1), v(2)]).unwrap();
        assert_eq!(p.bidirected_edges(), vec![(v(1), v(2))]);
        assert!(p.directed_edges().is_empty());
    }

    #[test]
    fn latent_mediator_collapses_with_product_coefficient() {
        // 0 -> 1 -> 2 plus 0 -> 2 directly
        let g = DirectedMixedGraph::dag((0..3).map(v), [e(0, 1, 0.5), e(1, 2, 3.0), e(0, 2, 1.0)]).unwrap();
        let p = g.latent_project(&[v(0), v(2)]).unwrap();
        assert_eq!(p.coefficient(&v(0), &v(2)), Some(2.5));
    }

    #[test]
    fn rejects_admg_input() {
        let g = DirectedMixedGraph::new((0..2).map(v), [], [(v(0), v(1))]).unwrap();
        assert!(g.latent_project(&[v(0)]).is_err());
    }
}

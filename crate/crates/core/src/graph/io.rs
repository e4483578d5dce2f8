//! DOT export and JSON adjacency import/export.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{DirectedEdge, DirectedMixedGraph, NodeKind, TimedNode};
use crate::error::Result;

/// Reference to an endogenous node by component and signed time offset
/// relative to the anchor `t` (`lag = -1` is `t-1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NodeRef {
    pub component: usize,
    pub lag: i64,
}

impl From<NodeRef> for TimedNode {
    fn from(r: NodeRef) -> Self {
        TimedNode::endo(r.component, r.lag)
    }
}

impl From<TimedNode> for NodeRef {
    fn from(v: TimedNode) -> Self {
        NodeRef { component: v.component, lag: v.time }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeJson {
    pub from: TimedNode,
    pub to: TimedNode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficient: Option<f64>,
}

/// Serialized adjacency of a [`DirectedMixedGraph`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub nodes: Vec<TimedNode>,
    #[serde(default)]
    pub directed: Vec<EdgeJson>,
    #[serde(default)]
    pub bidirected: Vec<[TimedNode; 2]>,
}

impl From<&DirectedMixedGraph> for GraphJson {
    fn from(g: &DirectedMixedGraph) -> Self {
        GraphJson {
            nodes: g.nodes().to_vec(),
            directed: g
                .directed_edges()
                .into_iter()
                .map(|e| EdgeJson { from: e.from, to: e.to, coefficient: e.coefficient })
                .collect(),
            bidirected: g.bidirected_edges().into_iter().map(|(a, b)| [a, b]).collect(),
        }
    }
}

impl TryFrom<GraphJson> for DirectedMixedGraph {
    type Error = crate::error::Error;

    fn try_from(j: GraphJson) -> Result<Self> {
        DirectedMixedGraph::new(
            j.nodes,
            j.directed
                .into_iter()
                .map(|e| DirectedEdge { from: e.from, to: e.to, coefficient: e.coefficient }),
            j.bidirected.into_iter().map(|[a, b]| (a, b)),
        )
    }
}

impl DirectedMixedGraph {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&GraphJson::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: GraphJson = serde_json::from_str(s)?;
        Self::try_from(j)
    }

    /// Graphviz rendering; bi-directed edges become `->` with `dir=both`.
    pub fn to_dot(&self, label: impl Fn(&TimedNode) -> String) -> String {
        let mut out = String::from("digraph G {\n  rankdir=LR;\n");
        for v in self.nodes() {
            let shape = match v.kind {
                NodeKind::Endogenous => "circle",
                NodeKind::Innovation => "box",
            };
            let _ = writeln!(out, "  \"{}\" [shape={shape}];", label(v));
        }
        for e in self.directed_edges() {
            match e.coefficient {
                Some(c) => {
                    let _ = writeln!(out, "  \"{}\" -> \"{}\" [label=\"{c}\"];", label(&e.from), label(&e.to));
                }
                None => {
                    let _ = writeln!(out, "  \"{}\" -> \"{}\";", label(&e.from), label(&e.to));
                }
            }
        }
        for (a, b) in self.bidirected_edges() {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [dir=both, style=dashed];",
                label(&a),
                label(&b)
            );
        }
        out.push_str("}\n");
        out
    }
}

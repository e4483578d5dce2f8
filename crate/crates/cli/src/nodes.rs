//! The `name@lag` node grammar.

use anyhow::{anyhow, bail, Result};
use varma_causal::graph::{NodeKind, NodeRef, TimedNode};
use varma_causal::model::VarmaSpec;

/// Component names used to resolve and print node references. A component
/// can always be addressed by its 0-based index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    names: Vec<String>,
}

impl Components {
    pub fn new(names: Vec<String>) -> Self {
        Self { names }
    }

    pub fn of(spec: &VarmaSpec) -> Self {
        Self::new((0..spec.d()).map(|i| spec.component_name(i)).collect())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn resolve(&self, name: &str) -> Result<usize> {
        if let Some(i) = self.names.iter().position(|n| n == name) {
            return Ok(i);
        }
        match name.parse::<usize>() {
            Ok(i) if i < self.len() => Ok(i),
            _ => Err(anyhow!("unknown component '{name}' (known: {})", self.names.join(", "))),
        }
    }

    pub fn parse(&self, s: &str) -> Result<TimedNode> {
        let r = self.parse_ref(s)?;
        Ok(TimedNode::from(r))
    }

    pub fn parse_ref(&self, s: &str) -> Result<NodeRef> {
        let (name, lag) = s
            .trim()
            .rsplit_once('@')
            .ok_or_else(|| anyhow!("node '{s}' must look like name@lag, e.g. X@-1"))?;
        let lag: i64 = lag.parse().map_err(|_| anyhow!("bad lag in node '{s}'"))?;
        Ok(NodeRef { component: self.resolve(name)?, lag })
    }

    pub fn parse_all(&self, items: &[String]) -> Result<Vec<TimedNode>> {
        let nodes: Vec<TimedNode> = items.iter().map(|s| self.parse(s)).collect::<Result<_>>()?;
        for (k, v) in nodes.iter().enumerate() {
            if nodes[..k].contains(v) {
                bail!("node {} listed twice", self.label(v));
            }
        }
        Ok(nodes)
    }

    pub fn label(&self, v: &TimedNode) -> String {
        let base = format!("{}@{}", self.names[v.component], v.time);
        match v.kind {
            NodeKind::Endogenous => base,
            NodeKind::Innovation => format!("e:{base}"),
        }
    }

    pub fn labels<'a>(&self, vs: impl IntoIterator<Item = &'a TimedNode>) -> Vec<String> {
        vs.into_iter().map(|v| self.label(v)).collect()
    }
}

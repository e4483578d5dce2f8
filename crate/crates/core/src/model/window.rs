use std::collections::HashMap;
use std::sync::Mutex;

use nalgebra::DMatrix;

use super::{RewrittenVarSpec, VarmaSpec};
use crate::error::{Error, Result};
use crate::graph::{DirectedEdge, DirectedMixedGraph, TimedNode};

/// A finite time slice `[t_min, t_max]` of a full-time graph.
#[derive(Debug, Clone)]
pub struct GraphWindow {
    pub t_min: i64,
    pub t_max: i64,
    pub include_innovations: bool,
    /// Whether the innovations were marginalized into bi-directed edges.
    pub marginalized: bool,
    pub graph: DirectedMixedGraph,
}

/// Anything with a time-invariant linear structure
/// `S_t = Σ_k M_k S_{t-k} + Σ_l L_l ε_{t-l}`.
pub trait FullTimeStructure {
    fn dim(&self) -> usize;

    /// `M₀ … M_p`; `M₀` holds the instantaneous effects.
    fn ar_lags(&self) -> Vec<DMatrix<f64>>;

    /// `L₀ … L_q`; `L₀` loads the current innovation.
    fn innovation_loadings(&self) -> Vec<DMatrix<f64>>;

    fn structural_lag(&self) -> usize {
        (self.ar_lags().len().max(1) - 1).max(self.innovation_loadings().len().max(1) - 1)
    }

    /// Full-time DAG restricted to `[t_min, t_max]`. Edge `S^j_{t-k} -> S^i_t`
    /// iff `M_k[i,j] != 0`, edge `ε^j_{t-l} -> S^i_t` iff `L_l[i,j] != 0`.
    fn full_time_window(&self, t_min: i64, t_max: i64, include_innovations: bool) -> Result<GraphWindow> {
        if t_min > t_max {
            return Err(Error::InvalidRange { t_min, t_max });
        }
        let d = self.dim();
        let ar = self.ar_lags();
        let load = self.innovation_loadings();
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        for t in t_min..=t_max {
            for i in 0..d {
                nodes.push(TimedNode::endo(i, t));
                if include_innovations {
                    nodes.push(TimedNode::innov(i, t));
                }
            }
        }
        for t in t_min..=t_max {
            for (k, m) in ar.iter().enumerate() {
                let s = t - k as i64;
                if s < t_min {
                    break;
                }
                push_edges(&mut edges, m, |j| TimedNode::endo(j, s), t);
            }
            if include_innovations {
                for (l, m) in load.iter().enumerate() {
                    let s = t - l as i64;
                    if s < t_min {
                        break;
                    }
                    push_edges(&mut edges, m, |j| TimedNode::innov(j, s), t);
                }
            }
        }
        Ok(GraphWindow {
            t_min,
            t_max,
            include_innovations,
            marginalized: false,
            graph: DirectedMixedGraph::dag(nodes, edges)?,
        })
    }

    /// The full-time marginalized ADMG on `[t_min, t_max]`: the DAG with
    /// innovations over `[t_min - (max(p,q)+1), t_max]` is latent-projected
    /// onto its endogenous nodes and then cropped.
    fn marginalized_admg_window(&self, t_min: i64, t_max: i64) -> Result<GraphWindow> {
        if t_min > t_max {
            return Err(Error::InvalidRange { t_min, t_max });
        }
        let back = self.structural_lag() as i64 + 1;
        let wide = self.full_time_window(t_min - back, t_max, true)?;
        let endo: Vec<TimedNode> = wide.graph.nodes().iter().copied().filter(|v| v.is_endogenous()).collect();
        let projected = wide.graph.latent_project(&endo)?;
        let keep: Vec<TimedNode> = endo.into_iter().filter(|v| v.time >= t_min).collect();
        Ok(GraphWindow {
            t_min,
            t_max,
            include_innovations: false,
            marginalized: true,
            graph: projected.induced(&keep)?,
        })
    }
}

fn push_edges(edges: &mut Vec<DirectedEdge>, m: &DMatrix<f64>, from: impl Fn(usize) -> TimedNode, t: i64) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let c = m[(i, j)];
            if c != 0.0 {
                edges.push(DirectedEdge { from: from(j), to: TimedNode::endo(i, t), coefficient: Some(c) });
            }
        }
    }
}

impl FullTimeStructure for VarmaSpec {
    fn dim(&self) -> usize {
        self.d()
    }

    fn ar_lags(&self) -> Vec<DMatrix<f64>> {
        self.a().to_vec()
    }

    fn innovation_loadings(&self) -> Vec<DMatrix<f64>> {
        std::iter::once(DMatrix::identity(self.d(), self.d())).chain(self.b().iter().cloned()).collect()
    }
}

/// The rewritten process in terms of the original innovations:
/// no instantaneous edges, loadings `C, CB₁, …, CB_q`.
impl FullTimeStructure for RewrittenVarSpec {
    fn dim(&self) -> usize {
        self.d
    }

    fn ar_lags(&self) -> Vec<DMatrix<f64>> {
        std::iter::once(DMatrix::zeros(self.d, self.d)).chain(self.ar.iter().cloned()).collect()
    }

    fn innovation_loadings(&self) -> Vec<DMatrix<f64>> {
        std::iter::once(self.ice.clone()).chain(self.ma_eps.iter().cloned()).collect()
    }
}

/// Memoizes marginalized windows of an underlying structure; useful when many
/// separation queries are asked of one model.
pub struct WindowCache<'a, S: ?Sized> {
    inner: &'a S,
    windows: Mutex<HashMap<(i64, i64), GraphWindow>>,
}

impl<'a, S: FullTimeStructure + ?Sized> WindowCache<'a, S> {
    pub fn new(inner: &'a S) -> Self {
        Self { inner, windows: Mutex::new(HashMap::new()) }
    }
}

impl<S: FullTimeStructure + ?Sized> FullTimeStructure for WindowCache<'_, S> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn ar_lags(&self) -> Vec<DMatrix<f64>> {
        self.inner.ar_lags()
    }

    fn innovation_loadings(&self) -> Vec<DMatrix<f64>> {
        self.inner.innovation_loadings()
    }

    fn structural_lag(&self) -> usize {
        self.inner.structural_lag()
    }

    fn full_time_window(&self, t_min: i64, t_max: i64, include_innovations: bool) -> Result<GraphWindow> {
        self.inner.full_time_window(t_min, t_max, include_innovations)
    }

    fn marginalized_admg_window(&self, t_min: i64, t_max: i64) -> Result<GraphWindow> {
        let mut w = self.windows.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(g) = w.get(&(t_min, t_max)) {
            return Ok(g.clone());
        }
        let g = self.inner.marginalized_admg_window(t_min, t_max)?;
        w.insert((t_min, t_max), g.clone());
        Ok(g)
    }
}

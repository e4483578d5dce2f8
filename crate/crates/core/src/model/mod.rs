//! VARMA(p, q) processes with instantaneous effects
//!
//! `S_t = A₀S_t + A₁S_{t-1} + … + A_pS_{t-p} + ε_t + B₁ε_{t-1} + … + B_qε_{t-q}`
//! with independent innovation components of variance `gamma[i]`.

mod rewrite;
mod window;

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeKind, TimedNode};
use crate::linalg;

pub use rewrite::{embed_as_var, ice_matrix, remove_instantaneous, RewrittenVarSpec};
pub use window::{FullTimeStructure, GraphWindow, WindowCache};

/// Spectral radii at or above this bound count as unstable.
pub const STABILITY_BOUND: f64 = 1.0 - 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct VarmaSpec {
    d: usize,
    a: Vec<DMatrix<f64>>,
    b: Vec<DMatrix<f64>>,
    gamma: Vec<f64>,
    names: Option<Vec<String>>,
}

impl VarmaSpec {
    /// `a` holds `A₀ … A_p` (at least `A₀`), `b` holds `B₁ … B_q`.
    pub fn new(a: Vec<DMatrix<f64>>, b: Vec<DMatrix<f64>>, gamma: Vec<f64>) -> Result<Self> {
        let d = gamma.len();
        if d == 0 {
            return Err(Error::Shape("gamma must have at least one entry".into()));
        }
        if a.is_empty() {
            return Err(Error::Shape("A must contain at least A0".into()));
        }
        for (k, m) in a.iter().enumerate() {
            if m.shape() != (d, d) {
                return Err(Error::Shape(format!("A{k} is {}x{}, expected {d}x{d}", m.nrows(), m.ncols())));
            }
        }
        for (l, m) in b.iter().enumerate() {
            if m.shape() != (d, d) {
                return Err(Error::Shape(format!("B{} is {}x{}, expected {d}x{d}", l + 1, m.nrows(), m.ncols())));
            }
        }
        let finite = a.iter().chain(&b).all(|m| m.iter().all(|x| x.is_finite()))
            && gamma.iter().all(|g| g.is_finite());
        if !finite {
            return Err(Error::InvalidModel("non-finite coefficient".into()));
        }
        Ok(Self { d, a, b, gamma, names: None })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.d {
            return Err(Error::Shape(format!("{} names for {} components", names.len(), self.d)));
        }
        let unique: BTreeSet<&String> = names.iter().collect();
        if unique.len() != names.len() {
            return Err(Error::InvalidModel("component names must be unique".into()));
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> usize {
        self.a.len() - 1
    }

    pub fn q(&self) -> usize {
        self.b.len()
    }

    /// `A₀ … A_p`.
    pub fn a(&self) -> &[DMatrix<f64>] {
        &self.a
    }

    /// `B₁ … B_q`.
    pub fn b(&self) -> &[DMatrix<f64>] {
        &self.b
    }

    pub fn a0(&self) -> &DMatrix<f64> {
        &self.a[0]
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn max_lag(&self) -> usize {
        self.p().max(self.q())
    }

    pub fn component_name(&self, i: usize) -> String {
        match &self.names {
            Some(n) if i < n.len() => n[i].clone(),
            _ => i.to_string(),
        }
    }

    /// Looks a component up by name, falling back to a 0-based index.
    pub fn component_index(&self, name: &str) -> Option<usize> {
        if let Some(names) = &self.names {
            if let Some(i) = names.iter().position(|n| n == name) {
                return Some(i);
            }
        }
        name.parse::<usize>().ok().filter(|&i| i < self.d)
    }

    /// `name@time`, with innovations prefixed by `e:`.
    pub fn node_label(&self, v: &TimedNode) -> String {
        let base = format!("{}@{}", self.component_name(v.component), v.time);
        match v.kind {
            NodeKind::Endogenous => base,
            NodeKind::Innovation => format!("e:{base}"),
        }
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }

    /// Validates and converts any failure into an error.
    pub fn require_valid(&self) -> Result<ValidationReport> {
        let r = self.validate();
        if !r.zero_diagonal {
            return Err(Error::InvalidModel("A0 must have a zero diagonal".into()));
        }
        if !r.acyclic_instantaneous {
            return Err(Error::CyclicInstantaneous);
        }
        if !r.gamma_nonnegative {
            return Err(Error::InvalidModel("innovation variances must be non-negative".into()));
        }
        if !r.stable {
            return Err(Error::Unstable { radius: r.spectral_radius.unwrap_or(f64::NAN), bound: STABILITY_BOUND });
        }
        Ok(r)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: ModelJson = serde_json::from_str(s)?;
        m.try_into()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelJson::from(self))?)
    }
}

/// On-disk model format. Matrices are row-major nested arrays and `A`
/// starts at `A₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelJson {
    pub d: usize,
    pub p: usize,
    pub q: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "B", default)]
    pub b: Vec<Vec<Vec<f64>>>,
    pub gamma: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
}

fn matrix_from_rows(rows: &[Vec<f64>], d: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::Shape(format!("{what} must be {d}x{d}")));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl TryFrom<ModelJson> for VarmaSpec {
    type Error = Error;

    fn try_from(m: ModelJson) -> Result<Self> {
        if m.gamma.len() != m.d {
            return Err(Error::Shape(format!("gamma has {} entries, d = {}", m.gamma.len(), m.d)));
        }
        if m.a.len() != m.p + 1 {
            return Err(Error::Shape(format!("A has {} matrices, expected p + 1 = {}", m.a.len(), m.p + 1)));
        }
        if m.b.len() != m.q {
            return Err(Error::Shape(format!("B has {} matrices, expected q = {}", m.b.len(), m.q)));
        }
        let a = m
            .a
            .iter()
            .enumerate()
            .map(|(k, r)| matrix_from_rows(r, m.d, &format!("A{k}")))
            .collect::<Result<_>>()?;
        let b = m
            .b
            .iter()
            .enumerate()
            .map(|(l, r)| matrix_from_rows(r, m.d, &format!("B{}", l + 1)))
            .collect::<Result<_>>()?;
        let spec = VarmaSpec::new(a, b, m.gamma)?;
        match m.names {
            Some(n) => spec.with_names(n),
            None => Ok(spec),
        }
    }
}

impl From<&VarmaSpec> for ModelJson {
    fn from(s: &VarmaSpec) -> Self {
        ModelJson {
            d: s.d,
            p: s.p(),
            q: s.q(),
            a: s.a.iter().map(matrix_to_rows).collect(),
            b: s.b.iter().map(matrix_to_rows).collect(),
            gamma: s.gamma.clone(),
            names: s.names.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub zero_diagonal: bool,
    pub acyclic_instantaneous: bool,
    /// Components in an order compatible with the instantaneous edges.
    pub topological_order: Option<Vec<usize>>,
    /// Spectral radius of the companion matrix of `(I-A₀)⁻¹A_k`.
    pub spectral_radius: Option<f64>,
    pub stability_bound: f64,
    pub stable: bool,
    pub gamma_positive: bool,
    pub gamma_nonnegative: bool,
    /// Components whose innovation variance is exactly zero.
    pub degenerate_components: Vec<usize>,
    pub passed: bool,
    pub messages: Vec<String>,
}

/// Kahn order of the instantaneous graph (`j -> i` iff `A₀[i,j] != 0`),
/// smallest index first among ready components. `None` if cyclic.
pub fn instantaneous_order(a0: &DMatrix<f64>) -> Option<Vec<usize>> {
    let d = a0.nrows();
    let mut indeg: Vec<usize> =
        (0..d).map(|i| (0..d).filter(|&j| j != i && a0[(i, j)] != 0.0).count()).collect();
    let mut ready: BTreeSet<usize> = (0..d).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(d);
    while let Some(j) = ready.pop_first() {
        order.push(j);
        for i in 0..d {
            if i != j && a0[(i, j)] != 0.0 {
                indeg[i] -= 1;
                if indeg[i] == 0 {
                    ready.insert(i);
                }
            }
        }
    }
    (order.len() == d).then_some(order)
}

/// Block companion matrix of `M₁ … M_p` (dimension `d·p`).
pub(crate) fn companion(ms: &[DMatrix<f64>], d: usize) -> DMatrix<f64> {
    let p = ms.len();
    let mut f = DMatrix::zeros(d * p, d * p);
    for (k, m) in ms.iter().enumerate() {
        f.view_mut((0, k * d), (d, d)).copy_from(m);
    }
    for k in 1..p {
        f.view_mut((k * d, (k - 1) * d), (d, d)).fill_with_identity();
    }
    f
}

fn validate(spec: &VarmaSpec) -> ValidationReport {
    let d = spec.d;
    let a0 = spec.a0();
    let mut messages = Vec::new();

    let zero_diagonal = (0..d).all(|i| a0[(i, i)] == 0.0);
    if !zero_diagonal {
        messages.push("A0 has a nonzero diagonal entry".to_string());
    }
    let topological_order = if zero_diagonal { instantaneous_order(a0) } else { None };
    let acyclic = topological_order.is_some();
    if zero_diagonal && !acyclic {
        messages.push("instantaneous graph of A0 contains a cycle".to_string());
    }

    let spectral_radius = if acyclic {
        let c = ice_matrix(a0).expect("acyclic A0");
        let ca: Vec<DMatrix<f64>> = spec.a[1..].iter().map(|m| &c * m).collect();
        Some(linalg::spectral_radius(&companion(&ca, d)))
    } else {
        None
    };
    let stable = spectral_radius.is_some_and(|r| r < STABILITY_BOUND);
    match spectral_radius {
        Some(r) if !stable => messages.push(format!(
            "companion spectral radius {r:.12} is not below {STABILITY_BOUND}"
        )),
        None => messages.push("stability not checked (cyclic or invalid A0)".to_string()),
        _ => {}
    }

    let gamma_positive = spec.gamma.iter().all(|&g| g > 0.0);
    let gamma_nonnegative = spec.gamma.iter().all(|&g| g >= 0.0);
    let degenerate_components: Vec<usize> = (0..d).filter(|&i| spec.gamma[i] == 0.0).collect();
    if !gamma_nonnegative {
        messages.push("negative innovation variance".to_string());
    }
    for &i in &degenerate_components {
        messages.push(format!("component {i} has a degenerate (zero-variance) innovation"));
    }

    let passed = zero_diagonal && acyclic && stable && gamma_nonnegative;
    ValidationReport {
        zero_diagonal,
        acyclic_instantaneous: acyclic,
        topological_order,
        spectral_radius,
        stability_bound: STABILITY_BOUND,
        stable,
        gamma_positive,
        gamma_nonnegative,
        degenerate_components,
        passed,
        messages,
    }
}

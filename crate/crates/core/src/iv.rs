//! Instrumental-variable identification and estimation of total effects.

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use crate::effects::{check_iv_conditions, ConditionReport, IvSets, WindowPolicy};
use crate::error::{Error, Result};
use crate::graph::TimedNode;
use crate::linalg;
use crate::model::VarmaSpec;
use crate::stationary::solve_stationary;

/// Systems with a larger condition number are rejected as singular.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct IvQuery {
    pub sets: IvSets,
    weight: Option<DMatrix<f64>>,
}

impl IvQuery {
    /// `weight` defaults to the identity and must be symmetric positive
    /// definite of size `|I|`.
    pub fn new(sets: IvSets, weight: Option<DMatrix<f64>>) -> Result<Self> {
        if let Some(w) = &weight {
            let k = sets.i.len();
            if w.shape() != (k, k) {
                return Err(Error::Shape(format!("weight must be {k}x{k}")));
            }
            if (w - w.transpose()).abs().max() > 1e-12 * w.abs().max().max(1.0) {
                return Err(Error::Precondition("weight matrix must be symmetric".into()));
            }
            if w.clone().cholesky().is_none() {
                return Err(Error::Precondition("weight matrix must be positive definite".into()));
            }
        }
        Ok(Self { sets, weight })
    }

    pub fn weight(&self) -> DMatrix<f64> {
        let k = self.sets.i.len();
        self.weight.clone().unwrap_or_else(|| DMatrix::identity(k, k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleSize {
    Population,
    Observations(usize),
}

impl Serialize for SampleSize {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SampleSize::Population => s.serialize_str("population"),
            SampleSize::Observations(n) => s.serialize_u64(*n as u64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IvResult {
    pub beta_hat: Vec<f64>,
    /// Euclidean norm of `Cov(Y, I | B) − β̂·Cov(X, I | B)`.
    pub moment_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conditions: Option<ConditionReport>,
    pub sample_size: SampleSize,
}

/// `β = c_YI W c_IX (c_XI W c_IX)⁻¹` with `c_XI = Cov(X, I | B)`.
fn weighted_solve(cxi: &DMatrix<f64>, cyi: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<(DVector<f64>, f64)> {
    let cix = cxi.transpose();
    let m = cxi * w * &cix;
    let condition = linalg::condition_number(&m);
    if !(condition < MAX_CONDITION) {
        return Err(Error::Singular { condition });
    }
    let rhs = cyi * w * &cix;
    let beta_row = m
        .transpose()
        .lu()
        .solve(&rhs.transpose())
        .ok_or(Error::Singular { condition })?;
    let residual = (cyi - beta_row.transpose() * cxi).norm();
    Ok((beta_row.column(0).into_owned(), residual))
}

/// Solves the population moment equation `β·Cov(X, I | B) = Cov(Y, I | B)`.
pub fn identify_population(spec: &VarmaSpec, q: &IvQuery, policy: &WindowPolicy) -> Result<IvResult> {
    let ss = solve_stationary(spec)?;
    let s = &q.sets;
    let conditions = check_iv_conditions(spec, &ss, s, policy)?;
    if !conditions.full_row_rank {
        return Err(Error::UnderIdentified { rank: conditions.rank, needed: s.x.len() });
    }
    let cxi = ss.conditional_covariance(&s.x, &s.i, &s.b)?;
    let cyi = ss.conditional_covariance(&[s.y], &s.i, &s.b)?;
    let (beta, moment_residual) = weighted_solve(&cxi, &cyi, &q.weight())?;
    Ok(IvResult {
        beta_hat: beta.iter().copied().collect(),
        moment_residual,
        conditions: Some(conditions),
        sample_size: SampleSize::Population,
    })
}

/// Columns of `data` (rows are time steps) for each node, aligned so that
/// row `r` of the result corresponds to anchor `t = r − min_time`.
pub(crate) fn lagged_design(data: &DMatrix<f64>, nodes: &[TimedNode], min_time: i64, rows: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, nodes.len(), |r, j| {
        let v = nodes[j];
        data[(((r as i64) + v.time - min_time) as usize, v.component)]
    })
}

fn center(m: &mut DMatrix<f64>) {
    let n = m.nrows() as f64;
    for mut c in m.column_iter_mut() {
        let mean = c.sum() / n;
        c.add_scalar_mut(-mean);
    }
}

/// OLS residuals of the (centered) columns of `z` on the (centered) `b`.
pub(crate) fn residualize(z: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    if b.ncols() == 0 {
        return z.clone();
    }
    let btb = b.transpose() * b;
    let (pinv, _) = linalg::pinv(&btb, 1e-12);
    z - b * (pinv * (b.transpose() * z))
}

/// Aligns, centers and residualizes the node columns of a series on `b`.
pub(crate) fn residual_blocks(
    data: &DMatrix<f64>,
    blocks: &[&[TimedNode]],
    b: &[TimedNode],
) -> Result<Vec<DMatrix<f64>>> {
    let all = blocks.iter().flat_map(|s| s.iter()).chain(b);
    let (mut lo, mut hi) = (i64::MAX, i64::MIN);
    for v in all {
        if !v.is_endogenous() {
            return Err(Error::InnovationNode(*v));
        }
        if v.component >= data.ncols() {
            return Err(Error::Data(format!("component {} but data has {} columns", v.component, data.ncols())));
        }
        lo = lo.min(v.time);
        hi = hi.max(v.time);
    }
    let span = (hi - lo) as usize;
    let regressors = blocks.iter().map(|s| s.len()).sum::<usize>() + b.len();
    if data.nrows() <= span + regressors + 1 {
        return Err(Error::Data(format!(
            "{} rows are too few for a lag span of {span} and {regressors} regressors",
            data.nrows()
        )));
    }
    let rows = data.nrows() - span;
    let mut bm = lagged_design(data, b, lo, rows);
    center(&mut bm);
    Ok(blocks
        .iter()
        .map(|s| {
            let mut z = lagged_design(data, s, lo, rows);
            center(&mut z);
            residualize(&z, &bm)
        })
        .collect())
}

/// Closed-form weighted IV estimator on a series with one row per time step.
/// Node times are offsets from the anchor `t`; rows without a full history
/// are dropped.
pub fn estimate_from_data(data: &DMatrix<f64>, q: &IvQuery) -> Result<IvResult> {
    let s = &q.sets;
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::Data("non-finite value in series".into()));
    }
    let y = [s.y];
    let blocks = residual_blocks(data, &[&y, &s.x, &s.i], &s.b)?;
    let (ry, rx, ri) = (&blocks[0], &blocks[1], &blocks[2]);
    let m = ry.nrows();
    let cxi = rx.transpose() * ri / m as f64;
    let cyi = ry.transpose() * ri / m as f64;
    let (beta, moment_residual) = weighted_solve(&cxi, &cyi, &q.weight())?;
    Ok(IvResult {
        beta_hat: beta.iter().copied().collect(),
        moment_residual,
        conditions: None,
        sample_size: SampleSize::Observations(m),
    })
}

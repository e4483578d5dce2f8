//! Stationary second moments of a stable VARMA process.
//!
//! The process is written in state-space form over
//! `z_t = (S_t … S_{t-p'+1}, ε_t … ε_{t-q+1})` with `p' = max(p, 1)`:
//! `z_t = F z_{t-1} + G ε_t`. The stationary covariance `Σ_z` solves
//! `Σ_z = F Σ_z Fᵀ + G Γ Gᵀ`, and `Cov(S_t, S_{t-h})` is the leading `d × d`
//! block of `F^h Σ_z`.

use std::collections::BTreeSet;
use std::sync::Mutex;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{SeparationQuery, TimedNode};
use crate::linalg;
use crate::model::{remove_instantaneous, VarmaSpec};

/// Relative singular-value cutoff for the pseudo-inverse of `Σ_BB`.
pub const PINV_RTOL: f64 = 1e-10;

/// Default relative threshold for population conditional independence.
pub const DEFAULT_CI_TOL: f64 = 1e-7;

/// Conditional variances below this fraction of the marginal variance count
/// as zero.
const DEGENERATE_RTOL: f64 = 1e-12;

#[derive(Debug)]
pub struct StateSpaceForm {
    d: usize,
    f: DMatrix<f64>,
    g: DMatrix<f64>,
    gamma: Vec<f64>,
    sigma_z: DMatrix<f64>,
    residual: f64,
    table: Mutex<AutocovarianceTable>,
}

/// `Γ_S(h)` for `h = 0 … H`, grown on demand.
#[derive(Debug, Clone)]
pub struct AutocovarianceTable {
    gammas: Vec<DMatrix<f64>>,
    /// Leading `d` columns of `F^H Σ_z`.
    frontier: DMatrix<f64>,
}

impl AutocovarianceTable {
    pub fn horizon(&self) -> usize {
        self.gammas.len() - 1
    }

    pub fn get(&self, h: usize) -> Option<&DMatrix<f64>> {
        self.gammas.get(h)
    }
}

/// `Cov(U, V)` for ordered endogenous node lists.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSetCovariance {
    pub u: Vec<TimedNode>,
    pub v: Vec<TimedNode>,
    pub matrix: DMatrix<f64>,
}

/// Outcome of a population conditional-independence query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CiVerdict {
    pub independent: bool,
    /// Largest `|Cov(a, c | B)|` over `a ∈ A`, `c ∈ C`.
    pub max_abs_covariance: f64,
    /// Largest `|Cov(a, c | B)| / (sd(a | B)·sd(c | B))` over non-degenerate pairs.
    pub max_partial_correlation: f64,
    /// Some node of `A ∪ C` has zero conditional variance given `B`.
    pub degenerate: bool,
}

pub fn solve_stationary(spec: &VarmaSpec) -> Result<StateSpaceForm> {
    spec.require_valid()?;
    let d = spec.d();
    let r = remove_instantaneous(spec)?;
    let sp = spec.p().max(1);
    let q = spec.q();
    let n = d * (sp + q);
    let eps0 = d * sp;

    let mut f = DMatrix::zeros(n, n);
    for (k, m) in r.ar.iter().enumerate() {
        f.view_mut((0, k * d), (d, d)).copy_from(m);
    }
    for (l, m) in r.ma_eps.iter().enumerate() {
        f.view_mut((0, eps0 + l * d), (d, d)).copy_from(m);
    }
    for k in 1..sp {
        f.view_mut((k * d, (k - 1) * d), (d, d)).fill_with_identity();
    }
    for l in 1..q {
        f.view_mut((eps0 + l * d, eps0 + (l - 1) * d), (d, d)).fill_with_identity();
    }

    let mut g = DMatrix::zeros(n, d);
    g.view_mut((0, 0), (d, d)).copy_from(&r.ice);
    if q > 0 {
        g.view_mut((eps0, 0), (d, d)).fill_with_identity();
    }

    let gamma_m = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(spec.gamma()));
    let qm = &g * gamma_m * g.transpose();
    let sigma_z = linalg::solve_discrete_lyapunov(&f, &qm)?;
    let residual = linalg::lyapunov_residual(&f, &qm, &sigma_z);

    let frontier = sigma_z.columns(0, d).clone_owned();
    let table = AutocovarianceTable { gammas: vec![frontier.rows(0, d).clone_owned()], frontier };
    Ok(StateSpaceForm {
        d,
        f,
        g,
        gamma: spec.gamma().to_vec(),
        sigma_z,
        residual,
        table: Mutex::new(table),
    })
}

impl Clone for StateSpaceForm {
    fn clone(&self) -> Self {
        Self {
            d: self.d,
            f: self.f.clone(),
            g: self.g.clone(),
            gamma: self.gamma.clone(),
            sigma_z: self.sigma_z.clone(),
            residual: self.residual,
            table: Mutex::new(self.lock().clone()),
        }
    }
}

impl StateSpaceForm {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.f
    }

    pub fn loading(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn state_covariance(&self) -> &DMatrix<f64> {
        &self.sigma_z
    }

    /// `‖Σ_z − FΣ_zFᵀ − GΓGᵀ‖_F / ‖Σ_z‖_F`.
    pub fn lyapunov_residual(&self) -> f64 {
        self.residual
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, AutocovarianceTable> {
        self.table.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// `Γ_S(h) = Cov(S_t, S_{t-h})`.
    pub fn autocovariance(&self, h: usize) -> DMatrix<f64> {
        let mut t = self.lock();
        while t.gammas.len() <= h {
            t.frontier = &self.f * &t.frontier;
            let next = t.frontier.rows(0, self.d).clone_owned();
            t.gammas.push(next);
        }
        t.gammas[h].clone()
    }

    /// Snapshot of the memoized table, extended to at least `h`.
    pub fn autocovariance_table(&self, h: usize) -> AutocovarianceTable {
        self.autocovariance(h);
        self.lock().clone()
    }

    fn check_node(&self, v: &TimedNode) -> Result<()> {
        if !v.is_endogenous() {
            return Err(Error::InnovationNode(*v));
        }
        if v.component >= self.d {
            return Err(Error::Precondition(format!("component {} out of range (d = {})", v.component, self.d)));
        }
        Ok(())
    }

    pub fn node_covariance(&self, u: &TimedNode, v: &TimedNode) -> Result<f64> {
        self.check_node(u)?;
        self.check_node(v)?;
        let h = u.time - v.time;
        Ok(if h >= 0 {
            self.autocovariance(h as usize)[(u.component, v.component)]
        } else {
            self.autocovariance((-h) as usize)[(v.component, u.component)]
        })
    }

    fn matrix(&self, u: &[TimedNode], v: &[TimedNode]) -> Result<DMatrix<f64>> {
        for x in u.iter().chain(v) {
            self.check_node(x)?;
        }
        let span = u.iter().chain(v).map(|x| x.time).max().unwrap_or(0)
            - u.iter().chain(v).map(|x| x.time).min().unwrap_or(0);
        self.autocovariance(span as usize);
        let t = self.lock();
        Ok(DMatrix::from_fn(u.len(), v.len(), |i, j| {
            let (a, b) = (u[i], v[j]);
            let h = a.time - b.time;
            if h >= 0 {
                t.gammas[h as usize][(a.component, b.component)]
            } else {
                t.gammas[(-h) as usize][(b.component, a.component)]
            }
        }))
    }

    pub fn cross_covariance(&self, u: &[TimedNode], v: &[TimedNode]) -> Result<NodeSetCovariance> {
        Ok(NodeSetCovariance { u: u.to_vec(), v: v.to_vec(), matrix: self.matrix(u, v)? })
    }

    /// `Σ_AC − Σ_AB Σ_BB⁺ Σ_BC`.
    pub fn conditional_covariance(&self, a: &[TimedNode], c: &[TimedNode], b: &[TimedNode]) -> Result<DMatrix<f64>> {
        let bs: BTreeSet<&TimedNode> = b.iter().collect();
        if let Some(x) = a.iter().chain(c).find(|x| bs.contains(x)) {
            return Err(Error::OverlappingSets(*x));
        }
        let sac = self.matrix(a, c)?;
        if b.is_empty() {
            return Ok(sac);
        }
        let sab = self.matrix(a, b)?;
        let sbb = self.matrix(b, b)?;
        let sbc = self.matrix(b, c)?;
        let (pinv, _) = linalg::pinv(&sbb, PINV_RTOL);
        Ok(sac - sab * pinv * sbc)
    }

    /// Population test of `A ⊥ C | B` for the Gaussian stationary law.
    ///
    /// Independent iff every `|Cov(a, c | B)| < tol · sd(a | B) · sd(c | B)`,
    /// i.e. every population partial correlation is below `tol`. Pairs with a
    /// zero conditional variance are independent and set `degenerate`.
    pub fn population_ci(&self, q: &SeparationQuery, tol: f64) -> Result<CiVerdict> {
        let a: Vec<TimedNode> = q.a.iter().copied().collect();
        let c: Vec<TimedNode> = q.c.iter().copied().collect();
        let b: Vec<TimedNode> = q.b.iter().copied().collect();
        let mut k = a.clone();
        k.extend(c.iter().copied());
        let cond = self.conditional_covariance(&k, &k, &b)?;
        let marg = self.matrix(&k, &k)?;
        let na = a.len();
        let degenerate_at = |i: usize| cond[(i, i)] <= DEGENERATE_RTOL * marg[(i, i)];
        let mut verdict = CiVerdict {
            independent: true,
            max_abs_covariance: 0.0,
            max_partial_correlation: 0.0,
            degenerate: false,
        };
        for i in 0..na {
            for j in na..k.len() {
                let cov = cond[(i, j)].abs();
                verdict.max_abs_covariance = verdict.max_abs_covariance.max(cov);
                if degenerate_at(i) || degenerate_at(j) {
                    verdict.degenerate = true;
                    continue;
                }
                let rho = cov / (cond[(i, i)] * cond[(j, j)]).sqrt();
                verdict.max_partial_correlation = verdict.max_partial_correlation.max(rho);
                if !(rho < tol) {
                    verdict.independent = false;
                }
            }
        }
        Ok(verdict)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, v)
    }

    fn x(t: i64) -> TimedNode {
        TimedNode::endo(0, t)
    }

    fn y(t: i64) -> TimedNode {
        TimedNode::endo(1, t)
    }

    #[test]
    fn ar1_variance() {
        let spec = VarmaSpec::new(vec![DMatrix::zeros(1, 1), DMatrix::from_element(1, 1, 0.5)], vec![], vec![1.0]).unwrap();
        let ss = solve_stationary(&spec).unwrap();
        assert!((ss.autocovariance(0)[(0, 0)] - 4.0 / 3.0).abs() < 1e-14);
        assert!((ss.autocovariance(3)[(0, 0)] - 4.0 / 3.0 / 8.0).abs() < 1e-14);
        assert!(ss.lyapunov_residual() < 1e-14);
    }

    #[test]
    fn white_noise_without_lags() {
        let spec = VarmaSpec::new(vec![m(&[0.0, 0.0, 2.0, 0.0])], vec![], vec![1.0, 3.0]).unwrap();
        let ss = solve_stationary(&spec).unwrap();
        let g0 = ss.autocovariance(0);
        assert!((g0 - m(&[1.0, 2.0, 2.0, 7.0])).abs().max() < 1e-14);
        assert_eq!(ss.autocovariance(1), DMatrix::zeros(2, 2));
    }

    #[test]
    fn varma_lag_one_covariances_in_closed_form() {
        // X_t = X_{t-1}/2 + ε^X_t + ε^Y_{t-1}/4,  Y_t = X_{t-1}/3 + Y_{t-1}/2 + ε^Y_t
        let spec = VarmaSpec::new(
            vec![m(&[0.0; 4]), m(&[0.5, 0.0, 1.0 / 3.0, 0.5])],
            vec![m(&[0.0, 0.25, 0.0, 0.0])],
            vec![1.0, 1.0],
        )
        .unwrap();
        let ss = solve_stationary(&spec).unwrap();
        let cxi = ss.cross_covariance(&[x(-1), y(-1)], &[x(-2), y(-2)]).unwrap().matrix;
        let want = m(&[17.0 / 24.0, 53.0 / 108.0, 77.0 / 108.0, 505.0 / 486.0]);
        assert!((cxi - want).abs().max() < 1e-12);
        let cyi = ss.cross_covariance(&[y(0)], &[x(-2), y(-2)]).unwrap().matrix;
        assert!((cyi[(0, 0)] - 16.0 / 27.0).abs() < 1e-12);
        assert!((cyi[(0, 1)] - 166.0 / 243.0).abs() < 1e-12);
    }

    #[test]
    fn conditioning_on_markov_blanket_of_instantaneous_model() {
        // X_t = X_{t-1}/2 + ε^X, Y_t = X_t/3 + Y_{t-1}/2 + ε^Y
        let spec = VarmaSpec::new(vec![m(&[0.0, 0.0, 1.0 / 3.0, 0.0]), m(&[0.5, 0.0, 0.0, 0.5])], vec![], vec![1.0, 1.0]).unwrap();
        let ss = solve_stationary(&spec).unwrap();
        let c = ss.conditional_covariance(&[y(0)], &[x(-1)], &[x(0), y(-1)]).unwrap();
        assert!(c[(0, 0)].abs() < 1e-14);
        let q = SeparationQuery::new([y(0)], [x(0), y(-1)], [x(-1)]).unwrap();
        assert!(ss.population_ci(&q, DEFAULT_CI_TOL).unwrap().independent);
        let q = SeparationQuery::new([y(0)], [], [x(0)]).unwrap();
        assert!(!ss.population_ci(&q, DEFAULT_CI_TOL).unwrap().independent);
    }

    #[test]
    fn empty_conditioning_set_is_plain_covariance() {
        let spec = VarmaSpec::new(vec![m(&[0.0; 4]), m(&[0.4, 0.1, -0.2, 0.3])], vec![m(&[0.2, 0.0, 0.1, 0.0])], vec![1.0, 0.7]).unwrap();
        let ss = solve_stationary(&spec).unwrap();
        let u = [x(0), y(-2)];
        let v = [y(-1)];
        assert_eq!(ss.conditional_covariance(&u, &v, &[]).unwrap(), ss.cross_covariance(&u, &v).unwrap().matrix);
        let ab = ss.conditional_covariance(&u, &v, &[x(-3)]).unwrap();
        let ba = ss.conditional_covariance(&v, &u, &[x(-3)]).unwrap();
        assert!((ab - ba.transpose()).abs().max() < 1e-14);
        assert!(matches!(ss.conditional_covariance(&u, &v, &[x(0)]), Err(Error::OverlappingSets(_))));
        assert!(matches!(ss.node_covariance(&TimedNode::innov(0, 0), &x(0)), Err(Error::InnovationNode(_))));
    }

    #[test]
    fn zero_conditional_variance_is_flagged() {
        let spec = VarmaSpec::new(vec![m(&[0.0, 0.0, 1.0, 0.0])], vec![], vec![1.0, 0.0]).unwrap();
        let ss = solve_stationary(&spec).unwrap();
        // Y_t = X_t exactly
        let q = SeparationQuery::new([y(0)], [x(0)], [x(-1)]).unwrap();
        let v = ss.population_ci(&q, DEFAULT_CI_TOL).unwrap();
        assert!(v.independent && v.degenerate);
    }

    #[test]
    fn unstable_spec_is_rejected() {
        let spec = VarmaSpec::new(vec![DMatrix::zeros(1, 1), DMatrix::from_element(1, 1, 1.0)], vec![], vec![1.0]).unwrap();
        assert!(matches!(solve_stationary(&spec), Err(Error::Unstable { .. })));
    }
}

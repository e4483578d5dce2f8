use nalgebra::DMatrix;

use super::{instantaneous_order, VarmaSpec};
use crate::error::{Error, Result};

/// The ICE matrix `(I - A₀)⁻¹`.
///
/// Entry `(i, j)` is the total instantaneous effect of component `j` on
/// component `i`. Rows are filled in topological order of the instantaneous
/// graph, so each row is `e_i + Σ_k A₀[i,k]·row_k` over already finished `k`.
pub fn ice_matrix(a0: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = a0.nrows();
    if a0.ncols() != d {
        return Err(Error::Shape("A0 must be square".into()));
    }
    if (0..d).any(|i| a0[(i, i)] != 0.0) {
        return Err(Error::InvalidModel("A0 must have a zero diagonal".into()));
    }
    let order = instantaneous_order(a0).ok_or(Error::CyclicInstantaneous)?;
    let mut c = DMatrix::zeros(d, d);
    for &i in &order {
        c[(i, i)] = 1.0;
        for k in 0..d {
            let w = a0[(i, k)];
            if w != 0.0 {
                for j in 0..d {
                    c[(i, j)] += w * c[(k, j)];
                }
            }
        }
    }
    Ok(c)
}

/// A process with its instantaneous effects solved out.
///
/// With `C = (I - A₀)⁻¹` the process reads
/// `S_t = Σ CA_k S_{t-k} + Cε_t + Σ CB_l ε_{t-l}`, or equivalently in terms of
/// `δ_t = Cε_t`, `S_t = Σ CA_k S_{t-k} + δ_t + Σ CB_lC⁻¹ δ_{t-l}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RewrittenVarSpec {
    pub d: usize,
    /// `C = (I - A₀)⁻¹`.
    pub ice: DMatrix<f64>,
    /// `CA₁ … CA_p`.
    pub ar: Vec<DMatrix<f64>>,
    /// `CB₁ … CB_q`: loadings of the original innovations `ε_{t-l}`.
    pub ma_eps: Vec<DMatrix<f64>>,
    /// `CB₁C⁻¹ … CB_qC⁻¹`: loadings of `δ_{t-l}`.
    pub ma_delta: Vec<DMatrix<f64>>,
    /// `Σ_δ = CΓCᵀ`.
    pub sigma_delta: DMatrix<f64>,
    pub gamma: Vec<f64>,
}

impl RewrittenVarSpec {
    pub fn p(&self) -> usize {
        self.ar.len()
    }

    pub fn q(&self) -> usize {
        self.ma_eps.len()
    }
}

pub fn remove_instantaneous(spec: &VarmaSpec) -> Result<RewrittenVarSpec> {
    let d = spec.d();
    let c = ice_matrix(spec.a0())?;
    let c_inv = DMatrix::identity(d, d) - spec.a0();
    let gamma = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(spec.gamma()));
    let ma_eps: Vec<DMatrix<f64>> = spec.b().iter().map(|b| &c * b).collect();
    Ok(RewrittenVarSpec {
        d,
        ar: spec.a()[1..].iter().map(|a| &c * a).collect(),
        ma_delta: ma_eps.iter().map(|m| m * &c_inv).collect(),
        ma_eps,
        sigma_delta: &c * gamma * c.transpose(),
        gamma: spec.gamma().to_vec(),
        ice: c,
    })
}

/// Embeds a VARMA(p, q) as a `2d`-dimensional VAR(max(p, q)) over
/// `(S_t, ε_t)`.
///
/// Blocks are `[[A₀, I], [0, 0]]` at lag 0 and `[[A_k, B_k], [0, 0]]` at lag
/// `k`; the first `d` innovations have variance 0 (reported as degenerate by
/// [`VarmaSpec::validate`]) and the last `d` carry `gamma`. The identity block
/// at lag 0 feeds `ε_t` into `S_t`.
pub fn embed_as_var(spec: &VarmaSpec) -> VarmaSpec {
    let d = spec.d();
    let l = spec.max_lag();
    let zero = DMatrix::zeros(d, d);
    let mut a = Vec::with_capacity(l + 1);
    for k in 0..=l {
        let ak = spec.a().get(k).unwrap_or(&zero);
        let bk = if k == 0 {
            DMatrix::identity(d, d)
        } else {
            spec.b().get(k - 1).cloned().unwrap_or_else(|| zero.clone())
        };
        let mut m = DMatrix::zeros(2 * d, 2 * d);
        m.view_mut((0, 0), (d, d)).copy_from(ak);
        m.view_mut((0, d), (d, d)).copy_from(&bk);
        a.push(m);
    }
    let mut gamma = vec![0.0; d];
    gamma.extend_from_slice(spec.gamma());
    let out = VarmaSpec::new(a, Vec::new(), gamma).expect("block shapes are consistent");
    match spec.names() {
        Some(names) => {
            let mut all: Vec<String> = names.to_vec();
            all.extend(names.iter().map(|n| format!("eps_{n}")));
            out.with_names(all).expect("distinct names")
        }
        None => out,
    }
}

//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// State dimension up to which the Lyapunov equation is solved directly.
pub const DIRECT_LYAPUNOV_MAX_DIM: usize = 60;

pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s != 0.0 {
                out.view_mut((i * br, j * bc), (br, bc)).copy_from(&(b * s));
            }
        }
    }
    out
}

pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Pseudo-inverse treating singular values below `rtol * σ_max` as zero.
/// Returns the pseudo-inverse and the numerical rank.
pub fn pinv(m: &DMatrix<f64>, rtol: f64) -> (DMatrix<f64>, usize) {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return (DMatrix::zeros(c, r), 0);
    }
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cut = rtol * smax;
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested V^T");
    let mut out = DMatrix::zeros(c, r);
    let mut rank = 0;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cut && s > 0.0 {
            rank += 1;
            out += vt.row(k).transpose() * u.column(k).transpose() / s;
        }
    }
    (out, rank)
}

/// Numerical rank with singular values above `rtol * σ_max`.
pub fn rank(m: &DMatrix<f64>, rtol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.max();
    sv.iter().filter(|&&s| s > rtol * smax && s > 0.0).count()
}

/// Ratio of extreme singular values (infinite when singular).
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return f64::INFINITY;
    }
    let sv = m.clone().singular_values();
    let smin = sv.min();
    if smin == 0.0 {
        f64::INFINITY
    } else {
        sv.max() / smin
    }
}

/// Solves `X = F X Fᵀ + Q` for a stable `F`.
///
/// Vectorized Kronecker solve up to [`DIRECT_LYAPUNOV_MAX_DIM`], doubling
/// iteration beyond.
pub fn solve_discrete_lyapunov(f: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = f.nrows();
    if f.ncols() != n || q.shape() != (n, n) {
        return Err(Error::Shape("Lyapunov operands must be square and conformable".into()));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let x = if n <= DIRECT_LYAPUNOV_MAX_DIM {
        let lhs = DMatrix::identity(n * n, n * n) - kron(f, f);
        let rhs = nalgebra::DVector::from_column_slice(q.as_slice());
        let sol = lhs
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Shape("singular Lyapunov system".into()))?;
        DMatrix::from_column_slice(n, n, sol.as_slice())
    } else {
        doubling(f, q)
    };
    Ok((&x + x.transpose()) * 0.5)
}

fn doubling(f: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    let mut a = f.clone();
    let mut x = q.clone();
    for _ in 0..200 {
        let next = &x + &a * &x * a.transpose();
        a = &a * &a;
        let done = (&next - &x).norm() <= 1e-12 * next.norm().max(f64::MIN_POSITIVE)
            && lyapunov_residual(f, q, &next) < 1e-12;
        x = next;
        if done {
            break;
        }
    }
    x
}

/// `‖X − F X Fᵀ − Q‖_F / ‖X‖_F`.
pub fn lyapunov_residual(f: &DMatrix<f64>, q: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    let r = x - f * x * f.transpose() - q;
    let scale = x.norm();
    if scale == 0.0 {
        r.norm()
    } else {
        r.norm() / scale
    }
}

//! Trajectory simulation, random stable specifications and the Monte Carlo
//! Markov/faithfulness experiments.

mod experiments;
mod sampler;

use nalgebra::DMatrix;
use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{remove_instantaneous, VarmaSpec};

pub use experiments::{
    check_query, run_faithfulness_experiment, run_gmp_experiment, EmpiricalConfig, ExperimentConfig,
    ExperimentKind, ExperimentReport, ExperimentSummary, QueryRecord, TrialReport,
};
pub use sampler::{sample_stable_spec, CoefficientSampler, SampledSpec};

/// Environment variable capping the number of worker threads for trials.
pub const THREADS_ENV: &str = "VARMA_CAUSAL_THREADS";

/// A zero-mean, unit-variance innovation law; draws are scaled by
/// `sqrt(gamma[i])`.
pub trait InnovationLaw: Send + Sync {
    fn draw(&self, rng: &mut dyn RngCore) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Gaussian;

impl InnovationLaw for Gaussian {
    fn draw(&self, rng: &mut dyn RngCore) -> f64 {
        StandardNormal.sample(rng)
    }
}

/// Uniform on `[-√3, √3]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformLaw;

impl InnovationLaw for UniformLaw {
    fn draw(&self, rng: &mut dyn RngCore) -> f64 {
        let u = rand_distr::Uniform::new(-1.0f64, 1.0).expect("valid range");
        3f64.sqrt() * u.sample(rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationConfig {
    pub n: usize,
    /// Defaults to `50·(p+q) + 100` steps.
    pub burn_in: Option<usize>,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        Self { n, burn_in: None, seed }
    }

    pub fn burn_in_for(&self, spec: &VarmaSpec) -> usize {
        self.burn_in.unwrap_or(50 * (spec.p() + spec.q()) + 100)
    }
}

/// Gaussian trajectory with `n` rows (time steps) and `d` columns.
pub fn simulate(spec: &VarmaSpec, cfg: &SimulationConfig) -> Result<DMatrix<f64>> {
    simulate_with(spec, cfg, &Gaussian)
}

/// Iterates `S_t = CA₁S_{t-1} + … + Cε_t + CB₁ε_{t-1} + …` from a zero
/// state and returns the `n` steps after burn-in.
pub fn simulate_with(spec: &VarmaSpec, cfg: &SimulationConfig, law: &dyn InnovationLaw) -> Result<DMatrix<f64>> {
    spec.require_valid()?;
    let r = remove_instantaneous(spec)?;
    let d = spec.d();
    let (p, q) = (spec.p(), spec.q());
    let burn = cfg.burn_in_for(spec);
    let total = burn + cfg.n;
    let sd: Vec<f64> = spec.gamma().iter().map(|g| g.sqrt()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // s_hist[k] = S_{t-1-k}, e_hist[l] = ε_{t-1-l}
    let mut s_hist = vec![vec![0.0; d]; p];
    let mut e_hist = vec![vec![0.0; d]; q];
    let mut out = Vec::with_capacity(cfg.n * d);
    let mut eps = vec![0.0; d];
    let mut s = vec![0.0; d];
    for step in 0..total {
        for i in 0..d {
            eps[i] = sd[i] * law.draw(&mut rng);
        }
        for i in 0..d {
            let mut v = 0.0;
            for j in 0..d {
                v += r.ice[(i, j)] * eps[j];
            }
            for (k, m) in r.ar.iter().enumerate() {
                for j in 0..d {
                    v += m[(i, j)] * s_hist[k][j];
                }
            }
            for (l, m) in r.ma_eps.iter().enumerate() {
                for j in 0..d {
                    v += m[(i, j)] * e_hist[l][j];
                }
            }
            if !v.is_finite() || v.abs() > 1e100 {
                return Err(Error::Diverged { step });
            }
            s[i] = v;
        }
        if p > 0 {
            s_hist.rotate_right(1);
            s_hist[0].copy_from_slice(&s);
        }
        if q > 0 {
            e_hist.rotate_right(1);
            e_hist[0].copy_from_slice(&eps);
        }
        if step >= burn {
            out.extend_from_slice(&s);
        }
    }
    Ok(DMatrix::from_row_slice(cfg.n, d, &out))
}

/// Sample autocovariance `Ĉov(S_t, S_{t-h})` of a centered series.
pub fn sample_autocovariance(data: &DMatrix<f64>, h: usize) -> DMatrix<f64> {
    let (n, d) = data.shape();
    let mean = data.row_mean();
    let mut c = DMatrix::zeros(d, d);
    if n <= h {
        return c;
    }
    for t in h..n {
        for i in 0..d {
            let a = data[(t, i)] - mean[i];
            for j in 0..d {
                c[(i, j)] += a * (data[(t - h, j)] - mean[j]);
            }
        }
    }
    c / (n - h) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, v)
    }

    #[test]
    fn same_seed_same_series() {
        let spec = VarmaSpec::new(vec![m(&[0.0, 0.0, 0.3, 0.0]), m(&[0.5, 0.1, 0.0, 0.4])], vec![m(&[0.2, 0.0, 0.0, 0.0])], vec![1.0, 0.5]).unwrap();
        let cfg = SimulationConfig::new(500, 42);
        let a = simulate(&spec, &cfg).unwrap();
        let b = simulate(&spec, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.shape(), (500, 2));
        let c = simulate(&spec, &SimulationConfig::new(500, 43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn white_noise_has_no_autocorrelation() {
        let spec = VarmaSpec::new(vec![DMatrix::zeros(2, 2), DMatrix::zeros(2, 2)], vec![], vec![1.0, 1.0]).unwrap();
        let n = 20_000;
        let data = simulate(&spec, &SimulationConfig::new(n, 1)).unwrap();
        let g0 = sample_autocovariance(&data, 0);
        let g1 = sample_autocovariance(&data, 1);
        for i in 0..2 {
            let r = g1[(i, i)] / g0[(i, i)];
            assert!(r.abs() < 4.0 / (n as f64).sqrt(), "lag-1 autocorrelation {r}");
        }
    }

    #[test]
    fn burn_in_default() {
        let spec = VarmaSpec::new(vec![DMatrix::zeros(1, 1); 3], vec![DMatrix::zeros(1, 1)], vec![1.0]).unwrap();
        assert_eq!(SimulationConfig::new(10, 0).burn_in_for(&spec), 250);
    }

    #[test]
    fn unstable_spec_is_not_simulated() {
        let spec = VarmaSpec::new(vec![DMatrix::zeros(1, 1), DMatrix::from_element(1, 1, 1.01)], vec![], vec![1.0]).unwrap();
        assert!(simulate(&spec, &SimulationConfig::new(10, 0)).is_err());
    }

    #[test]
    fn uniform_law_has_unit_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 50_000;
        let v: f64 = (0..n).map(|_| UniformLaw.draw(&mut rng).powi(2)).sum::<f64>() / n as f64;
        assert!((v - 1.0).abs() < 0.03);
    }
}

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::VarmaSpec;

/// Rejection sampler for stable VARMA specifications.
///
/// Entries are uniform on `[-c, c]` (kept with probability `density`), `A₀` is
/// drawn strictly lower-triangular and then its components are relabelled by
/// a random permutation, and variances are uniform on `[0.5, 2]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientSampler {
    pub d: usize,
    pub p: usize,
    pub q: usize,
    /// `c`; defaults to `0.9 / (max(p,1)·d)`.
    pub scale: Option<f64>,
    /// Probability that an off-structure entry is nonzero.
    pub density: f64,
    /// Whether `A₀` gets nonzero entries at all.
    pub instantaneous: bool,
    pub max_rejections: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledSpec {
    pub spec: VarmaSpec,
    pub rejections: usize,
}

impl CoefficientSampler {
    pub fn new(d: usize, p: usize, q: usize) -> Self {
        Self { d, p, q, scale: None, density: 1.0, instantaneous: true, max_rejections: 10_000 }
    }

    pub fn scale(&self) -> f64 {
        self.scale.unwrap_or(0.9 / (self.p.max(1) * self.d) as f64)
    }

    fn entry<R: Rng + ?Sized>(&self, rng: &mut R, c: f64) -> f64 {
        if self.density >= 1.0 || rng.random::<f64>() < self.density {
            rng.random_range(-c..=c)
        } else {
            0.0
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<VarmaSpec> {
        let (d, c) = (self.d, self.scale());
        let mut a0 = DMatrix::zeros(d, d);
        if self.instantaneous {
            let mut perm: Vec<usize> = (0..d).collect();
            perm.shuffle(rng);
            for i in 0..d {
                for j in 0..i {
                    a0[(perm[i], perm[j])] = self.entry(rng, c);
                }
            }
        }
        let mut a = vec![a0];
        for _ in 0..self.p {
            a.push(DMatrix::from_fn(d, d, |_, _| self.entry(rng, c)));
        }
        let b = (0..self.q).map(|_| DMatrix::from_fn(d, d, |_, _| self.entry(rng, c))).collect();
        let gamma = (0..d).map(|_| rng.random_range(0.5..=2.0)).collect();
        VarmaSpec::new(a, b, gamma)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SampledSpec> {
        if self.d == 0 {
            return Err(Error::Shape("sampler needs d >= 1".into()));
        }
        for rejections in 0..=self.max_rejections {
            let spec = self.draw(rng)?;
            if spec.validate().passed {
                return Ok(SampledSpec { spec, rejections });
            }
        }
        Err(Error::SamplerExhausted(self.max_rejections + 1))
    }
}

pub fn sample_stable_spec(s: &CoefficientSampler, seed: u64) -> Result<SampledSpec> {
    s.sample(&mut ChaCha8Rng::seed_from_u64(seed))
}

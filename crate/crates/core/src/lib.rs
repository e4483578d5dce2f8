//! Causal analysis of VARMA(p, q) processes with instantaneous effects.
//!
//! - [`graph`]: directed mixed graphs, moralization, augmentation, latent
//!   projection and d-/m-separation.
//! - [`model`]: process specification, validation, rewrites and full-time
//!   graph windows.
//! - [`stationary`]: Lyapunov-based stationary covariances and population
//!   conditional independence.
//! - [`effects`]: total causal effects and instrumental-variable conditions.
//! - [`iv`]: population identification and sample estimation of effects.
//! - [`simulation`]: trajectories, random stable specs, Markov and
//!   faithfulness experiments.

pub mod error;
pub mod graph;
pub mod model;
pub mod stationary;
pub mod effects;
pub mod iv;
pub mod simulation;
pub(crate) mod linalg;

pub use error::{Error, Result};

//! Divergence calculus, fractional posteriors, localized priors and
//! contraction-bound evaluators, together with a Monte Carlo harness that
//! verifies each bound empirically at desk scale.

pub mod assumptions;
pub mod bounds;
pub mod config;
pub mod divergences;
pub mod error;
pub mod experiments;
pub mod mle;
pub mod models;
pub mod posteriors;
pub mod quadrature;
pub mod rng;
pub mod variational;

pub use error::{Error, Result};

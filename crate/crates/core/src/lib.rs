//! Probabilistic neural networks trained with PAC-Bayes objectives on
//! data-dependent priors, and high-probability risk certificates for the
//! resulting stochastic classifiers.

pub mod certify;
pub mod checkpoint;
pub mod data;
pub mod error;
pub mod experiment;
pub mod losses;
pub mod mlp;
pub mod model;
pub mod numeric;
pub mod rng;
pub mod training;

pub use error::{Error, Result};
pub use numeric::Matrix;
pub use rng::SeededRng;

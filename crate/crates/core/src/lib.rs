//! Tensor Curie-Weiss and Erdos-Renyi hypergraph Ising models: exact
//! finite-n distributions, direct and Glauber samplers, maximum likelihood
//! and pseudolikelihood estimators, and the Bahadur efficiency calculus
//! (slopes, asymptotic optimal sample sizes, efficiency phase diagram).

pub mod bahadur;
pub mod curie_weiss;
pub mod er_model;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod landscape;
pub mod math;

pub use error::{Error, Result};
pub use landscape::ModelSpec;

//! Weighted Riesz-energy point configurations ("Chebyshev particles") and
//! their use as deterministic proposals in particle filters and
//! pseudo-marginal Metropolis–Hastings for scalar hidden Markov models.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chebyshev;
pub mod density;
pub mod error;
pub mod export;
pub mod models;
pub mod pmh;
pub mod riesz;
pub mod smc;
pub mod stats;

pub use chebyshev::{generate, Generation, GeneratorConfig};
pub use density::{DensityOracle, LogDensity};
pub use error::{Error, Result};
pub use riesz::{Configuration, EnergyParams, Point};
pub use smc::{filter_run, ChebyshevSupport, FilterConfig, ProposalMode};

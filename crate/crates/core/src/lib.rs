//! Equal-weight portfolio selection as a family of per-size QUBOs.
//!
//! Price history becomes per-asset return statistics ([`marketdata`]), which
//! score candidate portfolios under the Sharpe ratio, CQR and CQNS
//! ([`scoring`]). The CQNS is compiled into one QUBO per portfolio size
//! ([`qubo`]) and minimized by brute force, random sampling, simulated
//! annealing and a genetic algorithm ([`solvers`]). [`harness`] strings the
//! stages into a reproducible experiment.

pub mod error;
pub mod harness;
pub mod marketdata;
pub mod mask;
pub mod qubo;
pub mod rng;
pub mod scoring;
pub mod solvers;
pub mod synthetic;

pub use error::{Error, Result};
pub use mask::Portfolio;

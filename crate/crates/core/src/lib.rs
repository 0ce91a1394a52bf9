//! Charger-placement optimization: a spatial demand model learned with
//! gradient-boosted regression trees, a grid placement environment with a
//! demand + coverage reward, a from-scratch Deep Q-Network agent, and the
//! oracle/random benchmarks used to judge it.

pub mod demand;
pub mod dqn;
pub mod env;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod rng;

pub use error::{Error, Result};

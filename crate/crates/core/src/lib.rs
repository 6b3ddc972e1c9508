//! Primal-dual policy gradient for constrained Markov decision processes.

pub mod cmdp;
pub mod diagnostics;
pub mod envs;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod lagrangian;
pub mod linalg;
pub mod optimizer;
pub mod policies;
pub mod rng;
pub mod schedule;

pub use error::{Error, Result};

//! Exact best subset selection for sparse linear and generalized linear
//! regression, together with the geometric diagnostics that govern when it
//! recovers the true support: identifiability margins, the complexity of
//! residualized signals, and the complexity of spurious projections.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`] – orthonormal bases, projections, principal angles, Schur complements.
//! * [`metric`] – finite metric spaces, covering/packing numbers, entropy integrals.
//! * [`model`] – linear instances, candidate families and the `T`/`G` point sets.
//! * [`bss`] – exact BSS, margins and the sufficiency/necessity checkers.
//! * [`designs`] – covariance builders, seeded Gaussian designs, block-design predictions.
//! * [`glm`] – exponential-family extension (logistic and linear families).
//! * [`experiments`] – seeded Monte Carlo harnesses producing CSV tables.
//! * [`cli`] – the `bss` command-line front end.

pub mod bss;
pub mod cli;
pub mod designs;
pub mod error;
pub mod experiments;
pub mod glm;
pub mod linalg;
pub mod metric;
pub mod model;
pub mod rng;
pub mod subset;

pub use error::{Error, Result};
pub use subset::ModelSubset;

//! Optimistic learning for the contextual multinomial-logit (MNL) bandit.
//!
//! The crate is organised bottom-up:
//!
//! - [`choice`]: MNL choice probabilities, expected revenue, per-item derivatives and sampling.
//! - [`estimator`]: interaction history, regularized maximum likelihood and the design
//!   matrices `H`, `V` and `G`.
//! - [`confidence`]: confidence radii, membership in the norm-based set `C_t` and in the
//!   convex log-loss set `E_t`, and the optimistic revenue maximization over `E_t`.
//! - [`policy`]: assortment enumeration, the optimistic decision step and baselines.
//! - [`simulator`]: synthetic instances, context serving, outcome sampling and `κ` estimation.
//! - [`json`]: JSON output with reals at 17 significant digits.
//! - [`harness`]: experiment loop, regret accounting, diagnostics, CSV/JSON persistence
//!   and aggregation.
//!
//! Item indices are zero-based. Outcome index `0` always means "no purchase"; outcome
//! `j >= 1` is a purchase of the item at position `j - 1` of the offered assortment.

pub mod choice;
pub mod confidence;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod json;
pub mod linalg;
pub mod policy;
pub mod rng;
pub mod simulator;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};

//! Design-based (finite-population) estimation and inference for dynamic
//! causal effects in panel experiments.
//!
//! The potential outcomes of every unit are treated as fixed; the only
//! randomness is the sequential assignment draw. On top of that model the
//! crate provides:
//!
//! - potential outcome panels (general table, linear, autoregressive) and
//!   exact causal estimands ([`panel`]);
//! - sequentially randomized assignment mechanisms, panel draws and adapted
//!   propensity scores ([`assignment`]);
//! - unbiased Horvitz-Thompson-type estimators of lag-p and weighted
//!   lag-(p,q) effects with conservative variance bounds ([`ht`]);
//! - conservative weak-null tests and exact sharp-null randomization tests
//!   ([`inference`]);
//! - linear fixed-effects estimators and their finite-population probability
//!   limits, quantifying carryover bias ([`linear_fe`]);
//! - a seeded, data-parallel Monte Carlo harness for size tables, power
//!   curves and QQ diagnostics ([`sim`]).
//!
//! With the default `parallel` feature, replication loops fan out over
//! rayon; disabling it produces a fully sequential build with identical
//! results.

pub mod alphabet;
pub mod assignment;
pub mod error;
pub mod grid;
pub mod ht;
pub mod inference;
pub mod linear_fe;
pub mod panel;
mod par;
pub mod sim;
pub mod util;

pub use alphabet::{Treatment, TreatmentAlphabet};
pub use error::{Error, Result};
pub use grid::Grid;

//! Closed-form analytics for decomposable continuous-time multi-type
//! branching processes, paired with an exact event-driven simulator used to
//! cross-check every formula.
//!
//! The crate covers three model families:
//!
//! * chains of single-type subprocesses feeding forward ("sequential"
//!   models), where the mean generator is upper triangular and the mean
//!   semigroup has an explicit spectral form;
//! * a vector-valued irreducible block feeding one terminal type
//!   ("vector-fed" models);
//! * a type-change/share model in which particles either switch type or
//!   branch, with mixed and exclusive type classes.
//!
//! `analytics` holds the closed forms, `simulator` the stochastic engine,
//! `verify` the Monte Carlo comparison harness, and `cli` the command-line
//! front end.

pub mod analytics;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod model;
pub mod simulator;
pub mod verify;

pub use error::{Error, Result};

//! Bayesian quickest change detection when observations cost sampling
//! rights.
//!
//! The crate covers the change-point model, posterior recursions, dynamic
//! programming solvers for a fixed budget of rights and for randomly
//! replenished rights, the greedy scheme and its energy chain, baseline
//! policies, asymptotic delay bounds and a seeded Monte Carlo engine.

// `!(x > 0.0)` style guards are there to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod chain;
pub mod config;
pub mod error;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod limited;
pub mod model;
pub mod montecarlo;
pub mod policy;
pub mod posterior;
pub mod quadrature;
pub mod stochastic;

pub use error::{Error, Result};

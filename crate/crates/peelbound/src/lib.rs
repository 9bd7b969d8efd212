//! Localized peeling bounds for ratio-type empirical processes.
//!
//! The crate pairs closed-form deviation certificates with a seeded Monte
//! Carlo engine that computes the corresponding suprema exactly (or with a
//! certified approximation) on concrete function classes.
//!
//! ```text
//! sup_{r < σ_P f ≤ δ} |P_n f − P f| / φ(σ_P f)
//! ```
//!
//! Modules:
//! - [`classes`]: function classes, envelopes, capacity and entropy models
//! - [`peel`]: grids, γ, deviation radii, proposition-level bounds
//! - [`expect`]: expectation bounds for suprema under entropy models
//! - [`sim`]: samplers, exact suprema, replication, small-sample oracle
//! - [`learn`]: margin ratios and excess-risk certificates with ERM solvers
//! - [`lab`]: studies, slope/stability diagnostics, config and report IO

pub mod classes;
pub mod error;
pub mod expect;
pub mod lab;
pub mod learn;
pub mod par;
pub mod peel;
pub mod quad;
pub mod rng;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};

/// Natural log with the convention `log x := log(x ∨ e)`.
#[inline]
pub fn log_e(x: f64) -> f64 {
    if x > std::f64::consts::E {
        x.ln()
    } else {
        1.0
    }
}

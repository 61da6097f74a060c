//! Pseudo-spectral simulation of the generalized good Boussinesq system
//! `u_tt + u_xxxx - u_xx + (f(u))_xx = 0` with virial-identity and
//! local-energy-decay diagnostics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod integrator;
pub mod model;
pub mod spectral;
pub mod virial;
pub mod waveforms;
pub mod weights;

pub use error::{Error, Result};

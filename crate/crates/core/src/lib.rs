//! Deep kernel learning driven by active Bayesian optimization, with two
//! synthetic testbeds: affine-transformed playing-card glyphs and a lattice
//! ferroelectric simulator. A plain VAE provides the latent-space baseline.

pub mod bo;
pub mod cards;
pub mod checkpoint;
pub mod dkl;
pub mod error;
pub mod ferrosim;
pub mod gp;
pub mod latent;
pub mod linalg;
pub mod ndcore;
pub mod runner;
pub mod seed;
pub mod vae;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};

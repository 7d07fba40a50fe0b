//! Simulation and training of a quantum cellular automaton whose layer-to-layer
//! update realizes a dissipative transverse-field Ising chain.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: dense complex kernels (Kronecker products, matrix
//!   exponential, truncated SVD).
//! - [`model`]: couplings, jump operators and the local gates G_k.
//! - [`meanfield`] / [`correlations`]: closed equations of motion for the
//!   order parameter and the stationary phase diagrams they produce.
//! - [`channel`]: the one-layer channel, as a dense superoperator for small
//!   layers and as an MPO acting on vectorized-state MPS for large ones.
//! - [`sampling`]: product-state ensembles with uniform initial order parameter.
//! - [`ensemble`] / [`histogram`]: parallel evolution of an ensemble and the
//!   distribution of its layer magnetization.
//! - [`training`]: order-parameter loss, finite-difference gradients, descent
//!   and landscape sweeps.
//! - [`validation`]: cross-checks between the engine and the dense oracle.

pub mod channel;
pub mod correlations;
pub mod ensemble;
pub mod error;
pub mod histogram;
pub mod linalg;
pub mod meanfield;
pub mod model;
pub mod ode;
pub mod sampling;
pub mod training;
pub mod validation;

pub use error::{QcaError, Result};

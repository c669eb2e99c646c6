//! Pseudo-spectral laboratory for the dissipation-modified
//! Kadomtsev-Petviashvili (DMKP) equation
//!
//! ```text
//! (u_t + u_xxx + u u_x + alpha (u_xx + u_xxxx) + beta (u^2)_xx)_x + eps u_yy = 0
//! ```
//!
//! on periodic grids, together with its Duhamel/Picard formulation, discrete
//! anisotropic Sobolev and Bourgain norms, estimate probes and the
//! second-iterate norm-growth experiment below `H^{-1/2, 0}`.

pub mod cli;
pub mod config;
pub mod duhamel;
pub mod error;
pub mod illposed;
pub mod io;
pub mod norms;
pub mod probes;
pub mod propagator;
pub mod quadrature;
pub mod spectral;
pub mod symbols;

pub use error::{Error, Result};

//! Collective work output of multiple quantum Otto engines coupled to an
//! external quantum system.
//!
//! Two independent routes are provided: closed-form leading-order
//! expressions in [`analytics`] and exact propagation in [`dynamics`].

extern crate blas_src;

pub mod analytics;
pub mod dynamics;
pub mod error;
pub mod fermi;
pub mod hilbert;
pub mod linalg;
pub mod protocols;
pub mod sweeps;

pub use error::{Error, Result};

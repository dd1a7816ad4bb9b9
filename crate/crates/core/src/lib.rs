//! Propagators for divisible quantum dynamical maps built from generalized
//! inverses, with certification of trace preservation, complete positivity,
//! composition and uniqueness.

pub mod analysis;
pub mod basis;
pub mod cli;
pub mod discrete;
pub mod error;
pub mod family;
pub mod ginverse;
pub mod spectral;
pub mod io;
pub mod linalg;
pub mod models;
pub mod propagator;
pub mod reproduce;
pub mod search;
pub mod tol;
pub mod transfer;

pub use error::{Error, Result};
pub use tol::Tolerances;

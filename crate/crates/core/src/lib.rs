//! Joint trajectory and power optimization for a UAV jammer protecting a
//! secondary link in an underlay cognitive radio network.
//!
//! The optimizer maximizes a closed-form lower bound on the average secrecy
//! rate of the ST→SR link by successive inner approximation: each iteration
//! solves a second-order cone program built from surrogates that are tight at
//! the previous point, so the exact objective never decreases and every
//! iterate is feasible for the original problem.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod conic;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod par;
pub mod sca_perfect;
pub mod sca_robust;
pub mod scenario;
pub mod schemes;
pub mod surrogates;

pub use error::{Error, Result};

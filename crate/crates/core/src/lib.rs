//! Effective dissipative XY model of two driven, tunnel-coupled cavity qubits.
//!
//! The pipeline runs from physical parameters ([`model`]) through the
//! effective two-qubit Hamiltonian and its eigensystem ([`spectrum`]),
//! golden-rule rates ([`rates`]), the non-equilibrium steady state
//! ([`steadystate`]) and finally the drive-frequency protocols and parameter
//! sweeps ([`protocols`]).
//!
//! The crate is `no_std` and only needs `alloc`. All frequencies are angular
//! frequencies in units of 2π×GHz and times are in ns.

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod linalg;
pub mod model;
pub mod protocols;
pub mod rates;
pub mod roots;
pub mod spectrum;
pub mod steadystate;

pub use error::{Error, Result};
pub use model::{derived_params, validate_params, DimerParams, DriveParams, EffectiveParams};
pub use protocols::ProtocolTarget;
pub use spectrum::{QubitState, Spectrum};

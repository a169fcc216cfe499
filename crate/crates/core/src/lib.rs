//! Hybrid nonlocality numerics for a qubit coupled to a single bosonic mode.
//!
//! The crate covers the full pipeline from state preparation to disorder
//! statistics:
//!
//! - [`fockspace`]: truncated Fock vectors, pseudospin operators, qubit Pauli
//!   algebra, reduced states and entanglement entropy.
//! - [`jcdynamics`]: closed-form resonant Jaynes-Cummings evolution of product,
//!   cat and classically correlated inputs.
//! - [`bellchsh`]: hybrid correlation matrices and CHSH maximization through the
//!   top two eigenvalues of `TᵀT`, with setting recovery.
//! - [`wigner`]: hybrid Wigner function on the qubit sphere times the phase
//!   plane, and its negativity volume.
//! - [`disorder`]: Gaussian quenched disorder in the coupling, oracle and
//!   realistic measurement strategies, saturation detection and curve fits.
//!
//! The crate is `no_std` (with `alloc`). The default `std` feature only
//! forwards to dependencies; `parallel` enables rayon for the disorder and
//! Wigner reductions without changing any result bit.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod bellchsh;
pub mod disorder;
mod error;
pub mod fockspace;
pub mod jcdynamics;
pub mod math;
pub mod quadrature;
pub mod wigner;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

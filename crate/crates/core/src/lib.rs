//! Open-system simulation of defect spin qubits coupled to the fundamental
//! vibrational mode of a suspended hBN membrane.
//!
//! Layers, bottom up:
//!
//! - [`quantum`]: operators and states on qubit ⊗ Fock spaces.
//! - [`membrane`]: SI membrane/magnet parameters to dimensionless couplings.
//! - [`model`]: Hamiltonians and Lindblad generators (bare and dressed).
//! - [`dynamics`]: time evolution, steady states, pulses and postselection.
//! - [`analysis`]: phonon number, fidelity, Wigner function, squeezing.
//! - [`protocols`]: sideband cooling, cat-state and squeezing experiments.
//!
//! After [`membrane`], every frequency is measured in units of the mechanical
//! frequency and every time in units of its inverse.

pub mod analysis;
pub mod config;
pub mod constants;
pub mod dynamics;
mod error;
pub mod linalg;
pub mod membrane;
pub mod model;
pub mod output;
pub mod protocols;
pub mod quantum;
pub mod validate;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

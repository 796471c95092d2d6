//! Measurement-driven imaginary-time evolution (MQITE) on a dense statevector.
//!
//! The evolution `e^{-tau H}|0>` is approximated by a growing unitary circuit
//! whose rotation angles are read off from computational-basis measurements of
//! `U^† Q U |0>`, one Hamiltonian term at a time.

pub mod dense;
pub mod decomposition;
pub mod error;
pub mod experiment;
pub mod ite;
pub mod measurement;
pub mod mqite;
pub mod problems;
pub mod qse;
pub mod pauli;
pub mod simulator;

pub use error::{Error, Result};
pub use pauli::{Hamiltonian, PauliString, Term};
pub use simulator::{apply_circuit, seeded_rng, Circuit, Layer, Prep, Rng, StateVector};

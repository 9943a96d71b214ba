//! Discriminative variational eigensolver on a dense statevector simulator.
//!
//! The ground state of a Pauli-sum Hamiltonian is found with a plain VQE. Each
//! further eigenstate is found by pairing a Generator circuit with a
//! Discriminator circuit that carries one extra ancilla qubit: the Discriminator
//! learns to push previously found states onto ancilla `|0⟩` and the generated
//! state onto ancilla `|1⟩`, while the Generator minimizes its energy plus a
//! `γ`-weighted penalty for landing on ancilla `|0⟩`.
//!
//! Qubit `q` of an `n`-qubit register is bit `n - 1 - q` of a basis-state
//! index, so bitstrings read left to right as qubit 0, 1, ... and dense
//! operators are Kronecker products in qubit order.

pub mod ansatz;
mod dense;
pub mod driver;
mod error;
pub mod mitigation;
pub mod objective;
pub mod optim;
pub mod oracle;
pub mod pauli;
pub mod seed;
pub mod simulator;

pub use error::{Error, Result};

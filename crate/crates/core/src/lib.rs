//! Shot-noisy variational quantum eigensolver laboratory.
//!
//! The crate simulates small molecular Hamiltonians on a dense statevector,
//! estimates energies from sampled measurement shots grouped into qubitwise
//! commuting cliques, and trains a TD3 agent that picks how many shots each
//! VQE iteration may spend. The [`harness`] module runs seeded multi-trial
//! campaigns and summarizes shots-to-1%-error.
//!
//! Module map:
//!
//! - [`hamiltonian`]: Pauli-sum Hamiltonians, clique grouping, exact ground energies
//! - [`simulator`]: ansatz circuits, statevectors, shot sampling
//! - [`measurement`]: Uniform and variance-minimizing shot allocation
//! - [`vqe`]: parameter-shift gradients, GD/Adam, the optimization loop
//! - [`rl`]: the shot-allocation environment and the TD3 agent
//! - [`harness`]: experiment configs, campaigns, boxplot summaries

pub mod error;
pub mod hamiltonian;
pub mod harness;
pub mod measurement;
pub mod optim;
pub mod rl;
pub mod rng;
pub mod simulator;
pub mod vqe;

pub use error::{Error, Result};

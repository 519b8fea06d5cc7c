//! Numerical laboratory for quantum random walks whose particles sit in an
//! arbitrary normal state.
//!
//! The crate builds the concrete GNS representation of a density matrix,
//! state-preserving pinchings, the block-dependent modification of a walk
//! generator and the resulting limit cocycle generator. It simulates both the
//! discrete walk embedded in Fock space and the limit quantum stochastic
//! cocycle, and certifies the Hudson–Parthasarathy isometry/unitarity
//! conditions for generators built from scaled Hamiltonians.
//!
//! Module map:
//! - [`linalg`]: tensor products, slice maps, matrix and decapitated
//!   exponentials, superoperators.
//! - [`state_gns`]: density states and the GNS triple `(k̂, π, Ω)`.
//! - [`cond_exp`]: pinching conditional expectations `d₀`, `d` and `𝔼`.
//! - [`generators`]: modifications, limit generators, noise counting.
//! - [`walk_sim`]: the embedded discrete walk and a dense brute-force oracle.
//! - [`cocycle`]: limit cocycle and Hudson–Parthasarathy solvers, Hamiltonian
//!   generators, Evans–Hudson generators, Lindblad extraction.
//! - [`experiments`]: fixtures, convergence sweeps and the three-level preset.

pub mod cocycle;
pub mod cond_exp;
pub mod error;
pub mod experiments;
pub mod generators;
pub mod linalg;
pub mod random;
pub mod state_gns;
pub mod walk_sim;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, Superoperator, C64};

//! Discrete-time coined quantum walks on entangled ring quantum networks.
//!
//! The walker's coin is Hadamard-mixed at a vertex only when the two network
//! qubits held there have odd parity. Two engines evolve the joint state:
//!
//! * [`exact::FullState`] keeps the whole `2^{2N} * 2N` amplitude vector and
//!   serves as an oracle for small rings;
//! * [`conditional::ConditionalEnsemble`] uses the conserved edge parities to
//!   split the walk into `2^N` independent `2N`-dimensional walks.
//!
//! On top of these sit entanglement observables, spectral stationary
//! distributions, and an estimator for the average edge entanglement.

pub mod conditional;
pub mod density;
pub mod error;
pub mod estimator;
pub mod exact;
pub mod io;
pub mod linalg;
pub mod network;
pub mod observables;
pub mod spectral;
pub mod verify;
pub mod walk;

pub use num_complex::Complex64 as C64;

pub use conditional::ConditionalEnsemble;
pub use density::{Basis, DensityMatrix};
pub use error::{Error, Result};
pub use exact::FullState;
pub use network::{basis_string, Bipartition, CutKind, EdgeBasisIndex, NetworkSpec, WeightVector};
pub use observables::{Distribution, MomentSummary};
pub use walk::{CoinState, WalkState};

/// Crate version recorded in output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

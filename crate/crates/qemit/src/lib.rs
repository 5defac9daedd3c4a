// Copyright 2026 QubitOS Contributors
// SPDX-License-Identifier: Apache-2.0

//! Simulation toolkit for Markovian optically-active quantum emitters.
//!
//! The crate is organised around the Fock–Liouville (vectorized) picture:
//! density matrices become d²-vectors and every map ρ ↦ AρB becomes the
//! matrix A ⊗ Bᵀ. On top of that algebra it provides
//!
//! - [`dynamics`]: propagators, multi-time correlations, quantum regression,
//!   adiabatic elimination and non-Hermitian reduction,
//! - [`photon_counting`]: the photon-number decomposition into conditional
//!   propagators, detector models (PNRD/BD, dark counts), windows,
//! - [`photonic_state`]: temporal density functions ξ₁/ξ₂, HOM and
//!   self-homodyne observables, time-bin Bell-state analysis,
//! - [`models`]: two-level emitters, cavity QED, three-level defects and the
//!   critical-regime figure-of-merit report,
//! - [`remote_entanglement`]: heralded spin-spin entanglement protocols,
//! - [`local_gates`]: cavity-mediated virtual-photon-exchange phase gates.

pub mod cli;
pub mod dynamics;
pub mod fock_liouville;
pub mod local_gates;
pub mod models;
pub mod photon_counting;
pub mod photonic_state;
pub mod remote_entanglement;

pub use fock_liouville::{DensityState, Operator, SpaceDescriptor, SuperOperator};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("linear algebra backend error: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Exact quantum master equation for small systems.
//!
//! Dense operators live in the 2^N product basis with the electron as the
//! most significant factor and spin-up first; superoperators act on
//! column-stacked density matrices.

mod ops;
mod project;
mod propagate;
mod superop;

pub use ops::{build_hamiltonian, CMatrix, Hamiltonian, SpinOperators, C64, MAX_QME_SPINS};
pub use project::{adiabatic_project, compare_generators, MAX_PROJECTION_SPINS};
pub use propagate::{propagate, propagate_density, PropagateOptions, QmeSeries};
pub use superop::{
    build_liouvillian, build_relaxation, commutator, dissipator, liouvillian, product_state, thermal_correction,
    Superoperator, SuperoperatorKind,
};

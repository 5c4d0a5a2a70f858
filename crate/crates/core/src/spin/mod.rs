//! Physical parameters, spin geometries, coupling constants and the
//! adiabatic validity check.

mod couplings;
mod geometry;
pub(crate) mod params;
mod validity;

pub use couplings::{compute_couplings, Couplings, DipolarCutoff, DipolarPair};
pub(crate) use geometry::distance;
pub use geometry::{generate_lattice, Geometry, LatticeSpec};
pub use params::{thermal_polarization, Nucleus, ParamsSpec, PhysicalParams};
pub use validity::{validate_adiabatic, ValidityReport, DEFAULT_VALIDITY_THRESHOLD};

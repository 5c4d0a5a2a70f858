//! Solid-effect dynamic nuclear polarization as kinetically constrained spin
//! diffusion.
//!
//! The crate provides
//!
//! * [`spin`]: physical parameters, geometries and coupling constants,
//! * [`kmc`]: the effective classical master equation on Zeeman
//!   configurations, sampled by kinetic Monte Carlo,
//! * [`qme`]: the exact quantum master equation for small systems and the
//!   numerical adiabatic elimination that produces the classical generator,
//! * [`diffusion`]: the average diffusion constant of a linear chain and a
//!   1D diffusion solver,
//! * [`experiment`]: configuration files, presets and output bundles.

pub mod diffusion;
pub mod error;
pub mod experiment;
pub mod kmc;
pub mod qme;
pub mod spin;
pub mod units;

pub use error::{Error, Result};

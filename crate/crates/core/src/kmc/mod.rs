//! Effective classical master equation on Zeeman configurations and its
//! kinetic Monte Carlo sampler.

mod config;
mod engine;
mod ensemble;
mod model;
mod rates;
mod sumtree;
mod trajectory;

pub use config::Configuration;
pub use engine::{kmc_step, KmcEngine};
pub use ensemble::{average_trajectories, trajectory_rng, trajectory_seed, PolarizationSeries};
pub use model::{classical_generator, enumerate_events, Event, EventTable, RateModel, MAX_GENERATOR_SPINS};
pub use rates::{ii_flipflop_rate, is_flipflop_rate, single_spin_rates, RateOptions, SingleSpinRates};
pub use trajectory::{run_trajectory, InitialState, TimeGrid, Trajectory};

//! Experiment configuration, presets, output bundles, sweeps and series
//! comparison.

mod chain;
mod compare;
mod config;
mod run;
mod sweep;

pub use chain::{compare_with_diffusion, BoundaryScore, Crossing, DiffusionComparison};
pub use compare::{compare_series, ComparisonReport, SpinComparison, Tolerance};
pub use config::{
    DiffusionConfig, ExperimentConfig, GridConfig, Method, Modifiers, OutputConfig, PairConfig, PhysicsConfig,
    RelaxationConfig, Resolved, SimulationConfig, SweepConfig, SystemConfig, ValidityConfig,
};
pub use run::{
    effective_workers, gate_validity, generators, matrix_csv, run_experiment, run_kmc, run_qme, write_atomic, Bundle,
    DiffusionSummary, Manifest, SEED_DERIVATION,
};
pub use sweep::{set_path, sweep, SweepOutcome};

use crate::error::{Error, Result};

const PRESETS: [(&str, &str); 5] = [
    ("compare-4n", include_str!("../../presets/compare-4n.toml")),
    ("chain-30", include_str!("../../presets/chain-30.toml")),
    ("chain-40-sweep", include_str!("../../presets/chain-40-sweep.toml")),
    ("cube-1331", include_str!("../../presets/cube-1331.toml")),
    ("diffusion-compare", include_str!("../../presets/diffusion-compare.toml")),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|p| p.0).collect()
}

/// The TOML text of a shipped preset.
pub fn preset_text(name: &str) -> Result<&'static str> {
    PRESETS
        .iter()
        .find(|p| p.0 == name)
        .map(|p| p.1)
        .ok_or_else(|| Error::Schema(format!("unknown preset '{name}' (available: {})", preset_names().join(", "))))
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    ExperimentConfig::from_toml(preset_text(name)?)
}

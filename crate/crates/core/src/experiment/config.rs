//! Experiment configuration files.
//!
//! Physical quantities are strings with explicit units (`omega1 = "100 kHz"`)
//! and are parsed by [`crate::units::parse_quantity`]; a bare number where a
//! quantity is expected is a schema error.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmc::{InitialState, RateOptions, TimeGrid};
use crate::spin::{
    compute_couplings, generate_lattice, validate_adiabatic, Couplings, DipolarCutoff, DipolarPair, Geometry,
    LatticeSpec, Nucleus, ParamsSpec, PhysicalParams, ValidityReport, DEFAULT_VALIDITY_THRESHOLD,
};
use crate::units::{parse_quantity, QuantityKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Trajectory average of the classical rate model.
    #[default]
    Kmc,
    /// Exact quantum master equation.
    Qme,
    /// Both, plus a comparison report.
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub method: Method,
    pub physics: PhysicsConfig,
    pub system: SystemConfig,
    #[serde(default)]
    pub modifiers: Modifiers,
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub validity: ValidityConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diffusion: Option<DiffusionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub nucleus: Nucleus,
    pub b0: String,
    pub temperature: String,
    pub omega1: String,
    #[serde(default = "zero_hz")]
    pub offset: String,
    /// Replaces γ_n·B0 as the nuclear Larmor frequency.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nuclear_larmor: Option<String>,
    pub relaxation: RelaxationConfig,
}

fn zero_hz() -> String {
    "0 Hz".into()
}

/// Each channel is given either as a time constant (`t1e = "1 s"`) or as a
/// rate (`r1s = "1 s^-1"`), not both.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxationConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1e: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2e: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1n: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2n: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r1s: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r2s: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r1i: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r2i: Option<String>,
}

fn rate(name: &str, time: &Option<String>, rate: &Option<String>) -> Result<f64> {
    match (time, rate) {
        (Some(t), None) => {
            let t = parse_quantity(t, QuantityKind::Time)?;
            if !(t > 0.0) {
                return Err(Error::Schema(format!("relaxation time for {name} must be positive")));
            }
            Ok(1.0 / t)
        }
        (None, Some(r)) => parse_quantity(r, QuantityKind::Rate),
        (Some(_), Some(_)) => Err(Error::Schema(format!("{name} is given both as a time and as a rate"))),
        (None, None) => Err(Error::Schema(format!("missing relaxation for {name}"))),
    }
}

/// Where the couplings come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    /// Cubic grid around a central electron.
    Cubic {
        side: usize,
        spacing: String,
        #[serde(default)]
        jitter: f64,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        cutoff: DipolarCutoff,
    },
    /// Linear chain with the electron at one end.
    Chain {
        /// Sites including the electron.
        sites: usize,
        spacing: String,
        #[serde(default)]
        jitter: f64,
        /// Polar angle of the chain to the field, degrees.
        angle_deg: f64,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        cutoff: DipolarCutoff,
    },
    /// Positions read from a whitespace table (electron first).
    GeometryFile {
        path: PathBuf,
        #[serde(default)]
        cutoff: DipolarCutoff,
    },
    /// Tabulated constants. Nuclei are numbered from 0.
    Couplings {
        hyperfine: Vec<String>,
        pseudosecular: Vec<String>,
        #[serde(default)]
        dipolar: Vec<PairConfig>,
    },
    /// Nearest-neighbour chain with normally distributed d and the
    /// pseudosecular coupling on the first nucleus only.
    RandomChain {
        nuclei: usize,
        #[serde(default = "zero_hz")]
        hyperfine: String,
        pseudosecular_first: String,
        d_mean: String,
        d_sd: String,
        #[serde(default)]
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub k: usize,
    pub j: usize,
    pub d: String,
}

/// Scalings applied after the couplings are built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Modifiers {
    /// Factor on every d_kj.
    #[serde(default = "one")]
    pub dipolar_scale: f64,
    /// Extra factor on d_kj for pairs not involving nucleus 0.
    #[serde(default = "one")]
    pub bulk_dipolar_scale: f64,
    /// Factor on |B| of nucleus 0.
    #[serde(default = "one")]
    pub first_pseudosecular_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for Modifiers {
    fn default() -> Self {
        Self { dipolar_scale: 1.0, bulk_dipolar_scale: 1.0, first_pseudosecular_scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridConfig {
    Linear { t_max: String, points: usize },
    /// `points` log-spaced times from `t_min` to `t_max`, preceded by 0.
    Log { t_min: String, t_max: String, points: usize },
    Explicit { times: Vec<String> },
}

impl GridConfig {
    pub fn resolve(&self) -> Result<TimeGrid> {
        let t = |s: &str| parse_quantity(s, QuantityKind::Time);
        match self {
            GridConfig::Linear { t_max, points } => TimeGrid::linear(t(t_max)?, *points),
            GridConfig::Log { t_min, t_max, points } => TimeGrid::log_spaced(t(t_min)?, t(t_max)?, *points),
            GridConfig::Explicit { times } => TimeGrid::new(times.iter().map(|s| t(s)).collect::<Result<_>>()?),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub trajectories: usize,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub second_order: bool,
    pub grid: GridConfig,
    #[serde(default)]
    pub initial: InitialState,
    /// Trace and truncation tolerance of the exact propagation.
    #[serde(default = "default_qme_tolerance")]
    pub qme_tolerance: f64,
}

fn default_qme_tolerance() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidityConfig {
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Run even when the validity check fails; a warning goes to the manifest.
    #[serde(default)]
    pub override_validity: bool,
}

fn default_threshold() -> f64 {
    DEFAULT_VALIDITY_THRESHOLD
}

impl Default for ValidityConfig {
    fn default() -> Self {
        Self { threshold: DEFAULT_VALIDITY_THRESHOLD, override_validity: false }
    }
}

/// Comparison of a chain run against the 1D diffusion model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionConfig {
    /// Contour levels as fractions of the source level.
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
    #[serde(default = "default_intervals")]
    pub intervals: usize,
    /// Times before this fraction of t_max are the initial transient.
    #[serde(default = "default_transient")]
    pub transient_fraction: f64,
    /// Times from this fraction of t_max on are "late".
    #[serde(default = "default_late")]
    pub late_fraction: f64,
}

fn default_levels() -> Vec<f64> {
    vec![0.2, 0.4, 0.6, 0.8]
}

fn default_intervals() -> usize {
    300
}

fn default_transient() -> f64 {
    0.01
}

fn default_late() -> f64 {
    0.5
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        Self {
            levels: default_levels(),
            intervals: default_intervals(),
            transient_fraction: default_transient(),
            late_fraction: default_late(),
        }
    }
}

/// Default sweep run by `dnp sweep` when no path is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub path: String,
    pub values: Vec<toml::Value>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Defaults to `out/<name>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Also write the classical generator (and its projection for N ≤ 4).
    #[serde(default)]
    pub dump_generator: bool,
}

/// A configuration with every quantity parsed and the system built.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub params: PhysicalParams,
    pub couplings: Couplings,
    pub geometry: Option<Geometry>,
    pub grid: TimeGrid,
    pub rate_options: RateOptions,
    pub validity: ValidityReport,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Schema(e.message().to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            Error::Schema(m) => Error::Parse { path: path.to_path_buf(), message: m },
            e => e,
        })?;
        // Relative geometry files are relative to the config file.
        if let SystemConfig::GeometryFile { path: g, .. } = &mut cfg.system {
            if g.is_relative() {
                if let Some(dir) = path.parent() {
                    *g = dir.join(&*g);
                }
            }
        }
        Ok(cfg)
    }

    /// The config stored in a run manifest.
    pub fn from_manifest(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let v: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        let cfg = v.get("config").cloned().ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            message: "manifest has no config".into(),
        })?;
        let cfg: Self = serde_json::from_value(cfg)
            .map_err(|e| Error::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Schema(e.to_string()))
    }

    /// Structural checks that need no computation.
    pub fn check(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::Schema("name must not be empty".into()));
        }
        if self.simulation.trajectories == 0 {
            return Err(Error::Schema("simulation.trajectories must be at least 1".into()));
        }
        if let SystemConfig::GeometryFile { path, .. } = &self.system {
            if !path.exists() {
                return Err(Error::Schema(format!("geometry file {} does not exist", path.display())));
            }
        }
        if let Some(d) = &self.diffusion {
            if d.levels.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
                return Err(Error::Schema("diffusion levels must lie in (0, 1)".into()));
            }
        }
        let m = &self.modifiers;
        if [m.dipolar_scale, m.bulk_dipolar_scale, m.first_pseudosecular_scale].iter().any(|v| !v.is_finite()) {
            return Err(Error::Schema("modifiers must be finite".into()));
        }
        Ok(())
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output.dir.clone().unwrap_or_else(|| PathBuf::from("out").join(&self.name))
    }

    pub fn params_spec(&self) -> Result<ParamsSpec> {
        let p = &self.physics;
        let r = &p.relaxation;
        Ok(ParamsSpec {
            b0: parse_quantity(&p.b0, QuantityKind::Field)?,
            temperature: parse_quantity(&p.temperature, QuantityKind::Temperature)?,
            nucleus: p.nucleus,
            omega1: parse_quantity(&p.omega1, QuantityKind::Frequency)?,
            offset: parse_quantity(&p.offset, QuantityKind::Frequency)?,
            r1s: rate("electron T1", &r.t1e, &r.r1s)?,
            r2s: rate("electron T2", &r.t2e, &r.r2s)?,
            r1i: rate("nuclear T1", &r.t1n, &r.r1i)?,
            r2i: rate("nuclear T2", &r.t2n, &r.r2i)?,
            nuclear_larmor: p
                .nuclear_larmor
                .as_deref()
                .map(|s| parse_quantity(s, QuantityKind::Frequency))
                .transpose()?,
        })
    }

    /// Builds parameters, geometry and couplings and runs the validity check.
    pub fn resolve(&self) -> Result<Resolved> {
        self.check()?;
        let params = PhysicalParams::new(&self.params_spec()?)?;
        let (geometry, mut couplings) = build_system(&self.system, &params)?;
        let m = &self.modifiers;
        if m.dipolar_scale != 1.0 || m.bulk_dipolar_scale != 1.0 {
            couplings.scale_dipolar(|k, _| m.dipolar_scale * if k >= 1 { m.bulk_dipolar_scale } else { 1.0 });
        }
        if m.first_pseudosecular_scale != 1.0 && couplings.n_nuclei() > 0 {
            couplings.scale_pseudosecular(0, m.first_pseudosecular_scale);
        }
        let grid = self.simulation.grid.resolve()?;
        let validity = validate_adiabatic(&params, &couplings, self.validity.threshold);
        Ok(Resolved {
            config: self.clone(),
            params,
            couplings,
            geometry,
            grid,
            rate_options: RateOptions { second_order: self.simulation.second_order },
            validity,
        })
    }
}

fn build_system(system: &SystemConfig, params: &PhysicalParams) -> Result<(Option<Geometry>, Couplings)> {
    let freq = |s: &str| parse_quantity(s, QuantityKind::Frequency);
    let len = |s: &str| parse_quantity(s, QuantityKind::Length);
    let from_geometry = |g: Geometry, cutoff: DipolarCutoff| -> Result<_> {
        let c = compute_couplings(&g, params, cutoff)?;
        Ok((Some(g), c))
    };
    match system {
        SystemConfig::Cubic { side, spacing, jitter, seed, cutoff } => {
            let spec = LatticeSpec::Cubic { side: *side, spacing: len(spacing)?, jitter: *jitter, seed: *seed };
            from_geometry(generate_lattice(&spec)?, *cutoff)
        }
        SystemConfig::Chain { sites, spacing, jitter, angle_deg, seed, cutoff } => {
            let spec = LatticeSpec::Chain {
                sites: *sites,
                spacing: len(spacing)?,
                jitter: *jitter,
                angle: angle_deg.to_radians(),
                seed: *seed,
            };
            from_geometry(generate_lattice(&spec)?, *cutoff)
        }
        SystemConfig::GeometryFile { path, cutoff } => from_geometry(Geometry::read(path)?, *cutoff),
        SystemConfig::Couplings { hyperfine, pseudosecular, dipolar } => {
            let a = hyperfine.iter().map(|s| freq(s)).collect::<Result<Vec<_>>>()?;
            let bsq = pseudosecular.iter().map(|s| freq(s).map(|b| b * b)).collect::<Result<Vec<_>>>()?;
            let pairs = dipolar
                .iter()
                .map(|p| Ok(DipolarPair { k: p.k, j: p.j, d: freq(&p.d)? }))
                .collect::<Result<Vec<_>>>()?;
            Ok((None, Couplings::new(a, bsq, pairs)?))
        }
        SystemConfig::RandomChain { nuclei, hyperfine, pseudosecular_first, d_mean, d_sd, seed } => {
            if *nuclei < 1 {
                return Err(Error::Schema("random chain needs at least one nucleus".into()));
            }
            let normal = Normal::new(freq(d_mean)?, freq(d_sd)?).map_err(|e| Error::Schema(format!("d_sd: {e}")))?;
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let pairs: Vec<_> =
                (0..nuclei - 1).map(|k| DipolarPair { k, j: k + 1, d: normal.sample(&mut rng) }).collect();
            let mut bsq = vec![0.0; *nuclei];
            bsq[0] = freq(pseudosecular_first)?.powi(2);
            Ok((None, Couplings::new(vec![freq(hyperfine)?; *nuclei], bsq, pairs)?))
        }
    }
}

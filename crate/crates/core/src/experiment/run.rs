use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::chain::{compare_with_diffusion, DiffusionComparison};
use super::compare::{compare_series, ComparisonReport, Tolerance};
use super::config::{ExperimentConfig, Method, Resolved};
use crate::error::{Error, Result};
use crate::kmc::{average_trajectories, classical_generator, PolarizationSeries, RateModel, MAX_GENERATOR_SPINS};
use crate::qme::{adiabatic_project, build_liouvillian, product_state, propagate, PropagateOptions, MAX_PROJECTION_SPINS};
use crate::spin::{PhysicalParams, ValidityReport};
use crate::units::UNIT_CONVENTION;

/// How trajectory seeds derive from the master seed.
pub const SEED_DERIVATION: &str = "trajectory i uses ChaCha8 seeded with splitmix64(master ^ splitmix64(i))";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub code_version: String,
    /// The configuration as run, including command-line overrides.
    pub config: ExperimentConfig,
    pub params: PhysicalParams,
    pub nuclei: usize,
    pub master_seed: u64,
    pub seed_derivation: String,
    pub workers: usize,
    pub unit_convention: String,
    pub validity: ValidityReport,
    pub warnings: Vec<String>,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison_pass: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diffusion: Option<DiffusionSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSummary {
    pub d_av: f64,
    pub source: f64,
    pub reflective_max_relative: f64,
    pub reflective_late_rms: f64,
    pub absorbing_late_rms: f64,
}

/// Everything a run produced, also written to `dir`.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub kmc: Option<PolarizationSeries>,
    pub qme: Option<PolarizationSeries>,
    pub comparison: Option<ComparisonReport>,
    pub diffusion: Option<DiffusionComparison>,
}

/// Writes through a temporary file in the same directory and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Dense matrix as CSV rows without a header.
pub fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for r in 0..m.nrows() {
        let row: Vec<String> = m.row(r).iter().map(f64::to_string).collect();
        out += &row.join(",");
        out.push('\n');
    }
    out
}

fn series_csv(s: &PolarizationSeries) -> Vec<u8> {
    let mut buf = Vec::new();
    s.write_csv(&mut buf).expect("writing to memory");
    buf
}

pub fn effective_workers(requested: usize) -> usize {
    if requested > 0 {
        requested
    } else {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    }
}

/// Refuses a failing validity check unless overridden; returns the warning
/// to record when overridden.
pub fn gate_validity(r: &Resolved) -> Result<Option<String>> {
    if r.validity.pass {
        return Ok(None);
    }
    if !r.config.validity.override_validity {
        return Err(Error::Validity(Box::new(r.validity.clone())));
    }
    Ok(Some(format!(
        "validity check overridden: ratio {:.3e} below threshold {} (dominant term {})",
        r.validity.ratio, r.validity.threshold, r.validity.dominant
    )))
}

pub fn run_kmc(r: &Resolved) -> Result<PolarizationSeries> {
    let model = RateModel::new(&r.params, &r.couplings, r.rate_options)?;
    let sim = &r.config.simulation;
    average_trajectories(
        &model,
        r.params.p0(),
        &r.grid,
        sim.trajectories,
        sim.seed,
        effective_workers(sim.workers),
        &sim.initial,
    )
}

pub fn run_qme(r: &Resolved) -> Result<PolarizationSeries> {
    let l = build_liouvillian(&r.params, &r.couplings)?;
    let n_spins = r.couplings.n_nuclei() + 1;
    let rho0 = product_state(&r.config.simulation.initial.polarizations(n_spins, r.params.p0())?)?;
    let opts = PropagateOptions { tolerance: r.config.simulation.qme_tolerance };
    Ok(propagate(&l, &rho0, &r.grid, opts)?.to_series())
}

/// Classical generator, and its numerical projection when the system is small
/// enough.
pub fn generators(r: &Resolved) -> Result<(DMatrix<f64>, Option<DMatrix<f64>>)> {
    let n_spins = r.couplings.n_nuclei() + 1;
    if n_spins > MAX_GENERATOR_SPINS {
        return Err(Error::Capacity { what: "generator dump", spins: n_spins, max: MAX_GENERATOR_SPINS });
    }
    let model = RateModel::new(&r.params, &r.couplings, r.rate_options)?;
    let analytic = classical_generator(&model)?;
    let numeric = if n_spins <= MAX_PROJECTION_SPINS { Some(adiabatic_project(&r.params, &r.couplings)?) } else { None };
    Ok((analytic, numeric))
}

/// Runs an experiment and writes its bundle to the configured output
/// directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Bundle> {
    let start = Instant::now();
    let r = cfg.resolve()?;
    let warning = gate_validity(&r)?;
    let dir = cfg.output_dir();
    let mut outputs = Vec::new();
    let mut write = |name: &str, bytes: &[u8]| -> Result<()> {
        write_atomic(&dir.join(name), bytes)?;
        outputs.push(name.to_string());
        Ok(())
    };

    let kmc = matches!(cfg.method, Method::Kmc | Method::Both).then(|| run_kmc(&r)).transpose()?;
    let qme = matches!(cfg.method, Method::Qme | Method::Both).then(|| run_qme(&r)).transpose()?;
    if let Some(s) = &kmc {
        write("series.csv", &series_csv(s))?;
    }
    if let Some(s) = &qme {
        write("qme.csv", &series_csv(s))?;
    }
    let comparison = match (&kmc, &qme) {
        (Some(k), Some(q)) => {
            let report = compare_series(k, q, Tolerance::default())?;
            write("comparison.csv", report.to_csv().as_bytes())?;
            Some(report)
        }
        _ => None,
    };
    if let Some(g) = &r.geometry {
        write("geometry.txt", g.to_table().as_bytes())?;
    }
    if cfg.output.dump_generator {
        let (analytic, numeric) = generators(&r)?;
        write("generator.csv", matrix_csv(&analytic).as_bytes())?;
        if let Some(m) = numeric {
            write("generator_projected.csv", matrix_csv(&m).as_bytes())?;
        }
    }
    let diffusion = match (&cfg.diffusion, &kmc, &r.geometry) {
        (Some(dc), Some(k), Some(g)) => {
            let (cmp, fields) = compare_with_diffusion(k, g, &r.couplings, &r.params, dc)?;
            write("diffusion_reflective.csv", fields[0].to_csv().as_bytes())?;
            write("diffusion_absorbing.csv", fields[1].to_csv().as_bytes())?;
            write("crossings.csv", cmp.crossings_csv().as_bytes())?;
            Some(cmp)
        }
        (Some(_), _, None) => return Err(Error::Schema("diffusion comparison needs a chain geometry".into())),
        (Some(_), None, _) => return Err(Error::Schema("diffusion comparison needs a kMC run".into())),
        _ => None,
    };

    let manifest = Manifest {
        name: cfg.name.clone(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        params: r.params.clone(),
        nuclei: r.couplings.n_nuclei(),
        master_seed: cfg.simulation.seed,
        seed_derivation: SEED_DERIVATION.to_string(),
        workers: effective_workers(cfg.simulation.workers),
        unit_convention: UNIT_CONVENTION.to_string(),
        validity: r.validity.clone(),
        warnings: warning.into_iter().collect(),
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs: {
            let mut o = outputs;
            o.push("manifest.json".into());
            o
        },
        comparison_pass: comparison.as_ref().map(|c| c.pass),
        diffusion: diffusion.as_ref().map(|d| DiffusionSummary {
            d_av: d.d_av,
            source: d.source,
            reflective_max_relative: d.reflective.max_relative,
            reflective_late_rms: d.reflective.late_rms,
            absorbing_late_rms: d.absorbing.late_rms,
        }),
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Schema(e.to_string()))?;
    write_atomic(&dir.join("manifest.json"), json.as_bytes())?;
    Ok(Bundle { dir, manifest, kmc, qme, comparison, diffusion })
}

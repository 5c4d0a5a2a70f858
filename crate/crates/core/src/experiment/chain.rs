//! Chain kMC runs against the 1D diffusion model.
//!
//! The first nucleus acts as the source: its mean polarization after the
//! initial transient fixes the source level, and every other nucleus sits at
//! its distance along the chain. Both series are normalized by the source
//! level. For each nucleus and contour level the first time the polarization
//! crosses that level is compared between kMC and the PDE.

use serde::{Deserialize, Serialize};

use super::config::DiffusionConfig;
use crate::diffusion::{
    average_diffusion_constant, chain_spacings, first_crossing, solve_diffusion, Boundary, DiffusionField,
    DiffusionSpec,
};
use crate::error::{Error, Result};
use crate::kmc::{PolarizationSeries, TimeGrid};
use crate::spin::{Couplings, Geometry, PhysicalParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    /// Nucleus index (0 is the source).
    pub nucleus: usize,
    pub level: f64,
    pub t_pde: f64,
    /// t_max when the kMC average never reaches the level.
    pub t_kmc: f64,
    pub kmc_reached: bool,
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryScore {
    pub boundary: Boundary,
    /// Crossings at or after the transient.
    pub crossings: Vec<Crossing>,
    pub max_relative: f64,
    /// RMS of the normalized kMC − PDE difference over nuclei and late times.
    pub late_rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionComparison {
    pub d_av: f64,
    pub source: f64,
    pub transient: f64,
    pub late_from: f64,
    /// Distance of each nucleus from the first, Å.
    pub positions: Vec<f64>,
    pub reflective: BoundaryScore,
    pub absorbing: BoundaryScore,
}

impl DiffusionComparison {
    /// Reflective crossings within `tolerance` relative, and the absorbing
    /// variant further off at late times.
    pub fn pass(&self, tolerance: f64) -> bool {
        self.reflective.max_relative <= tolerance && self.absorbing.late_rms > self.reflective.late_rms
    }

    pub fn crossings_csv(&self) -> String {
        let mut out = String::from("boundary,nucleus,level,t_pde,t_kmc,kmc_reached,relative\n");
        for score in [&self.reflective, &self.absorbing] {
            let b = match score.boundary {
                Boundary::Reflective => "reflective",
                Boundary::Absorbing => "absorbing",
            };
            for c in &score.crossings {
                out += &format!(
                    "{b},{},{},{},{},{},{}\n",
                    c.nucleus, c.level, c.t_pde, c.t_kmc, c.kmc_reached, c.relative
                );
            }
        }
        out
    }
}

/// Runs the comparison and returns the two PDE fields (reflective first).
pub fn compare_with_diffusion(
    series: &PolarizationSeries,
    geometry: &Geometry,
    couplings: &Couplings,
    params: &PhysicalParams,
    cfg: &DiffusionConfig,
) -> Result<(DiffusionComparison, [DiffusionField; 2])> {
    let n = couplings.n_nuclei();
    if n < 3 || series.n_spins() != n + 1 {
        return Err(Error::DimensionMismatch(format!(
            "diffusion comparison needs a chain of at least 3 nuclei matching the series ({} nuclei, {} spins)",
            n,
            series.n_spins()
        )));
    }
    let spacings = chain_spacings(geometry);
    let d_av = average_diffusion_constant(couplings, &spacings, params.r2i)?;
    let times = &series.times;
    let t_max = *times.last().unwrap();
    let transient = cfg.transient_fraction * t_max;
    let late_from = cfg.late_fraction * t_max;

    let plateau: Vec<f64> = times.iter().zip(series.spin(1)).filter(|(t, _)| **t >= transient).map(|(_, p)| p).collect();
    if plateau.is_empty() {
        return Err(Error::Spec("no grid times after the transient".into()));
    }
    let source = plateau.iter().sum::<f64>() / plateau.len() as f64;
    if source == 0.0 {
        return Err(Error::Domain("source nucleus is unpolarized; nothing to compare".into()));
    }

    let mut positions = vec![0.0];
    for s in &spacings {
        positions.push(positions.last().unwrap() + s);
    }
    let grid = TimeGrid::new(times.clone())?;
    let kmc: Vec<Vec<f64>> = (1..n).map(|k| series.spin(k + 1).iter().map(|p| p / source).collect()).collect();

    let mut fields = Vec::with_capacity(2);
    let mut scores = Vec::with_capacity(2);
    for boundary in [Boundary::Reflective, Boundary::Absorbing] {
        let spec = DiffusionSpec::new(positions[n - 1], cfg.intervals, boundary, 1.0);
        let field = solve_diffusion(d_av, &spec, &grid)?;
        let mut crossings = Vec::new();
        let (mut ss, mut count) = (0.0, 0usize);
        for (k, kv) in (1..n).zip(&kmc) {
            let pv = field.at(positions[k]);
            for &level in &cfg.levels {
                let Some(t_pde) = first_crossing(times, &pv, level) else { continue };
                if t_pde < transient {
                    continue;
                }
                let tk = first_crossing(times, kv, level);
                let t_kmc = tk.unwrap_or(t_max);
                crossings.push(Crossing {
                    nucleus: k,
                    level,
                    t_pde,
                    t_kmc,
                    kmc_reached: tk.is_some(),
                    relative: (t_kmc - t_pde) / t_pde,
                });
            }
            for (i, &t) in times.iter().enumerate() {
                if t >= late_from {
                    ss += (kv[i] - pv[i]).powi(2);
                    count += 1;
                }
            }
        }
        let max_relative = crossings.iter().map(|c| c.relative.abs()).fold(0.0, f64::max);
        let late_rms = if count == 0 { f64::NAN } else { (ss / count as f64).sqrt() };
        scores.push(BoundaryScore { boundary, crossings, max_relative, late_rms });
        fields.push(field);
    }
    let absorbing = scores.pop().unwrap();
    let reflective = scores.pop().unwrap();
    let fields: [DiffusionField; 2] = fields.try_into().unwrap();
    Ok((DiffusionComparison { d_av, source, transient, late_from, positions, reflective, absorbing }, fields))
}

//! Average diffusion constant of a nuclear chain and a 1D diffusion model
//! ∂p/∂t = D ∂²p/∂x² with a constant source at x = 0.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmc::TimeGrid;
use crate::spin::{Couplings, Geometry};

/// Nearest-neighbour distances (Å) along the nuclei of a geometry, in index order.
pub fn chain_spacings(geom: &Geometry) -> Vec<f64> {
    geom.nuclei()
        .windows(2)
        .map(|w| crate::spin::distance(&w[0], &w[1]))
        .collect()
}

/// Per-link constants D_k = 4R2I·d_k²·a_k² / ((4R2I)² + (A_k − A_{k+1})²)
/// in Å² s⁻¹, for k = 0..n−1.
pub fn diffusion_constants(c: &Couplings, spacings: &[f64], r2i: f64) -> Result<Vec<f64>> {
    let n = c.n_nuclei();
    if n < 2 {
        return Err(Error::Domain(format!("a chain needs at least 2 nuclei, got {n}")));
    }
    if spacings.len() != n - 1 {
        return Err(Error::DimensionMismatch(format!(
            "{} spacings for a chain of {n} nuclei",
            spacings.len()
        )));
    }
    if !(r2i > 0.0 && r2i.is_finite()) {
        return Err(Error::Domain(format!("R2I must be positive, got {r2i}")));
    }
    let a = c.a();
    let g = 4.0 * r2i;
    Ok((0..n - 1)
        .map(|k| {
            let d = c.d(k, k + 1);
            let da = a[k] - a[k + 1];
            g * d * d * spacings[k] * spacings[k] / (g * g + da * da)
        })
        .collect())
}

/// Mean of [`diffusion_constants`].
pub fn average_diffusion_constant(c: &Couplings, spacings: &[f64], r2i: f64) -> Result<f64> {
    let dk = diffusion_constants(c, spacings, r2i)?;
    Ok(dk.iter().sum::<f64>() / dk.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// p(L, t) = 0.
    Absorbing,
    /// ∂p/∂x(L, t) = 0.
    Reflective,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSpec {
    /// Domain length L (Å).
    pub length: f64,
    /// Number of intervals; the grid has `intervals + 1` points.
    pub intervals: usize,
    /// Condition at x = L.
    pub boundary: Boundary,
    /// Dirichlet value at x = 0; `None` makes x = 0 reflective.
    pub source: Option<f64>,
    /// Largest step count per output interval before giving up.
    #[serde(default = "default_max_substeps")]
    pub max_substeps: usize,
    /// Max change between successive halvings of the time step.
    #[serde(default = "default_time_tolerance")]
    pub time_tolerance: f64,
}

fn default_max_substeps() -> usize {
    1 << 14
}

fn default_time_tolerance() -> f64 {
    1e-4
}

impl DiffusionSpec {
    pub fn new(length: f64, intervals: usize, boundary: Boundary, source: f64) -> Self {
        Self {
            length,
            intervals,
            boundary,
            source: Some(source),
            max_substeps: default_max_substeps(),
            time_tolerance: default_time_tolerance(),
        }
    }

    pub fn dx(&self) -> f64 {
        self.length / self.intervals as f64
    }
}

/// Polarization on a space-time grid, `p[t][x]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionField {
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    pub p: Vec<Vec<f64>>,
    pub boundary: Option<Boundary>,
    /// Reference level: the source, or for sampled data the plateau used
    /// as the source.
    pub source: f64,
}

impl DiffusionField {
    /// Wraps sampled data (for instance a kMC profile) as a field.
    pub fn from_samples(x: Vec<f64>, t: Vec<f64>, p: Vec<Vec<f64>>, source: f64) -> Result<Self> {
        if x.is_empty() || x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Spec("positions must be non-empty and increasing".into()));
        }
        if p.len() != t.len() || p.iter().any(|r| r.len() != x.len()) {
            return Err(Error::DimensionMismatch(format!(
                "field has {} rows for {} times and {} positions",
                p.len(),
                t.len(),
                x.len()
            )));
        }
        Ok(Self { x, t, p, boundary: None, source })
    }

    /// p(x, t_j) for every time, linearly interpolated in x.
    pub fn at(&self, x: f64) -> Vec<f64> {
        let i = self.x.partition_point(|&v| v <= x);
        self.p
            .iter()
            .map(|row| {
                if i == 0 {
                    row[0]
                } else if i == self.x.len() {
                    row[i - 1]
                } else {
                    let f = (x - self.x[i - 1]) / (self.x[i] - self.x[i - 1]);
                    row[i - 1] + f * (row[i] - row[i - 1])
                }
            })
            .collect()
    }

    /// Trapezoid integral of p over x at each time.
    pub fn integral(&self) -> Vec<f64> {
        self.p
            .iter()
            .map(|row| {
                row.windows(2)
                    .zip(self.x.windows(2))
                    .map(|(p, x)| 0.5 * (p[0] + p[1]) * (x[1] - x[0]))
                    .sum()
            })
            .collect()
    }

    /// CSV with columns x,t,p.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,t,p\n");
        for (row, t) in self.p.iter().zip(&self.t) {
            for (p, x) in row.iter().zip(&self.x) {
                let _ = writeln!(out, "{x},{t},{p}");
            }
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Solves the tridiagonal system with sub-, main and super-diagonals `a`, `b`, `c`.
fn thomas(a: &[f64], b: &[f64], c: &[f64], rhs: &mut [f64]) {
    let n = b.len();
    let mut cp = vec![0.0; n];
    cp[0] = c[0] / b[0];
    rhs[0] /= b[0];
    for i in 1..n {
        let m = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / m;
        rhs[i] = (rhs[i] - a[i] * rhs[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= cp[i] * rhs[i + 1];
    }
}

/// Implicit Euler with `m` steps per output interval. Reflective ends use a
/// ghost node mirrored through the boundary.
fn integrate(d: f64, spec: &DiffusionSpec, initial: &[f64], times: &[f64], m: usize) -> Vec<Vec<f64>> {
    let nx = spec.intervals;
    let dx = spec.dx();
    let mut p = initial.to_vec();
    let first = if spec.source.is_some() { 1 } else { 0 };
    let last = match spec.boundary {
        Boundary::Reflective => nx,
        Boundary::Absorbing => nx - 1,
    };
    let n = last + 1 - first;
    let mut out = Vec::with_capacity(times.len());
    out.push(p.clone());
    for w in times.windows(2) {
        let r = d * (w[1] - w[0]) / m as f64 / (dx * dx);
        let mut sub = vec![-r; n];
        let main = vec![1.0 + 2.0 * r; n];
        let mut sup = vec![-r; n];
        if spec.source.is_none() {
            sup[0] = -2.0 * r;
        }
        if spec.boundary == Boundary::Reflective {
            sub[n - 1] = -2.0 * r;
        }
        for _ in 0..m {
            let mut rhs = p[first..=last].to_vec();
            if let Some(s) = spec.source {
                rhs[0] += r * s;
            }
            thomas(&sub, &main, &sup, &mut rhs);
            p[first..=last].copy_from_slice(&rhs);
        }
        out.push(p.clone());
    }
    out
}

/// Field on `grid`, starting from p = 0 away from the source.
pub fn solve_diffusion(d: f64, spec: &DiffusionSpec, grid: &TimeGrid) -> Result<DiffusionField> {
    let mut initial = vec![0.0; spec.intervals + 1];
    if let Some(s) = spec.source {
        initial[0] = s;
    }
    solve_diffusion_from(d, spec, &initial, grid)
}

/// Field on `grid` from an initial profile on the `intervals + 1` nodes.
///
/// The step count per output interval is doubled until the largest change
/// between successive solutions drops below `spec.time_tolerance`; the finer
/// solution is returned. D = 0 leaves the initial condition unchanged.
pub fn solve_diffusion_from(d: f64, spec: &DiffusionSpec, initial: &[f64], grid: &TimeGrid) -> Result<DiffusionField> {
    if !(d >= 0.0 && d.is_finite()) {
        return Err(Error::Domain(format!("diffusion constant must be non-negative, got {d}")));
    }
    if !(spec.length > 0.0 && spec.length.is_finite()) || spec.intervals < 2 {
        return Err(Error::Spec(format!(
            "diffusion grid needs positive length and at least 2 intervals (got {}, {})",
            spec.length, spec.intervals
        )));
    }
    if initial.len() != spec.intervals + 1 {
        return Err(Error::DimensionMismatch(format!(
            "initial profile has {} values for {} nodes",
            initial.len(),
            spec.intervals + 1
        )));
    }
    let mut initial = initial.to_vec();
    if let Some(s) = spec.source {
        initial[0] = s;
    }
    if spec.boundary == Boundary::Absorbing {
        initial[spec.intervals] = 0.0;
    }
    let times = grid.times();
    let x: Vec<f64> = (0..=spec.intervals).map(|i| i as f64 * spec.dx()).collect();
    let mut m = 1;
    let mut prev = integrate(d, spec, &initial, times, m);
    let p = loop {
        if m >= spec.max_substeps {
            return Err(Error::Domain(format!(
                "time stepping did not converge to {:e} within {} steps per interval",
                spec.time_tolerance, spec.max_substeps
            )));
        }
        m *= 2;
        let next = integrate(d, spec, &initial, times, m);
        let change = prev
            .iter()
            .flatten()
            .zip(next.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if change < spec.time_tolerance {
            break next;
        }
        prev = next;
    };
    // Discrete maximum principle: values stay within the range of the data.
    let bounds = initial
        .iter()
        .chain(spec.source.as_ref())
        .chain(std::iter::once(&0.0))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let tol = 1e-12 * bounds.0.abs().max(bounds.1.abs()).max(1.0);
    for (row, t) in p.iter().zip(times) {
        if let Some(v) = row.iter().find(|&&v| v < bounds.0 - tol || v > bounds.1 + tol) {
            return Err(Error::Domain(format!(
                "maximum principle violated: p = {v} outside [{}, {}] at t = {t}",
                bounds.0, bounds.1
            )));
        }
    }
    let source = spec.source.unwrap_or(bounds.1);
    Ok(DiffusionField { x, t: times.to_vec(), p, boundary: Some(spec.boundary), source })
}

/// Position of one contour level over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub level: f64,
    /// (t, x*) for every time at which the level is reached somewhere.
    pub points: Vec<(f64, f64)>,
}

/// For each level and time, the largest x where p crosses the level, with
/// linear interpolation between grid points; x* = L when p is above the
/// level at the far end. Times where p never reaches the level are omitted.
pub fn contour_times(field: &DiffusionField, levels: &[f64]) -> Result<Vec<Contour>> {
    let (lo, hi) = (field.source.min(0.0), field.source.max(0.0));
    if let Some(l) = levels.iter().find(|&&l| !(l > lo && l < hi)) {
        return Err(Error::Domain(format!("contour level {l} is not inside (0, {})", field.source)));
    }
    let above = |v: f64, l: f64| if field.source >= 0.0 { v >= l } else { v <= l };
    Ok(levels
        .iter()
        .map(|&level| {
            let points = field
                .p
                .iter()
                .zip(&field.t)
                .filter_map(|(row, &t)| {
                    let i = row.iter().rposition(|&v| above(v, level))?;
                    if i + 1 == row.len() {
                        return Some((t, field.x[i]));
                    }
                    let (p0, p1) = (row[i], row[i + 1]);
                    let f = (p0 - level) / (p0 - p1);
                    Some((t, field.x[i] + f * (field.x[i + 1] - field.x[i])))
                })
                .collect();
            Contour { level, points }
        })
        .collect())
}

/// CSV with columns level,t,x.
pub fn contours_to_csv(contours: &[Contour]) -> String {
    let mut out = String::from("level,t,x\n");
    for c in contours {
        for (t, x) in &c.points {
            let _ = writeln!(out, "{},{t},{x}", c.level);
        }
    }
    out
}

/// First time at which `values` reaches `level`, linearly interpolated
/// between samples; `None` if it never does.
pub fn first_crossing(times: &[f64], values: &[f64], level: f64) -> Option<f64> {
    let i = values.iter().position(|&v| v >= level)?;
    if i == 0 {
        return Some(times[0]);
    }
    let (v0, v1) = (values[i - 1], values[i]);
    let f = (level - v0) / (v1 - v0);
    Some(times[i - 1] + f * (times[i] - times[i - 1]))
}

//! Comparison of two polarization series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmc::PolarizationSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    /// Allowed deviation in units of the combined standard error.
    pub sigma: f64,
    /// Allowed deviation regardless of the error bars.
    pub absolute: f64,
    /// Interpolate `b` linearly onto the times of `a` instead of requiring
    /// identical grids.
    pub interpolate: bool,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { sigma: 3.0, absolute: 0.0, interpolate: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinComparison {
    pub spin: usize,
    pub max_abs: f64,
    /// Largest |a − b| / combined standard error (0 where both are exact and
    /// equal, infinite where they are exact and differ).
    pub max_sigma: f64,
    /// Time of the largest deviation in σ.
    pub worst_time: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub tolerance: Tolerance,
    pub spins: Vec<SpinComparison>,
    pub pass: bool,
}

impl ComparisonReport {
    pub fn failing_spins(&self) -> Vec<usize> {
        self.spins.iter().filter(|s| !s.pass).map(|s| s.spin).collect()
    }

    pub fn max_sigma(&self) -> f64 {
        self.spins.iter().map(|s| s.max_sigma).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("spin,max_abs,max_sigma,worst_time,pass\n");
        for s in &self.spins {
            out += &format!("{},{},{},{},{}\n", s.spin, s.max_abs, s.max_sigma, s.worst_time, s.pass);
        }
        out
    }

    /// One line per failing spin, or a single summary line.
    pub fn summary(&self) -> String {
        if self.pass {
            return format!(
                "pass: {} spins, max deviation {:.2} sigma (tolerance {} sigma + {})",
                self.spins.len(),
                self.max_sigma(),
                self.tolerance.sigma,
                self.tolerance.absolute
            );
        }
        self.spins
            .iter()
            .filter(|s| !s.pass)
            .map(|s| {
                format!(
                    "fail: spin {} deviates by {:.3e} ({:.2} sigma) at t = {}",
                    s.spin, s.max_abs, s.max_sigma, s.worst_time
                )
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

fn interp(times: &[f64], values: &[f64], t: f64) -> f64 {
    let i = times.partition_point(|&x| x < t);
    if i == 0 {
        return values[0];
    }
    if i == times.len() {
        return values[times.len() - 1];
    }
    let (t0, t1) = (times[i - 1], times[i]);
    values[i - 1] + (values[i] - values[i - 1]) * (t - t0) / (t1 - t0)
}

/// Per-spin deviation of `a` from `b`. A NaN standard error counts as zero.
pub fn compare_series(a: &PolarizationSeries, b: &PolarizationSeries, tol: Tolerance) -> Result<ComparisonReport> {
    if a.n_spins() != b.n_spins() {
        return Err(Error::DimensionMismatch(format!("{} spins vs {} spins", a.n_spins(), b.n_spins())));
    }
    let same_grid = a.times.len() == b.times.len()
        && a.times.iter().zip(&b.times).all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(y.abs()));
    if !same_grid && !tol.interpolate {
        return Err(Error::GridMismatch(format!(
            "{} vs {} time points (t_max {} vs {})",
            a.times.len(),
            b.times.len(),
            a.times.last().copied().unwrap_or(0.0),
            b.times.last().copied().unwrap_or(0.0)
        )));
    }
    if !same_grid {
        let (lo, hi) = (b.times[0], *b.times.last().unwrap());
        if a.times.iter().any(|&t| t < lo || t > hi) {
            return Err(Error::GridMismatch("interpolation would extrapolate outside the second grid".into()));
        }
    }
    let clean = |e: f64| if e.is_nan() { 0.0 } else { e };
    let mut spins = Vec::with_capacity(a.n_spins());
    for s in 0..a.n_spins() {
        let (bm, be) = if same_grid {
            (b.spin(s), b.spin_stderr(s))
        } else {
            let (m, e) = (b.spin(s), b.spin_stderr(s));
            (
                a.times.iter().map(|&t| interp(&b.times, &m, t)).collect(),
                a.times.iter().map(|&t| interp(&b.times, &e, t)).collect(),
            )
        };
        let mut cmp = SpinComparison { spin: s, max_abs: 0.0, max_sigma: 0.0, worst_time: a.times[0], pass: true };
        for (i, &t) in a.times.iter().enumerate() {
            let diff = (a.mean[i][s] - bm[i]).abs();
            let se = clean(a.stderr[i][s]).hypot(clean(be[i]));
            let z = if diff == 0.0 { 0.0 } else { diff / se };
            cmp.max_abs = cmp.max_abs.max(diff);
            if z > cmp.max_sigma {
                cmp.max_sigma = z;
                cmp.worst_time = t;
            }
            if diff.is_nan() || diff > tol.sigma * se + tol.absolute {
                cmp.pass = false;
            }
        }
        spins.push(cmp);
    }
    let pass = spins.iter().all(|s| s.pass);
    Ok(ComparisonReport { tolerance: tol, spins, pass })
}

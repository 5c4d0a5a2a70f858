//! Exact propagation of ρ(t) = exp(L t) ρ(0) on a time grid.
//!
//! The generator is stiff (Larmor terms ~1e9 s⁻¹ against spans of hours), so
//! instead of time stepping we build exp(L h) − 1 for a tiny h by Taylor
//! series and double it up with E ← 2E + E². Grid times are composed from the
//! binary expansion of t/h, plus a short series for the remainder. Working in a Hermitian operator basis keeps
//! everything real.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ops::{CMatrix, SpinOperators};
use super::superop::Superoperator;
use crate::error::{Error, Result};
use crate::kmc::{PolarizationSeries, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagateOptions {
    /// Global error budget for the series truncation, spread over all
    /// doubling steps; also the tolerance of the trace check.
    pub tolerance: f64,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        Self { tolerance: 1e-8 }
    }
}

/// Per-spin polarization 2⟨m_s⟩ and trace on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct QmeSeries {
    pub times: Vec<f64>,
    /// `polarization[t][s]`, electron first.
    pub polarization: Vec<Vec<f64>>,
    pub trace: Vec<f64>,
}

impl QmeSeries {
    /// As a series with zero standard error.
    pub fn to_series(&self) -> PolarizationSeries {
        PolarizationSeries {
            times: self.times.clone(),
            mean: self.polarization.clone(),
            stderr: self.polarization.iter().map(|r| vec![0.0; r.len()]).collect(),
            trajectories: 0,
        }
    }
}

/// Orthonormal Hermitian basis of d×d operators, indexed like vec(ρ):
/// index a + b·d holds E_aa when a = b, (E_ab + E_ba)/√2 when a < b and
/// i(E_ba − E_ab)/√2 when a > b.
struct HermitianBasis {
    d: usize,
}

impl HermitianBasis {
    /// Nonzero entries (vec index, value) of basis element k.
    fn column(&self, k: usize) -> [(usize, nalgebra::Complex<f64>); 2] {
        use nalgebra::Complex;
        let (a, b) = (k % self.d, k / self.d);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let zero = (k, Complex::new(0.0, 0.0));
        if a == b {
            [(k, Complex::new(1.0, 0.0)), zero]
        } else if a < b {
            [(a + b * self.d, Complex::new(s, 0.0)), (b + a * self.d, Complex::new(s, 0.0))]
        } else {
            // Element for the pair (b, a) with b < a: i(E_ba − E_ab)/√2.
            [(b + a * self.d, Complex::new(0.0, s)), (a + b * self.d, Complex::new(0.0, -s))]
        }
    }

    /// U† L U; returns the real part and the largest imaginary entry.
    fn transform(&self, l: &CMatrix) -> (DMatrix<f64>, f64) {
        let n = self.d * self.d;
        let mut lu = CMatrix::zeros(n, n);
        for k in 0..n {
            for (j, u) in self.column(k) {
                if u.norm() == 0.0 {
                    continue;
                }
                let src = l.column(j) * u;
                let mut dst = lu.column_mut(k);
                dst += src;
            }
        }
        let mut out = DMatrix::zeros(n, n);
        let mut max_im: f64 = 0.0;
        for k in 0..n {
            let cols = self.column(k);
            for l_ in 0..n {
                let mut v = nalgebra::Complex::new(0.0, 0.0);
                for (i, u) in cols {
                    if u.norm() != 0.0 {
                        v += u.conj() * lu[(i, l_)];
                    }
                }
                out[(k, l_)] = v.re;
                max_im = max_im.max(v.im.abs());
            }
        }
        (out, max_im)
    }

    fn coefficients(&self, rho: &CMatrix) -> (DVector<f64>, f64) {
        let n = self.d * self.d;
        let mut out = DVector::zeros(n);
        let mut max_im: f64 = 0.0;
        for k in 0..n {
            let mut v = nalgebra::Complex::new(0.0, 0.0);
            for (i, u) in self.column(k) {
                if u.norm() != 0.0 {
                    v += u.conj() * rho[(i % self.d, i / self.d)];
                }
            }
            out[k] = v.re;
            max_im = max_im.max(v.im.abs());
        }
        (out, max_im)
    }

    fn density(&self, coeffs: &DVector<f64>) -> CMatrix {
        let mut rho = CMatrix::zeros(self.d, self.d);
        for k in 0..self.d * self.d {
            for (i, u) in self.column(k) {
                if u.norm() != 0.0 {
                    rho[(i % self.d, i / self.d)] += u * coeffs[k];
                }
            }
        }
        rho
    }
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// exp(A) − 1 by Taylor series, stopping once terms fall below `tol`·‖A‖₁.
fn expm1_taylor(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let scale = norm1(a);
    let mut term = a.clone();
    let mut sum = a.clone();
    for m in 2..60 {
        term = &term * a / m as f64;
        sum += &term;
        if norm1(&term) <= tol * scale {
            break;
        }
    }
    sum
}

/// Density matrices ρ(t_j) = exp(L t_j) ρ0 for every grid time.
pub fn propagate_density(
    l: &Superoperator,
    rho0: &CMatrix,
    grid: &TimeGrid,
    opts: PropagateOptions,
) -> Result<Vec<CMatrix>> {
    let d = rho0.nrows();
    if rho0.ncols() != d || l.matrix.nrows() != d * d || l.matrix.ncols() != d * d {
        return Err(Error::DimensionMismatch(format!(
            "density matrix {}×{} does not match superoperator {}×{}",
            rho0.nrows(),
            rho0.ncols(),
            l.matrix.nrows(),
            l.matrix.ncols()
        )));
    }
    let tr = rho0.trace();
    if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
        return Err(Error::Propagation(format!("initial state has trace {tr}")));
    }
    let basis = HermitianBasis { d };
    let (lr, l_im) = basis.transform(&l.matrix);
    let l_norm = norm1(&lr);
    if l_im > 1e-10 * l_norm.max(1.0) {
        return Err(Error::Propagation(format!(
            "generator does not preserve Hermiticity (imaginary part {l_im:e} in Hermitian basis)"
        )));
    }
    let (v0, rho_im) = basis.coefficients(rho0);
    if rho_im > 1e-12 {
        return Err(Error::Propagation("initial state is not Hermitian".into()));
    }
    let t_max = grid.t_max();
    let mut states: Vec<DVector<f64>> = vec![v0; grid.len()];
    if t_max > 0.0 && l_norm > 0.0 {
        let k_steps = (2.0 * l_norm * t_max).log2().ceil().max(0.0) as u32;
        if k_steps > 62 {
            return Err(Error::Propagation(format!(
                "‖L‖₁·t = {:e} needs {k_steps} doublings (max 62)",
                l_norm * t_max
            )));
        }
        let h = t_max / (1u64 << k_steps) as f64;
        let counts: Vec<u64> = grid.times().iter().map(|t| (t / h).round() as u64).collect();
        let step_tol = (opts.tolerance / (1u64 << k_steps) as f64).max(1e-18);
        let mut e = expm1_taylor(&(&lr * h), step_tol);
        for k in 0..=k_steps {
            for (v, &n) in states.iter_mut().zip(&counts) {
                if (n >> k) & 1 == 1 {
                    let dv = &e * &*v;
                    *v += dv;
                }
            }
            if k < k_steps && counts.iter().any(|&n| n >> (k + 1) != 0) {
                let sq = &e * &e;
                e = e * 2.0 + sq;
            }
        }
        // Rounding t to a multiple of h leaves |δ| ≤ h/2, so ‖L δ‖₁ ≤ 1/4.
        for ((v, &n), &t) in states.iter_mut().zip(&counts).zip(grid.times()) {
            let delta = t - n as f64 * h;
            if delta != 0.0 {
                let mut term = v.clone();
                for m in 1..40 {
                    term = &lr * &term * (delta / m as f64);
                    *v += &term;
                    if term.amax() <= step_tol * v.amax() {
                        break;
                    }
                }
            }
        }
    }
    let out: Vec<CMatrix> = states.iter().map(|v| basis.density(v)).collect();
    for (rho, t) in out.iter().zip(grid.times()) {
        let tr = rho.trace().re;
        if !tr.is_finite() || (tr - 1.0).abs() > opts.tolerance {
            return Err(Error::Propagation(format!("trace {tr} at t = {t} s exceeds tolerance {:e}", opts.tolerance)));
        }
    }
    Ok(out)
}

/// Per-spin polarizations 2⟨m_s⟩ of ρ(t) on `grid`.
pub fn propagate(l: &Superoperator, rho0: &CMatrix, grid: &TimeGrid, opts: PropagateOptions) -> Result<QmeSeries> {
    let states = propagate_density(l, rho0, grid, opts)?;
    let d = rho0.nrows();
    let n_spins = d.trailing_zeros() as usize;
    let ops = SpinOperators::new(n_spins)?;
    let mut polarization = Vec::with_capacity(states.len());
    let mut trace = Vec::with_capacity(states.len());
    for rho in &states {
        trace.push(rho.trace().re);
        polarization.push(
            (0..n_spins)
                .map(|s| (0..d).map(|b| 2.0 * ops.m(b, s) * rho[(b, b)].re).sum())
                .collect(),
        );
    }
    Ok(QmeSeries { times: grid.times().to_vec(), polarization, trace })
}

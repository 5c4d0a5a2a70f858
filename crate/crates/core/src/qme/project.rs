//! Numerical adiabatic elimination of coherences onto the Zeeman subspace.

use nalgebra::{Complex, DMatrix};

use super::ops::{build_hamiltonian, CMatrix, C64};
use super::superop::{build_relaxation, commutator};
use crate::error::{Error, Result};
use crate::spin::{Couplings, PhysicalParams};

/// Largest system for which the projection is computed.
pub const MAX_PROJECTION_SPINS: usize = 4;

/// Classical generator obtained by eliminating first the nonzero-quantum and
/// then the non-Zeeman zero-quantum coherences.
///
/// The zero-quantum generator is L0 = M0 + M1/ωI + M2/ωI² with
/// M0 = −iĤ0 + Γ, M1 = −i[Ĥ+, Ĥ−] and M2 = −Ĥ+ X Ĥ− − Ĥ− X Ĥ+,
/// X = iĤ0 − Γ (hats are commutator superoperators, Γ the relaxation
/// generator). The result is the Schur complement of L0 on the populations,
/// as a real 2^N × 2^N matrix indexed like the Zeeman basis.
pub fn adiabatic_project(params: &PhysicalParams, c: &Couplings) -> Result<DMatrix<f64>> {
    let n = c.n_nuclei() + 1;
    if n > MAX_PROJECTION_SPINS {
        return Err(Error::Capacity { what: "adiabatic projection", spins: n, max: MAX_PROJECTION_SPINS });
    }
    let h = build_hamiltonian(params, c)?;
    let gamma = build_relaxation(params, c.n_nuclei())?.matrix;
    let i = Complex::new(0.0, 1.0);
    let h0 = commutator(&h.h0);
    let hp = commutator(&h.h_plus);
    let hm = commutator(&h.h_minus);
    let m0 = &h0 * -i + &gamma;
    let m1 = (&hp * &hm - &hm * &hp) * -i;
    let x = &h0 * i - &gamma;
    let m2 = -(&hp * &x * &hm) - &hm * &x * &hp;
    let wi = params.omega_i();
    let l0: CMatrix = m0 + m1 / Complex::new(wi, 0.0) + m2 / Complex::new(wi * wi, 0.0);

    let d = 1usize << n;
    let popcount = |a: usize| a.count_ones();
    let zeeman: Vec<usize> = (0..d).map(|a| a + a * d).collect();
    let coherent: Vec<usize> = (0..d)
        .flat_map(|b| (0..d).map(move |a| (a, b)))
        .filter(|&(a, b)| a != b && popcount(a) == popcount(b))
        .map(|(a, b)| a + b * d)
        .collect();
    let block = |rows: &[usize], cols: &[usize]| CMatrix::from_fn(rows.len(), cols.len(), |r, s| l0[(rows[r], cols[s])]);
    let l11 = block(&zeeman, &zeeman);
    let lz = if coherent.is_empty() {
        l11
    } else {
        let l12 = block(&zeeman, &coherent);
        let l21 = block(&coherent, &zeeman);
        let l22 = block(&coherent, &coherent);
        let y = l22
            .lu()
            .solve(&l21)
            .ok_or_else(|| Error::Elimination("coherence block is singular".into()))?;
        if y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Elimination("coherence block is numerically singular".into()));
        }
        l11 - l12 * y
    };
    let scale = lz.iter().map(|v: &C64| v.re.abs()).fold(0.0, f64::max);
    let max_im = lz.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    if max_im > 1e-8 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Elimination(format!("projected generator has imaginary part {max_im:e}")));
    }
    Ok(lz.map(|v| v.re))
}

/// max |a − b| / max(|b|, floor) over entries where either matrix is nonzero.
pub fn compare_generators(numeric: &DMatrix<f64>, analytic: &DMatrix<f64>, floor: f64) -> Result<f64> {
    if numeric.shape() != analytic.shape() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} vs {:?}",
            numeric.shape(),
            analytic.shape()
        )));
    }
    Ok(numeric
        .iter()
        .zip(analytic.iter())
        .filter(|(a, b)| **a != 0.0 || **b != 0.0)
        .map(|(a, b)| (a - b).abs() / b.abs().max(floor))
        .fold(0.0, f64::max))
}

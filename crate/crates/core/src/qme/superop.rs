//! Superoperators on column-stacked density matrices: vec(A ρ B) = (Bᵀ ⊗ A) vec ρ.

use super::ops::{build_hamiltonian, c, CMatrix, Hamiltonian, SpinOperators, C64};
use crate::error::Result;
use crate::spin::{Couplings, PhysicalParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuperoperatorKind {
    Commutator,
    Dissipator,
    ThermalCorrection,
    Relaxation,
    Liouvillian,
}

#[derive(Debug, Clone)]
pub struct Superoperator {
    pub kind: SuperoperatorKind,
    pub matrix: CMatrix,
}

/// Adds `coeff · (a ⊗ b)` to `out`, visiting only nonzero factor entries.
fn add_kron(out: &mut CMatrix, coeff: C64, a: &CMatrix, b: &CMatrix) {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let nz_b: Vec<(usize, usize, C64)> = (0..cb)
        .flat_map(|j| (0..rb).map(move |i| (i, j)))
        .filter_map(|(i, j)| {
            let v = b[(i, j)];
            (v != c(0.0)).then_some((i, j, v))
        })
        .collect();
    for ja in 0..ca {
        for ia in 0..ra {
            let va = a[(ia, ja)];
            if va == c(0.0) {
                continue;
            }
            let f = coeff * va;
            for &(ib, jb, vb) in &nz_b {
                out[(ia * rb + ib, ja * cb + jb)] += f * vb;
            }
        }
    }
}

/// vec([H, ρ]) = (1 ⊗ H − Hᵀ ⊗ 1) vec ρ.
pub fn commutator(h: &CMatrix) -> CMatrix {
    let d = h.nrows();
    let id = CMatrix::identity(d, d);
    let mut out = CMatrix::zeros(d * d, d * d);
    add_kron(&mut out, c(1.0), &id, h);
    add_kron(&mut out, c(-1.0), &h.transpose(), &id);
    out
}

fn add_dissipator(out: &mut CMatrix, rate: f64, x: &CMatrix) {
    if rate == 0.0 {
        return;
    }
    let d = x.nrows();
    let id = CMatrix::identity(d, d);
    let xdx = x.adjoint() * x;
    add_kron(out, c(rate), &x.conjugate(), x);
    add_kron(out, c(-0.5 * rate), &id, &xdx);
    add_kron(out, c(-0.5 * rate), &xdx.transpose(), &id);
}

/// D(X)ρ = XρX† − {ρ, X†X}/2.
pub fn dissipator(x: &CMatrix) -> CMatrix {
    let d = x.nrows();
    let mut out = CMatrix::zeros(d * d, d * d);
    add_dissipator(&mut out, 1.0, x);
    out
}

/// P0·R1S [D(S−) − D(S+)]/2.
pub fn thermal_correction(params: &PhysicalParams, n_nuclei: usize) -> Result<Superoperator> {
    let ops = SpinOperators::new(n_nuclei + 1)?;
    let d = ops.dim();
    let mut m = CMatrix::zeros(d * d, d * d);
    let r = params.p0() * params.r1s / 2.0;
    add_dissipator(&mut m, r, &ops.lower(0));
    add_dissipator(&mut m, -r, &ops.raise(0));
    Ok(Superoperator { kind: SuperoperatorKind::ThermalCorrection, matrix: m })
}

/// Γ = Γ1 + Γ2 including the thermal correction.
pub fn build_relaxation(params: &PhysicalParams, n_nuclei: usize) -> Result<Superoperator> {
    let ops = SpinOperators::new(n_nuclei + 1)?;
    let d = ops.dim();
    let mut m = CMatrix::zeros(d * d, d * d);
    let (up, down) = (ops.raise(0), ops.lower(0));
    let p0 = params.p0();
    add_dissipator(&mut m, params.r1s / 2.0 * (1.0 - p0), &up);
    add_dissipator(&mut m, params.r1s / 2.0 * (1.0 + p0), &down);
    add_dissipator(&mut m, 2.0 * params.r2s, &ops.sz(0));
    for s in 1..=n_nuclei {
        add_dissipator(&mut m, params.r1i / 2.0, &ops.raise(s));
        add_dissipator(&mut m, params.r1i / 2.0, &ops.lower(s));
        add_dissipator(&mut m, 2.0 * params.r2i, &ops.sz(s));
    }
    Ok(Superoperator { kind: SuperoperatorKind::Relaxation, matrix: m })
}

/// L = −i[H, ·] + Γ.
pub fn liouvillian(h: &Hamiltonian, relaxation: &Superoperator) -> Superoperator {
    let mut l = commutator(&h.total()) * C64::new(0.0, -1.0);
    l += &relaxation.matrix;
    Superoperator { kind: SuperoperatorKind::Liouvillian, matrix: l }
}

/// Full Liouvillian of a system.
pub fn build_liouvillian(params: &PhysicalParams, couplings: &Couplings) -> Result<Superoperator> {
    let h = build_hamiltonian(params, couplings)?;
    let g = build_relaxation(params, couplings.n_nuclei())?;
    Ok(liouvillian(&h, &g))
}

/// Product state ⊗ diag((1+p)/2, (1−p)/2) from per-spin polarizations,
/// electron first.
pub fn product_state(polarizations: &[f64]) -> Result<CMatrix> {
    let ops = SpinOperators::new(polarizations.len())?;
    let d = ops.dim();
    let mut rho = CMatrix::zeros(d, d);
    for b in 0..d {
        let w: f64 = polarizations
            .iter()
            .enumerate()
            .map(|(s, p)| (1.0 + 2.0 * ops.m(b, s) * p) / 2.0)
            .product();
        rho[(b, b)] = c(w);
    }
    Ok(rho)
}

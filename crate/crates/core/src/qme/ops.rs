use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::spin::{Couplings, PhysicalParams};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Largest system for which dense operators are built.
pub const MAX_QME_SPINS: usize = 6;

pub(crate) fn c(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

/// Single-spin operators embedded in the 2^N product basis.
///
/// Spin 0 (the electron) is the most significant tensor factor and spin-up is
/// the first state of every factor, so basis index b has spin s down iff bit
/// N−1−s of b is set.
#[derive(Debug, Clone)]
pub struct SpinOperators {
    n_spins: usize,
}

impl SpinOperators {
    pub fn new(n_spins: usize) -> Result<Self> {
        if n_spins == 0 || n_spins > MAX_QME_SPINS {
            return Err(Error::Capacity { what: "quantum master equation", spins: n_spins, max: MAX_QME_SPINS });
        }
        Ok(Self { n_spins })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        1 << self.n_spins
    }

    /// m_s = ±1/2 of spin `s` in basis state `b`.
    pub fn m(&self, b: usize, s: usize) -> f64 {
        if (b >> (self.n_spins - 1 - s)) & 1 == 0 {
            0.5
        } else {
            -0.5
        }
    }

    fn bit(&self, s: usize) -> usize {
        1 << (self.n_spins - 1 - s)
    }

    pub fn sz(&self, s: usize) -> CMatrix {
        let d = self.dim();
        CMatrix::from_fn(d, d, |i, j| if i == j { c(self.m(i, s)) } else { c(0.0) })
    }

    /// Raising operator |↑⟩⟨↓| on spin `s`.
    pub fn raise(&self, s: usize) -> CMatrix {
        let d = self.dim();
        let bit = self.bit(s);
        let mut op = CMatrix::zeros(d, d);
        for b in 0..d {
            if b & bit != 0 {
                op[(b ^ bit, b)] = c(1.0);
            }
        }
        op
    }

    pub fn lower(&self, s: usize) -> CMatrix {
        self.raise(s).transpose()
    }

    pub fn identity(&self) -> CMatrix {
        CMatrix::identity(self.dim(), self.dim())
    }
}

/// The four parts of the spin Hamiltonian (rad s⁻¹).
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    /// ωI (S_z + Σ I_kz).
    pub zeeman: CMatrix,
    /// λ S_z + Σ A_k I_kz S_z + Σ d_kj (3 I_kz I_jz − I_k·I_j).
    pub h0: CMatrix,
    /// (ω1/2) S_+ + ½ Σ B_k I_k+ S_z, with real B_k = |B_k|.
    pub h_plus: CMatrix,
    pub h_minus: CMatrix,
}

impl Hamiltonian {
    pub fn total(&self) -> CMatrix {
        &self.zeeman + &self.h0 + &self.h_plus + &self.h_minus
    }
}

pub fn build_hamiltonian(params: &PhysicalParams, c_: &Couplings) -> Result<Hamiltonian> {
    let ops = SpinOperators::new(c_.n_nuclei() + 1)?;
    let n = c_.n_nuclei();
    let sz = ops.sz(0);
    let nuc_z: Vec<CMatrix> = (1..=n).map(|s| ops.sz(s)).collect();
    let nuc_p: Vec<CMatrix> = (1..=n).map(|s| ops.raise(s)).collect();
    let nuc_m: Vec<CMatrix> = (1..=n).map(|s| ops.lower(s)).collect();

    let mut zeeman = sz.clone();
    for iz in &nuc_z {
        zeeman += iz;
    }
    zeeman *= c(params.omega_i());

    let mut h0 = &sz * c(params.offset);
    for k in 0..n {
        h0 += &nuc_z[k] * &sz * c(c_.a()[k]);
    }
    for p in c_.pairs() {
        let (zk, zj) = (&nuc_z[p.k], &nuc_z[p.j]);
        // 3 IzIz − I·I = 2 IzIz − ½(I+I− + I−I+).
        let flipflop = &nuc_p[p.k] * &nuc_m[p.j] + &nuc_m[p.k] * &nuc_p[p.j];
        h0 += (zk * zj * c(2.0) - flipflop * c(0.5)) * c(p.d);
    }

    let mut h_plus = ops.raise(0) * c(params.omega1 / 2.0);
    for k in 0..n {
        h_plus += &nuc_p[k] * &sz * c(c_.b_abs(k) / 2.0);
    }
    let h_minus = h_plus.adjoint();
    Ok(Hamiltonian { zeeman, h0, h_plus, h_minus })
}

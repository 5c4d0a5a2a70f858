//! Jump rates of the effective Zeeman-subspace master equation.
//!
//! Single-spin rates are constant. The electron–nucleus flip-flop rate is
//! quenched by the secular hyperfine field of all *other* nuclei, and the
//! nucleus–nucleus flip-flop rate by the hyperfine mismatch of the pair.

use serde::{Deserialize, Serialize};

use super::config::Configuration;
use crate::error::{Error, Result};
use crate::spin::{Couplings, PhysicalParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RateOptions {
    /// Include the 1/ωI corrections to the constraint operators.
    #[serde(default)]
    pub second_order: bool,
}

/// Constant single-spin flip rates (s⁻¹).
#[derive(Debug, Clone, PartialEq)]
pub struct SingleSpinRates {
    /// Γ^(S)_+: electron down → up.
    pub electron_up: f64,
    /// Γ^(S)_−: electron up → down.
    pub electron_down: f64,
    /// Γ^(I)_k±, equal in both directions.
    pub nuclear: Vec<f64>,
}

pub fn single_spin_rates(params: &PhysicalParams, c: &Couplings) -> Result<SingleSpinRates> {
    let wi = params.omega_i();
    if wi == 0.0 {
        return Err(Error::Domain("nuclear Larmor frequency is zero".into()));
    }
    let wi2 = wi * wi;
    let p0 = params.p0();
    let drive = params.omega1 * params.omega1 / (2.0 * wi2) * params.r2s;
    Ok(SingleSpinRates {
        electron_up: (1.0 - p0) / 2.0 * params.r1s + drive,
        electron_down: (1.0 + p0) / 2.0 * params.r1s + drive,
        nuclear: c
            .bsq()
            .iter()
            .map(|b2| params.r1i / 2.0 + b2 / (8.0 * wi2) * params.r2i)
            .collect(),
    })
}

/// Electron–nucleus flip-flop rate Γ^(IS)_k evaluated on `conf`.
///
/// Returns the rate whether or not the event is currently applicable. The
/// constraint sum excludes nucleus `k` and is evaluated term by term, so the
/// value before and after the flip-flop is bit-identical.
pub fn is_flipflop_rate(
    k: usize,
    conf: &Configuration,
    params: &PhysicalParams,
    c: &Couplings,
    opts: RateOptions,
) -> f64 {
    let width = params.r2s + params.r2i;
    let wi = params.omega_i();
    let pref = params.omega1 * params.omega1 * c.bsq()[k] / (8.0 * wi * wi * width);
    let mut field = constraint_field(k, conf, params.offset, c.a());
    if opts.second_order {
        field += (4.0 * params.omega1 * params.omega1 - c.bsq()[k]) / (8.0 * wi);
    }
    let dk = field / width;
    pref / (1.0 + dk * dk)
}

/// λ + Σ_{s≠k} A_s m_s summed in index order, so the value does not depend on
/// the state of nucleus `k`.
pub(crate) fn constraint_field(k: usize, conf: &Configuration, offset: f64, a: &[f64]) -> f64 {
    let mut field = offset;
    for (s, &a_s) in a.iter().enumerate() {
        if s != k {
            field += a_s * conf.nucleus_m(s);
        }
    }
    field
}

/// Nucleus–nucleus flip-flop rate Γ^(II)_kj evaluated on `conf`.
///
/// Without second-order corrections this depends on the electron only through
/// m_S² = 1/4, so it is the same in every configuration.
pub fn ii_flipflop_rate(
    k: usize,
    j: usize,
    conf: &Configuration,
    params: &PhysicalParams,
    c: &Couplings,
    opts: RateOptions,
) -> Result<f64> {
    if params.r2i == 0.0 {
        return Err(Error::Domain("R2I = 0: nuclear flip-flop rate diverges".into()));
    }
    if k == j {
        return Err(Error::Domain(format!("flip-flop needs two distinct nuclei, got {k} twice")));
    }
    Ok(pair_rate(
        c.d(k, j),
        c.a()[k] - c.a()[j],
        c.bsq()[k] - c.bsq()[j],
        conf.electron_m(),
        params,
        opts,
    ))
}

pub(crate) fn pair_rate(d: f64, da: f64, dbsq: f64, m_s: f64, params: &PhysicalParams, opts: RateOptions) -> f64 {
    let mut detune = da * m_s;
    if opts.second_order {
        detune += dbsq / (8.0 * params.omega_i());
    }
    let ckj = detune / (2.0 * params.r2i);
    d * d / (4.0 * params.r2i) / (1.0 + ckj * ckj)
}

#![allow(dead_code)]

use std::f64::consts::PI;

use dnp_core::kmc::{classical_generator, RateModel, RateOptions};
use dnp_core::qme::{adiabatic_project, compare_generators};
use dnp_core::spin::{validate_adiabatic, Couplings, Nucleus, ParamsSpec, PhysicalParams, DEFAULT_VALIDITY_THRESHOLD};
use nalgebra::DMatrix;

pub const TWO_PI: f64 = 2.0 * PI;

/// 1H at 3.4 T and 1 K with a 50 kHz drive.
pub fn spec() -> ParamsSpec {
    ParamsSpec {
        b0: 3.4,
        temperature: 1.0,
        nucleus: Nucleus::Proton,
        omega1: TWO_PI * 50e3,
        offset: 0.0,
        r1s: 1.0,
        r2s: 1e5,
        r1i: 1.0 / 3600.0,
        r2i: 200.0,
        nuclear_larmor: None,
    }
}

pub fn params(f: impl FnOnce(&mut ParamsSpec)) -> PhysicalParams {
    let mut s = spec();
    f(&mut s);
    PhysicalParams::new(&s).unwrap()
}

/// z-component of |b⟩ for spin `s` of `n`: +1/2 for up. Basis: spin 0 is the
/// most significant bit, bit value 0 is up.
pub fn m(b: usize, s: usize, n: usize) -> f64 {
    if (b >> (n - 1 - s)) & 1 == 0 {
        0.5
    } else {
        -0.5
    }
}

pub fn flip(b: usize, s: usize, n: usize) -> usize {
    b ^ (1 << (n - 1 - s))
}

/// Dense Zeeman-basis generator evaluated directly from the master equation:
/// each jump operator X with diagonal rate operator Γ̂ contributes
/// Γ(b)|X_ab|² to entry (a, b).
pub fn brute_force_generator(p: &PhysicalParams, c: &Couplings, second_order: bool) -> DMatrix<f64> {
    let n_nuc = c.n_nuclei();
    let n = n_nuc + 1;
    let dim = 1 << n;
    let wi = p.omega_i();
    let w1 = p.omega1;
    let mut g = DMatrix::zeros(dim, dim);
    let mut add = |a: usize, b: usize, rate: f64| {
        g[(a, b)] += rate;
        g[(b, b)] -= rate;
    };
    let gs_plus = (1.0 - p.p0()) / 2.0 * p.r1s + w1 * w1 / (2.0 * wi * wi) * p.r2s;
    let gs_minus = (1.0 + p.p0()) / 2.0 * p.r1s + w1 * w1 / (2.0 * wi * wi) * p.r2s;
    for b in 0..dim {
        // S+ raises a down electron, S- lowers an up one.
        if m(b, 0, n) < 0.0 {
            add(flip(b, 0, n), b, gs_plus);
        } else {
            add(flip(b, 0, n), b, gs_minus);
        }
        for k in 0..n_nuc {
            let gi = p.r1i / 2.0 + c.bsq()[k] / (8.0 * wi * wi) * p.r2i;
            add(flip(b, k + 1, n), b, gi);
        }
        for k in 0..n_nuc {
            if m(b, 0, n) == m(b, k + 1, n) {
                continue;
            }
            let mut field = p.offset;
            for s in 0..n_nuc {
                if s != k {
                    field += c.a()[s] * m(b, s + 1, n);
                }
            }
            if second_order {
                field += (4.0 * w1 * w1 - c.bsq()[k]) / (8.0 * wi);
            }
            let dk = field / (p.r2s + p.r2i);
            let rate = w1 * w1 * c.bsq()[k] / (8.0 * wi * wi * (p.r2s + p.r2i)) / (1.0 + dk * dk);
            add(flip(flip(b, 0, n), k + 1, n), b, rate);
        }
        for pair in c.pairs() {
            let (k, j) = (pair.k, pair.j);
            if m(b, k + 1, n) == m(b, j + 1, n) {
                continue;
            }
            let mut det = (c.a()[k] - c.a()[j]) * m(b, 0, n);
            if second_order {
                det += (c.bsq()[k] - c.bsq()[j]) / (8.0 * wi);
            }
            let ckj = det / (2.0 * p.r2i);
            let rate = pair.d * pair.d / (4.0 * p.r2i) / (1.0 + ckj * ckj);
            add(flip(flip(b, k + 1, n), j + 1, n), b, rate);
        }
    }
    g
}

/// Off-diagonals must agree exactly; diagonals are sums in a different order.
pub fn generator_mismatch(g: &DMatrix<f64>, oracle: &DMatrix<f64>) -> Option<String> {
    for a in 0..g.nrows() {
        for b in 0..g.ncols() {
            if a == b {
                let scale = oracle[(b, b)].abs().max(f64::MIN_POSITIVE);
                if (g[(a, b)] - oracle[(a, b)]).abs() > 1e-12 * scale {
                    return Some(format!("diagonal {b}: {} vs {}", g[(a, b)], oracle[(a, b)]));
                }
            } else if g[(a, b)] != oracle[(a, b)] {
                return Some(format!("entry ({a}, {b}): {} vs {}", g[(a, b)], oracle[(a, b)]));
            }
        }
    }
    None
}

/// Deviation of the projected generator from the rate model, and ε.
///
/// Entries below 1e-4 of the largest rate are compared against that floor:
/// the projection also produces higher-order processes (double flips) that
/// the rate model leaves out entirely. Those can come out very slightly
/// negative, at order ε⁴ of the largest rate.
pub fn check_projection(p: &PhysicalParams, c: &Couplings) -> Result<(f64, f64), String> {
    let numeric = adiabatic_project(p, c).map_err(|e| e.to_string())?;
    let model = RateModel::new(p, c, RateOptions::default()).map_err(|e| e.to_string())?;
    let analytic = classical_generator(&model).map_err(|e| e.to_string())?;
    let eps = validate_adiabatic(p, c, DEFAULT_VALIDITY_THRESHOLD).epsilon;
    let scale = numeric.abs().max();
    for b in 0..numeric.ncols() {
        if numeric.column(b).sum().abs() > 1e-9 * scale {
            return Err(format!("column {b} does not sum to zero"));
        }
        for a in 0..numeric.nrows() {
            if a != b && (analytic[(a, b)] < 0.0 || numeric[(a, b)] < -eps.powi(2) * scale) {
                return Err(format!("negative rate ({a},{b}): {:e} / {:e}", numeric[(a, b)], analytic[(a, b)]));
            }
        }
    }
    let dev = compare_generators(&numeric, &analytic, 1e-4 * analytic.abs().max()).map_err(|e| e.to_string())?;
    Ok((dev, eps))
}

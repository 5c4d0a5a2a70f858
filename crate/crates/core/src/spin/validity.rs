use serde::{Deserialize, Serialize};

use super::couplings::Couplings;
use super::params::PhysicalParams;

/// Default required margin of the coherence-damping scale over the slow scale.
pub const DEFAULT_VALIDITY_THRESHOLD: f64 = 10.0;

/// Outcome of the adiabatic-elimination validity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    /// min{(2R2I)², (R2S + R2I)²}.
    pub lhs: f64,
    /// max{d_kj²/4, |ω1 B_k|²/(16 ωI²), R1S², R1I²}.
    pub rhs: f64,
    /// Name of the term that attains `rhs`.
    pub dominant: String,
    /// lhs / rhs (infinite when rhs is zero).
    pub ratio: f64,
    pub threshold: f64,
    pub pass: bool,
    /// max(couplings, drive, offset, rates) / ωI: the high-field expansion parameter.
    pub epsilon: f64,
}

pub fn validate_adiabatic(params: &PhysicalParams, c: &Couplings, threshold: f64) -> ValidityReport {
    let lhs = (2.0 * params.r2i).powi(2).min((params.r2s + params.r2i).powi(2));
    let wi2 = params.omega_i().powi(2);
    let mut terms = vec![
        ("R1S^2", params.r1s.powi(2)),
        ("R1I^2", params.r1i.powi(2)),
    ];
    let dip = c.pairs().iter().map(|p| p.d * p.d / 4.0).fold(0.0, f64::max);
    terms.push(("d_kj^2/4", dip));
    let drive = c
        .bsq()
        .iter()
        .map(|b2| params.omega1 * params.omega1 * b2 / (16.0 * wi2))
        .fold(0.0, f64::max);
    terms.push(("|w1 B_k|^2/(16 wI^2)", drive));
    let (dominant, rhs) = terms
        .into_iter()
        .fold(("none", 0.0), |acc, t| if t.1 > acc.1 { t } else { acc });
    let ratio = if rhs == 0.0 { f64::INFINITY } else { lhs / rhs };
    let scale = [
        c.max_abs(),
        params.omega1.abs(),
        params.offset.abs(),
        params.r1s,
        params.r2s,
        params.r1i,
        params.r2i,
    ]
    .into_iter()
    .fold(0.0, f64::max);
    ValidityReport {
        lhs,
        rhs,
        dominant: dominant.to_string(),
        ratio,
        threshold,
        pass: ratio >= threshold,
        epsilon: scale / params.omega_i(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::params::test_spec;
    use crate::spin::{DipolarPair, PhysicalParams};
    use std::f64::consts::PI;

    #[test]
    fn zero_couplings_pass() {
        let mut s = test_spec();
        s.r1s = 0.0;
        s.r1i = 0.0;
        let p = PhysicalParams::new(&s).unwrap();
        let c = Couplings::new(vec![0.0; 2], vec![0.0; 2], []).unwrap();
        let r = validate_adiabatic(&p, &c, DEFAULT_VALIDITY_THRESHOLD);
        assert_eq!(r.rhs, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn vanishing_nuclear_t2_fails() {
        let mut s = test_spec();
        s.r2i = 1e-9;
        let p = PhysicalParams::new(&s).unwrap();
        let c = Couplings::new(vec![0.0; 2], vec![0.0; 2], [DipolarPair { k: 0, j: 1, d: 100.0 }]).unwrap();
        let r = validate_adiabatic(&p, &c, DEFAULT_VALIDITY_THRESHOLD);
        assert!(!r.pass);
        assert_eq!(r.dominant, "d_kj^2/4");
    }

    #[test]
    fn forty_spin_chain_table() {
        // wI = 36 MHz, w1 = 100 kHz, |B1| = 40 kHz, <d> = 7.45 Hz,
        // T1e = 10 ms, T2e = 10 us, t1n = 1e5 s, t2n = 1.25 ms.
        let tp = 2.0 * PI;
        let mut s = test_spec();
        s.nuclear_larmor = Some(tp * 36e6);
        s.omega1 = tp * 100e3;
        s.r1s = 100.0;
        s.r2s = 1e5;
        s.r1i = 1e-5;
        s.r2i = 800.0;
        let p = PhysicalParams::new(&s).unwrap();
        let mut bsq = vec![0.0; 40];
        bsq[0] = (tp * 40e3).powi(2);
        let pairs = (0..39).map(|k| DipolarPair { k, j: k + 1, d: tp * 7.45 });
        let c = Couplings::new(vec![0.0; 40], bsq, pairs).unwrap();
        let r = validate_adiabatic(&p, &c, DEFAULT_VALIDITY_THRESHOLD);
        // Direct evaluation: lhs = 1600², rhs = (w1 B / 4 wI)².
        let lhs = 1600.0f64.powi(2);
        let rhs = (tp * 100e3 * tp * 40e3 / (4.0 * tp * 36e6)).powi(2);
        assert!((r.lhs - lhs).abs() < 1e-6 * lhs);
        assert!((r.rhs - rhs).abs() < 1e-9 * rhs);
        assert!((r.ratio - lhs / rhs).abs() < 1e-9 * r.ratio);
        assert!(r.ratio > 80.0 && r.ratio < 90.0);
        assert!(r.pass);
        assert!((r.epsilon - 100e3 / 36e6).abs() < 1e-12);
    }
}

use serde::{Deserialize, Serialize};

use super::geometry::{distance, Geometry};
use super::params::PhysicalParams;
use crate::error::{Error, Result};
use crate::units::{ANGSTROM, GAMMA_ELECTRON, HBAR, MU0_OVER_4PI};

/// One stored internuclear dipolar constant with `k < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipolarPair {
    pub k: usize,
    pub j: usize,
    /// d_kj in rad s⁻¹.
    pub d: f64,
}

/// Which internuclear pairs are kept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum DipolarCutoff {
    /// Keep every pair.
    None,
    /// Keep pairs closer than this many Å.
    Distance(f64),
    /// Keep pairs closer than this multiple of the lattice spacing; keeps every
    /// pair when the geometry has no nominal spacing.
    SpacingMultiple(f64),
    /// Keep pairs with |d_kj| at or above this value (rad s⁻¹).
    Floor(f64),
    /// Three lattice spacings.
    #[default]
    Default,
}

/// Hyperfine and dipolar constants for one electron and `n` nuclei.
///
/// Nucleus indices run over `0..n`; in spin configurations nucleus `k` is
/// spin `k + 1` because the electron occupies spin 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    /// Secular hyperfine A_k (rad s⁻¹, signed).
    a: Vec<f64>,
    /// Pseudosecular B_{k+}B_{k−} = |B_k|² (rad² s⁻²).
    bsq: Vec<f64>,
    /// Sorted by (k, j), k < j.
    pairs: Vec<DipolarPair>,
}

impl Couplings {
    pub fn new(a: Vec<f64>, bsq: Vec<f64>, pairs: impl IntoIterator<Item = DipolarPair>) -> Result<Self> {
        let n = a.len();
        if bsq.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} hyperfine constants but {} pseudosecular constants",
                n,
                bsq.len()
            )));
        }
        if a.iter().chain(&bsq).any(|v| !v.is_finite()) || bsq.iter().any(|&b| b < 0.0) {
            return Err(Error::Domain("couplings must be finite with |B|² >= 0".into()));
        }
        let mut stored: Vec<DipolarPair> = Vec::new();
        for p in pairs {
            let (k, j) = if p.k < p.j { (p.k, p.j) } else { (p.j, p.k) };
            if k == j || j >= n || !p.d.is_finite() {
                return Err(Error::Domain(format!("invalid dipolar pair ({}, {})", p.k, p.j)));
            }
            stored.push(DipolarPair { k, j, d: p.d });
        }
        stored.sort_by_key(|p| (p.k, p.j));
        if stored.windows(2).any(|w| (w[0].k, w[0].j) == (w[1].k, w[1].j)) {
            return Err(Error::Domain("duplicate dipolar pair".into()));
        }
        Ok(Self { a, bsq, pairs: stored })
    }

    pub fn n_nuclei(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn bsq(&self) -> &[f64] {
        &self.bsq
    }

    /// |B_k|.
    pub fn b_abs(&self, k: usize) -> f64 {
        self.bsq[k].sqrt()
    }

    pub fn pairs(&self) -> &[DipolarPair] {
        &self.pairs
    }

    /// d_kj, symmetric in its arguments; zero for pairs that are not stored.
    pub fn d(&self, k: usize, j: usize) -> f64 {
        let key = if k < j { (k, j) } else { (j, k) };
        self.pairs
            .binary_search_by_key(&key, |p| (p.k, p.j))
            .map_or(0.0, |i| self.pairs[i].d)
    }

    /// Multiplies every d_kj by `f(k, j)`.
    pub fn scale_dipolar(&mut self, f: impl Fn(usize, usize) -> f64) {
        for p in &mut self.pairs {
            p.d *= f(p.k, p.j);
        }
    }

    /// Multiplies |B_k| by `factor`.
    pub fn scale_pseudosecular(&mut self, k: usize, factor: f64) {
        self.bsq[k] *= factor * factor;
    }

    /// Largest |A_k|, |B_k| or |d_kj|.
    pub fn max_abs(&self) -> f64 {
        let a = self.a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let b = self.bsq.iter().fold(0.0f64, |m, v| m.max(v.sqrt()));
        let d = self.pairs.iter().fold(0.0f64, |m, p| m.max(p.d.abs()));
        a.max(b).max(d)
    }
}

/// Point-dipole hyperfine and dipolar constants with the field along z.
///
/// A_k = C_en(1 − 3cos²θ)/r³, |B_k| = C_en·3 sinθ cosθ/r³,
/// d_kj = C_nn(1 − 3cos²θ_kj)/r³ with C_en = (μ0/4π)γ_eγ_nħ and
/// C_nn = (μ0/4π)γ_n²ħ.
pub fn compute_couplings(geom: &Geometry, params: &PhysicalParams, cutoff: DipolarCutoff) -> Result<Couplings> {
    let c_en = MU0_OVER_4PI * GAMMA_ELECTRON.abs() * params.gamma_n.abs() * HBAR;
    let c_nn = MU0_OVER_4PI * params.gamma_n * params.gamma_n * HBAR;
    let e = geom.electron();
    let nuclei = geom.nuclei();
    let mut a = Vec::with_capacity(nuclei.len());
    let mut bsq = Vec::with_capacity(nuclei.len());
    for p in nuclei {
        let (r, cos) = polar(&e, p)?;
        let r3 = (r * ANGSTROM).powi(3);
        a.push(c_en * (1.0 - 3.0 * cos * cos) / r3);
        let sin = (1.0 - cos * cos).max(0.0).sqrt();
        let b = c_en * 3.0 * sin * cos / r3;
        bsq.push(b * b);
    }
    let max_dist = match cutoff {
        DipolarCutoff::Distance(r) => Some(r),
        DipolarCutoff::SpacingMultiple(m) => geom.spacing().map(|s| m * s),
        DipolarCutoff::Default => geom.spacing().map(|s| 3.0 * s),
        DipolarCutoff::None | DipolarCutoff::Floor(_) => None,
    };
    let floor = match cutoff {
        DipolarCutoff::Floor(f) => f,
        _ => 0.0,
    };
    let mut pairs = Vec::new();
    for k in 0..nuclei.len() {
        for j in (k + 1)..nuclei.len() {
            let r_ang = distance(&nuclei[k], &nuclei[j]);
            if max_dist.is_some_and(|m| r_ang > m * (1.0 + 1e-9)) {
                continue;
            }
            let (r, cos) = polar(&nuclei[k], &nuclei[j])?;
            let d = c_nn * (1.0 - 3.0 * cos * cos) / (r * ANGSTROM).powi(3);
            if d.abs() >= floor && d != 0.0 {
                pairs.push(DipolarPair { k, j, d });
            }
        }
    }
    Couplings::new(a, bsq, pairs)
}

/// Distance (Å) and cosine of the polar angle of `to - from`.
fn polar(from: &[f64; 3], to: &[f64; 3]) -> Result<(f64, f64)> {
    let v = [to[0] - from[0], to[1] - from[1], to[2] - from[2]];
    let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if r == 0.0 {
        return Err(Error::Geometry("coincident sites".into()));
    }
    Ok((r, v[2] / r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::params::{test_spec, Nucleus};
    use crate::spin::{generate_lattice, LatticeSpec};
    use proptest::prelude::*;

    fn carbon() -> PhysicalParams {
        let mut s = test_spec();
        s.nucleus = Nucleus::Carbon13;
        PhysicalParams::new(&s).unwrap()
    }

    #[test]
    fn magic_angle_zeroes_secular() {
        let c = (1.0f64 / 3.0).sqrt();
        let s = (1.0 - c * c).sqrt();
        let g = Geometry::new(vec![[0.0; 3], [5.0 * s, 0.0, 5.0 * c]]).unwrap();
        let cp = compute_couplings(&g, &carbon(), DipolarCutoff::None).unwrap();
        assert!(cp.a()[0].abs() < 1e-9 * cp.b_abs(0));
    }

    #[test]
    fn pseudosecular_vanishes_on_axis_and_in_plane() {
        let g = Geometry::new(vec![[0.0; 3], [0.0, 0.0, 4.0], [4.0, 0.0, 0.0]]).unwrap();
        let cp = compute_couplings(&g, &carbon(), DipolarCutoff::None).unwrap();
        assert_eq!(cp.bsq()[0], 0.0);
        assert!(cp.bsq()[1] < 1e-20);
    }

    #[test]
    fn carbon_pair_at_45_degrees() {
        // Direct formula with CODATA constants.
        let c_nn = 1.000_000_000_55e-7 * 6.728_284e7f64.powi(2) * 1.054_571_817e-34;
        let cos2: f64 = 0.5;
        let oracle = c_nn * (1.0 - 3.0 * cos2) / (5e-10f64).powi(3);
        let h = 5.0 / 2f64.sqrt();
        let g = Geometry::new(vec![[-20.0, 0.0, 0.0], [0.0; 3], [h, 0.0, h]]).unwrap();
        let cp = compute_couplings(&g, &carbon(), DipolarCutoff::None).unwrap();
        assert!(((cp.d(0, 1) - oracle) / oracle).abs() < 1e-12);
        assert_eq!(cp.d(0, 1), cp.d(1, 0));
    }

    #[test]
    fn proton_table_magnitudes() {
        // First nucleus of the four-proton system: |B| ≈ 0.935 MHz, |A| ≈ 0.318 MHz.
        let g = Geometry::new(vec![[-0.03, -0.01, -0.01], [3.51, 0.02, 3.56]]).unwrap();
        let p = PhysicalParams::new(&test_spec()).unwrap();
        let cp = compute_couplings(&g, &p, DipolarCutoff::None).unwrap();
        let two_pi = 2.0 * std::f64::consts::PI;
        assert!((cp.b_abs(0) / two_pi / 1e6 - 0.935).abs() < 0.01);
        assert!((cp.a()[0].abs() / two_pi / 1e6 - 0.318).abs() < 0.01);
    }

    #[test]
    fn cutoff_limits_pairs() {
        let g = generate_lattice(&LatticeSpec::Chain {
            sites: 11,
            spacing: 5.0,
            jitter: 0.0,
            angle: 0.7,
            seed: 0,
        })
        .unwrap();
        let p = carbon();
        let all = compute_couplings(&g, &p, DipolarCutoff::None).unwrap();
        assert_eq!(all.pairs().len(), 45);
        let cut = compute_couplings(&g, &p, DipolarCutoff::Default).unwrap();
        // Neighbours at 1, 2 and 3 spacings.
        assert_eq!(cut.pairs().len(), 9 + 8 + 7);
        let nn = cut.d(0, 1).powi(2);
        let dropped_max = all.d(0, 4).powi(2);
        assert!(dropped_max < 0.01 * nn);
    }

    #[test]
    fn explicit_couplings_validation() {
        assert!(Couplings::new(vec![0.0], vec![], []).is_err());
        assert!(Couplings::new(vec![0.0], vec![-1.0], []).is_err());
        assert!(Couplings::new(vec![0.0; 2], vec![0.0; 2], [DipolarPair { k: 0, j: 2, d: 1.0 }]).is_err());
        let c = Couplings::new(vec![0.0; 3], vec![0.0; 3], [DipolarPair { k: 2, j: 0, d: 1.5 }]).unwrap();
        assert_eq!(c.d(0, 2), 1.5);
        assert_eq!(c.d(2, 0), 1.5);
        assert_eq!(c.d(1, 2), 0.0);
    }

    fn arb_geometry() -> impl Strategy<Value = Vec<[f64; 3]>> {
        prop::collection::vec(
            (2.0f64..8.0, 0.05f64..3.09, 0.0f64..6.28).prop_map(|(r, th, ph)| {
                [r * th.sin() * ph.cos(), r * th.sin() * ph.sin(), r * th.cos()]
            }),
            1..6,
        )
        .prop_map(|mut v| {
            // Offset nuclei along a helix so sites stay well separated.
            for (i, p) in v.iter_mut().enumerate() {
                p[0] += 9.0 * i as f64;
            }
            let mut all = vec![[0.3, -0.2, 0.1]];
            all.extend(v);
            all
        })
    }

    proptest! {
        #[test]
        fn rotation_about_field_axis_invariant(pos in arb_geometry(), phi in 0.0f64..6.28) {
            let p = carbon();
            let g = Geometry::new(pos.clone()).unwrap();
            let (s, c) = phi.sin_cos();
            let rot: Vec<[f64; 3]> = pos.iter().map(|q| [c * q[0] - s * q[1], s * q[0] + c * q[1], q[2]]).collect();
            let gr = Geometry::new(rot).unwrap();
            let a = compute_couplings(&g, &p, DipolarCutoff::None).unwrap();
            let b = compute_couplings(&gr, &p, DipolarCutoff::None).unwrap();
            let scale = a.max_abs();
            for k in 0..a.n_nuclei() {
                prop_assert!((a.a()[k] - b.a()[k]).abs() <= 1e-12 * scale);
                prop_assert!((a.b_abs(k) - b.b_abs(k)).abs() <= 1e-12 * scale);
            }
            for (x, y) in a.pairs().iter().zip(b.pairs()) {
                prop_assert!((x.d - y.d).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn dilation_scales_as_inverse_cube(pos in arb_geometry(), s in 0.5f64..3.0) {
            let p = carbon();
            let g = Geometry::new(pos.clone()).unwrap();
            let gs = Geometry::new(pos.iter().map(|q| q.map(|x| x * s)).collect()).unwrap();
            let a = compute_couplings(&g, &p, DipolarCutoff::None).unwrap();
            let b = compute_couplings(&gs, &p, DipolarCutoff::None).unwrap();
            let f = s.powi(-3);
            // Near the magic angle the angular factor cancels, so errors are
            // bounded by the coupling scale rather than by each value.
            let tol = 1e-12 * f * a.max_abs();
            for k in 0..a.n_nuclei() {
                prop_assert!((b.a()[k] - f * a.a()[k]).abs() <= tol);
                prop_assert!((b.b_abs(k) - f * a.b_abs(k)).abs() <= tol);
            }
            for (x, y) in a.pairs().iter().zip(b.pairs()) {
                prop_assert!((y.d - f * x.d).abs() <= tol);
                prop_assert_eq!(a.d(x.k, x.j), a.d(x.j, x.k));
            }
        }
    }
}

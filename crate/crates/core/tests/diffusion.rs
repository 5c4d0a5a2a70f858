mod common;

use common::{params, TWO_PI};
use dnp_core::diffusion::*;
use dnp_core::kmc::TimeGrid;
use dnp_core::spin::{compute_couplings, generate_lattice, Couplings, DipolarCutoff, DipolarPair, LatticeSpec, Nucleus};
use dnp_core::Error;
use proptest::prelude::*;
use statrs::function::erf::erfc;

fn chain(a: Vec<f64>, d: &[f64]) -> Couplings {
    let n = a.len();
    let pairs = d.iter().enumerate().map(|(k, &d)| DipolarPair { k, j: k + 1, d });
    Couplings::new(a, vec![0.0; n], pairs).unwrap()
}

#[test]
fn uniform_chain_without_hyperfine() {
    let (d, a, r2i) = (150.0, 5.0, 1e4);
    let c = chain(vec![0.0; 6], &[d; 5]);
    let got = average_diffusion_constant(&c, &[a; 5], r2i).unwrap();
    let want = d * d * a * a / (4.0 * r2i);
    assert!((got - want).abs() <= 1e-14 * want);
}

#[test]
fn two_nuclei_give_the_single_link() {
    let (d, a, r2i, da) = (90.0, 4.5, 800.0, 2e3);
    let c = chain(vec![da, 0.0], &[d]);
    let got = average_diffusion_constant(&c, &[a], r2i).unwrap();
    let want = 4.0 * r2i * d * d * a * a / (16.0 * r2i * r2i + da * da);
    assert!((got - want).abs() <= 1e-14 * want);
}

#[test]
fn diffusion_constant_errors() {
    let c = chain(vec![0.0; 3], &[1.0; 2]);
    assert!(matches!(average_diffusion_constant(&c, &[1.0; 2], 0.0), Err(Error::Domain(_))));
    assert!(matches!(average_diffusion_constant(&c, &[1.0; 3], 1.0), Err(Error::DimensionMismatch(_))));
    let single = chain(vec![0.0], &[]);
    assert!(average_diffusion_constant(&single, &[], 1.0).is_err());
}

/// 30-site ¹³C chain at 45° with 5% jitter; every link evaluated by hand
/// from the positions.
#[test]
fn carbon_chain_against_direct_evaluation() {
    let p = params(|s| {
        s.nucleus = Nucleus::Carbon13;
        s.r2i = 1e4;
    });
    let spec = LatticeSpec::Chain { sites: 31, spacing: 5.0, jitter: 0.05, angle: TWO_PI / 8.0, seed: 11 };
    let g = generate_lattice(&spec).unwrap();
    let c = compute_couplings(&g, &p, DipolarCutoff::None).unwrap();
    let spacings = chain_spacings(&g);
    assert_eq!(spacings.len(), 29);

    let hbar = 1.054_571_817e-34;
    let c_nn = 1e-7 * p.gamma_n * p.gamma_n * hbar;
    let n = g.nuclei();
    let mut sum = 0.0;
    for k in 0..29 {
        let v: Vec<f64> = (0..3).map(|i| n[k + 1][i] - n[k][i]).collect();
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let cos = v[2] / r;
        let d = c_nn * (1.0 - 3.0 * cos * cos) / (r * 1e-10).powi(3);
        let da = c.a()[k] - c.a()[k + 1];
        sum += 4e4 * d * d * r * r / (16e8 + da * da);
    }
    let want = sum / 29.0;
    let got = average_diffusion_constant(&c, &spacings, 1e4).unwrap();
    assert!((got - want).abs() <= 1e-6 * want, "{got} vs {want}");
    // Nearest-neighbour value without hyperfine quenching is about 23 Å²/s;
    // the links next to the electron are quenched.
    assert!(got > 1.0 && got < 30.0, "{got}");
}

proptest! {
    #[test]
    fn link_constant_is_bounded(
        d in -500.0f64..500.0,
        a in 1.0f64..10.0,
        r2i in 1.0f64..1e5,
        a1 in -1e6f64..1e6,
        a2 in -1e6f64..1e6,
    ) {
        let c = chain(vec![a1, a2], &[d]);
        let dk = diffusion_constants(&c, &[a], r2i).unwrap()[0];
        let bound = d * d * a * a / (4.0 * r2i);
        prop_assert!(dk <= bound * (1.0 + 1e-12));
        let same = diffusion_constants(&chain(vec![a1, a1], &[d]), &[a], r2i).unwrap()[0];
        prop_assert!((same - bound).abs() <= 1e-12 * bound);
        if a1 != a2 && d != 0.0 {
            prop_assert!(dk < bound);
        }
    }
}

#[test]
fn semi_infinite_limit_is_erfc() {
    let d = 10.0;
    let spec = DiffusionSpec::new(1000.0, 2000, Boundary::Absorbing, 0.8);
    let grid = TimeGrid::new(vec![0.0, 1.0, 5.0, 20.0, 50.0, 100.0]).unwrap();
    let f = solve_diffusion(d, &spec, &grid).unwrap();
    for (row, &t) in f.p.iter().zip(&f.t).skip(1) {
        for (&x, &p) in f.x.iter().zip(row) {
            let want = 0.8 * erfc(x / (2.0 * (d * t).sqrt()));
            assert!((p - want).abs() < 1e-3, "x={x} t={t}: {p} vs {want}");
        }
    }
}

#[test]
fn erfc_contours_spread_as_sqrt_t() {
    let spec = DiffusionSpec::new(1000.0, 2000, Boundary::Absorbing, 1.0);
    let grid = TimeGrid::log_spaced(1.0, 200.0, 20).unwrap();
    let f = solve_diffusion(10.0, &spec, &grid).unwrap();
    let contours = contour_times(&f, &[0.2, 0.5]).unwrap();
    for c in &contours {
        let pts: Vec<(f64, f64)> = c.points.iter().filter(|(t, _)| *t >= 5.0).map(|&(t, x)| (t.ln(), x.ln())).collect();
        let n = pts.len() as f64;
        let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
        let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
        let slope = sxy / sxx;
        assert!((slope - 0.5).abs() <= 0.02, "level {}: slope {slope}", c.level);
    }
}

#[test]
fn reflective_chain_fills_up() {
    let spec = DiffusionSpec::new(150.0, 60, Boundary::Reflective, 0.3);
    let grid = TimeGrid::log_spaced(1.0, 1e5, 30).unwrap();
    let f = solve_diffusion(20.0, &spec, &grid).unwrap();
    assert!(f.p.last().unwrap().iter().all(|&p| (p - 0.3).abs() < 1e-6));
    let contours = contour_times(&f, &[0.05, 0.15, 0.25]).unwrap();
    for c in &contours {
        assert!(c.points.windows(2).all(|w| w[1].1 >= w[0].1), "level {}", c.level);
        assert_eq!(c.points.last().unwrap().1, 150.0);
    }
}

#[test]
fn zero_diffusion_keeps_initial_state() {
    let spec = DiffusionSpec::new(10.0, 10, Boundary::Reflective, 1.0);
    let grid = TimeGrid::linear(100.0, 5).unwrap();
    let f = solve_diffusion(0.0, &spec, &grid).unwrap();
    for row in &f.p {
        assert_eq!(row[0], 1.0);
        assert!(row[1..].iter().all(|&p| p == 0.0));
    }
    assert!(matches!(solve_diffusion(-1.0, &spec, &grid), Err(Error::Domain(_))));
}

#[test]
fn closed_domain_conserves_polarization() {
    let mut spec = DiffusionSpec::new(50.0, 100, Boundary::Reflective, 0.0);
    spec.source = None;
    let initial: Vec<f64> = (0..=100).map(|i| if (20..40).contains(&i) { 1.0 } else { 0.0 }).collect();
    let grid = TimeGrid::linear(100.0, 11).unwrap();
    let f = solve_diffusion_from(3.0, &spec, &initial, &grid).unwrap();
    let m = f.integral();
    for w in m.windows(2) {
        // Per unit time over 10 s steps.
        assert!((w[1] - w[0]).abs() / m[0] / 10.0 <= 1e-6);
    }
    assert!(f.p.iter().flatten().all(|&p| (0.0..=1.0).contains(&p)));
}

#[test]
fn contour_edge_cases() {
    let f = DiffusionField::from_samples(vec![0.0, 1.0, 2.0], vec![0.0, 1.0], vec![vec![1.0; 3], vec![1.0, 0.4, 0.0]], 1.0)
        .unwrap();
    let c = contour_times(&f, &[0.5]).unwrap();
    assert_eq!(c[0].points[0], (0.0, 2.0));
    let (t, x) = c[0].points[1];
    assert_eq!(t, 1.0);
    assert!((x - 1.0 / 1.2).abs() < 1e-12);
    let empty = DiffusionField::from_samples(vec![0.0, 1.0], vec![0.0], vec![vec![0.1, 0.0]], 1.0).unwrap();
    assert!(contour_times(&empty, &[0.5]).unwrap()[0].points.is_empty());
    assert!(contour_times(&f, &[1.0]).is_err());
    assert_eq!(first_crossing(&[0.0, 1.0, 2.0], &[0.0, 0.2, 0.6], 0.4), Some(1.5));
    assert_eq!(first_crossing(&[0.0, 1.0], &[0.0, 0.2], 0.4), None);
}

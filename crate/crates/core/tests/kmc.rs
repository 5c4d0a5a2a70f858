mod common;

use common::{brute_force_generator, generator_mismatch, params, TWO_PI};
use dnp_core::kmc::*;
use dnp_core::spin::{Couplings, DipolarPair, PhysicalParams};
use dnp_core::Error;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn two_nuclei() -> Couplings {
    Couplings::new(
        vec![TWO_PI * 3e4, TWO_PI * -5e4],
        vec![(TWO_PI * 4e5).powi(2), (TWO_PI * 1e5).powi(2)],
        [DipolarPair { k: 0, j: 1, d: TWO_PI * 300.0 }],
    )
    .unwrap()
}

fn assert_generators_match(g: &DMatrix<f64>, oracle: &DMatrix<f64>) {
    if let Some(msg) = generator_mismatch(g, oracle) {
        panic!("{msg}");
    }
}

#[test]
fn generator_matches_brute_force_one_nucleus() {
    let p = params(|_| {});
    let c = Couplings::new(vec![TWO_PI * 2e5], vec![(TWO_PI * 6e5).powi(2)], []).unwrap();
    let model = RateModel::new(&p, &c, RateOptions::default()).unwrap();
    assert_generators_match(&classical_generator(&model).unwrap(), &brute_force_generator(&p, &c, false));
}

#[test]
fn generator_matches_brute_force_two_nuclei() {
    let p = params(|s| s.offset = TWO_PI * 1e4);
    let c = two_nuclei();
    for second_order in [false, true] {
        let model = RateModel::new(&p, &c, RateOptions { second_order }).unwrap();
        let g = classical_generator(&model).unwrap();
        assert_generators_match(&g, &brute_force_generator(&p, &c, second_order));
    }
}

#[test]
fn determinism_with_fixed_seed() {
    let p = params(|_| {});
    let c = Couplings::new(vec![TWO_PI * 2e5], vec![(TWO_PI * 6e5).powi(2)], []).unwrap();
    let model = RateModel::new(&p, &c, RateOptions::default()).unwrap();
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut engine = KmcEngine::new(&model, model.configuration(vec![false, true]));
        (0..2000).map(|_| engine.step(&mut rng).unwrap()).collect::<Vec<_>>()
    };
    let a = run();
    assert_eq!(a, run());
    assert!(a.iter().all(|e| e.1 > 0.0));
}

fn trivial_model() -> RateModel {
    let p = params(|_| {});
    let c = Couplings::new(vec![0.0], vec![0.0], []).unwrap();
    RateModel::new(&p, &c, RateOptions::default()).unwrap()
}

#[test]
fn equal_rates_are_selected_evenly() {
    let model = trivial_model();
    let table = EventTable {
        events: vec![(Event::ElectronFlip, 2.0), (Event::NuclearFlip(0), 2.0)],
        total_rate: 4.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 100_000;
    let mut hits = 0;
    for _ in 0..n {
        let mut conf = model.configuration(vec![true, true]);
        if kmc_step(&mut conf, &table, &model, &mut rng).unwrap().0 == Event::ElectronFlip {
            hits += 1;
            assert!(!conf.electron_up());
        }
    }
    let frac = hits as f64 / n as f64;
    let sigma = (0.25 / n as f64).sqrt();
    assert!((frac - 0.5).abs() <= 3.0 * sigma, "{frac}");
}

#[test]
fn waiting_time_has_mean_inverse_rate() {
    let model = trivial_model();
    let r = 7.5;
    let table = EventTable { events: vec![(Event::NuclearFlip(0), r)], total_rate: r };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 100_000;
    let mut conf = model.configuration(vec![true, true]);
    let mean = (0..n).map(|_| kmc_step(&mut conf, &table, &model, &mut rng).unwrap().1).sum::<f64>() / n as f64;
    // Exponential: standard deviation equals the mean.
    let sigma = 1.0 / r / (n as f64).sqrt();
    assert!((mean - 1.0 / r).abs() <= 3.0 * sigma, "{mean}");
}

#[test]
fn empty_table_stalls() {
    let model = trivial_model();
    let mut conf = model.configuration(vec![true, true]);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let r = kmc_step(&mut conf, &EventTable::default(), &model, &mut rng);
    assert!(matches!(r, Err(Error::Stall)));
}

#[test]
fn empty_grid_is_rejected() {
    assert!(matches!(TimeGrid::new(vec![]), Err(Error::Spec(_))));
    assert!(TimeGrid::new(vec![0.0, 1.0, 1.0]).is_err());
    assert!(TimeGrid::new(vec![0.5, 1.0]).is_err());
}

#[test]
fn zero_span_returns_initial_state() {
    let model = trivial_model();
    let grid = TimeGrid::new(vec![0.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let t = run_trajectory(&model, &grid, model.configuration(vec![false, true]), &mut rng).unwrap();
    assert_eq!(t.samples, vec![vec![false, true]]);
    assert_eq!(t.events, 0);
}

#[test]
fn fully_polarized_electron_is_absorbed_in_its_thermal_state() {
    // With P0 = 1 the electron relaxes only towards its thermal state
    // (m = -1/2 in this convention) and never leaves it.
    let p = params(|s| {
        s.omega1 = 0.0;
        s.r1i = 0.0;
    })
    .with_p0(1.0)
    .unwrap();
    let c = Couplings::new(vec![0.0], vec![0.0], []).unwrap();
    let model = RateModel::new(&p, &c, RateOptions::default()).unwrap();
    let grid = TimeGrid::linear(50.0, 11).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let t = run_trajectory(&model, &grid, model.configuration(vec![true, true]), &mut rng).unwrap();
    assert!(t.samples[0][0]);
    assert!(t.samples[1..].iter().all(|s| !s[0]));
    assert_eq!(t.events, 1);
}

#[test]
fn electron_telegraph_relaxation() {
    let p = params(|s| {
        s.r1s = 2.0;
        s.r1i = 0.0;
        s.temperature = 5.0;
    });
    let c = Couplings::new(vec![0.0], vec![0.0], []).unwrap();
    let model = RateModel::new(&p, &c, RateOptions::default()).unwrap();
    let r = single_spin_rates(&p, &c).unwrap();
    let (gp, gm) = (r.electron_up, r.electron_down);
    let grid = TimeGrid::linear(2.0, 9).unwrap();
    let init = InitialState::Uniform { electron: 1.0, nuclei: 0.0 };
    let s = average_trajectories(&model, p.p0(), &grid, 10_000, 11, 1, &init).unwrap();
    let p_inf = (gp - gm) / (gp + gm);
    for (i, &t) in grid.times().iter().enumerate() {
        let exact = p_inf + (1.0 - p_inf) * (-(gp + gm) * t).exp();
        let se = s.stderr[i][0].max(1e-12);
        assert!((s.mean[i][0] - exact).abs() <= 3.0 * se, "t={t}: {} vs {exact}", s.mean[i][0]);
    }
}

#[test]
fn uncoupled_nuclei_relax_at_r1i() {
    let p = params(|s| {
        s.omega1 = 0.0;
        s.r1i = 0.5;
    });
    let c = Couplings::new(vec![0.0; 3], vec![0.0; 3], []).unwrap();
    let model = RateModel::new(&p, &c, RateOptions::default()).unwrap();
    let grid = TimeGrid::linear(4.0, 9).unwrap();
    let init = InitialState::Uniform { electron: 0.0, nuclei: 1.0 };
    let s = average_trajectories(&model, p.p0(), &grid, 10_000, 4, 2, &init).unwrap();
    // The three nuclei are independent and identically distributed.
    let (mean, se) = s.average(1..4);
    for (i, &t) in grid.times().iter().enumerate() {
        let exact = (-0.5 * t).exp();
        assert!((mean[i] - exact).abs() <= 3.0 * se[i].max(1e-12), "t={t}: {} vs {exact}", mean[i]);
    }
}

#[test]
fn ensemble_is_independent_of_worker_count() {
    let p = params(|_| {});
    let model = RateModel::new(&p, &two_nuclei(), RateOptions::default()).unwrap();
    let grid = TimeGrid::log_spaced(0.01, 5.0, 6).unwrap();
    let one = average_trajectories(&model, p.p0(), &grid, 300, 7, 1, &InitialState::Thermal).unwrap();
    let three = average_trajectories(&model, p.p0(), &grid, 300, 7, 3, &InitialState::Thermal).unwrap();
    assert_eq!(one, three);
    let other = average_trajectories(&model, p.p0(), &grid, 300, 8, 1, &InitialState::Thermal).unwrap();
    assert_ne!(one, other);
}

#[test]
fn single_trajectory_has_undefined_stderr() {
    let model = trivial_model();
    let grid = TimeGrid::linear(1.0, 3).unwrap();
    let s = average_trajectories(&model, 0.5, &grid, 1, 0, 1, &InitialState::Thermal).unwrap();
    assert!(s.stderr.iter().flatten().all(|e| e.is_nan()));
    assert!(s.mean.iter().flatten().all(|p| p.abs() == 1.0));
    assert!(average_trajectories(&model, 0.5, &grid, 0, 0, 1, &InitialState::Thermal).is_err());
}

#[test]
fn series_csv_round_trip() {
    let p = params(|_| {});
    let model = RateModel::new(&p, &two_nuclei(), RateOptions::default()).unwrap();
    let grid = TimeGrid::log_spaced(1e-3, 1.0, 5).unwrap();
    let s = average_trajectories(&model, p.p0(), &grid, 50, 2, 1, &InitialState::Thermal).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("series.csv");
    s.save(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("time,p_spin0,p_spin1,p_spin2,se_spin0,se_spin1,se_spin2\n"));
    let back = PolarizationSeries::load(&path).unwrap();
    assert_eq!(back.times, s.times);
    assert_eq!(back.mean, s.mean);
    assert_eq!(back.stderr, s.stderr);
}

/// Occupation probabilities of all configurations from kMC agree with
/// exp(G t) p(0) within 3σ multinomial error.
#[test]
fn configuration_distribution_matches_master_equation() {
    let p = params(|s| {
        s.r1s = 3.0;
        s.r1i = 0.2;
        s.omega1 = TWO_PI * 2e5;
    });
    let c = Couplings::new(
        vec![TWO_PI * 1e4, TWO_PI * -2e4],
        vec![(TWO_PI * 3e6).powi(2), (TWO_PI * 1.5e6).powi(2)],
        [DipolarPair { k: 0, j: 1, d: TWO_PI * 100.0 }],
    )
    .unwrap();
    let model = RateModel::new(&p, &c, RateOptions::default()).unwrap();
    let g = classical_generator(&model).unwrap();
    let grid = TimeGrid::new(vec![0.0, 0.1, 0.4, 1.5]).unwrap();
    let start = vec![true, true, false];
    let dim = 8;
    let n = 100_000;
    let mut counts = vec![vec![0usize; dim]; grid.len()];
    for i in 0..n {
        let mut rng = trajectory_rng(99, i);
        let t = run_trajectory(&model, &grid, model.configuration(start.clone()), &mut rng).unwrap();
        for (ti, spins) in t.samples.iter().enumerate() {
            counts[ti][model.configuration(spins.clone()).basis_index()] += 1;
        }
    }
    let mut p0 = DVector::zeros(dim);
    p0[model.configuration(start).basis_index()] = 1.0;
    for (ti, &t) in grid.times().iter().enumerate().skip(1) {
        let exact = (&g * t).exp() * &p0;
        assert!((exact.sum() - 1.0).abs() < 1e-10);
        for b in 0..dim {
            let q = exact[b].max(0.0);
            let emp = counts[ti][b] as f64 / n as f64;
            let sigma = (q * (1.0 - q) / n as f64).sqrt().max(1.0 / n as f64);
            assert!((emp - q).abs() <= 3.0 * sigma, "t={t} state {b}: {emp} vs {q}");
        }
    }
}

fn random_system(a: &[f64]) -> (PhysicalParams, Couplings) {
    let p = params(|s| s.offset = TWO_PI * 2e4);
    let n = a.len();
    let bsq = (0..n).map(|k| (TWO_PI * 1e5 * (k + 1) as f64).powi(2)).collect();
    let pairs = (0..n.saturating_sub(1)).map(|k| DipolarPair { k, j: k + 1, d: TWO_PI * 50.0 });
    (p, Couplings::new(a.to_vec(), bsq, pairs).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn is_rate_invariant_under_flip_flop(
        a in prop::collection::vec(-1e6f64..1e6, 2..10),
        bits in prop::collection::vec(any::<bool>(), 11),
        k in 0usize..10,
    ) {
        let (p, c) = random_system(&a);
        let n = a.len();
        let k = k % n;
        let conf = Configuration::from_spins(bits[..n + 1].to_vec(), &c);
        let o = RateOptions::default();
        let before = is_flipflop_rate(k, &conf, &p, &c, o);
        let mut spins = conf.spins().to_vec();
        spins[0] = !spins[0];
        spins[k + 1] = !spins[k + 1];
        let after = Configuration::from_spins(spins.clone(), &c);
        prop_assert_eq!(before, is_flipflop_rate(k, &after, &p, &c, o));
        // Flipping only spin k or only the electron also leaves D_k unchanged.
        spins[0] = !spins[0];
        prop_assert_eq!(before, is_flipflop_rate(k, &Configuration::from_spins(spins.clone(), &c), &p, &c, o));
        spins[0] = !spins[0];
        spins[k + 1] = !spins[k + 1];
        prop_assert_eq!(before, is_flipflop_rate(k, &Configuration::from_spins(spins, &c), &p, &c, o));
    }

    #[test]
    fn ii_rate_is_configuration_independent(
        a in prop::collection::vec(-1e6f64..1e6, 2..10),
        bits in prop::collection::vec(any::<bool>(), 11),
        other in prop::collection::vec(any::<bool>(), 11),
    ) {
        let (p, c) = random_system(&a);
        let n = a.len();
        let o = RateOptions::default();
        let conf = Configuration::from_spins(bits[..n + 1].to_vec(), &c);
        let mut flipped = conf.clone();
        flipped.flip_electron();
        let third = Configuration::from_spins(other[..n + 1].to_vec(), &c);
        for k in 0..n - 1 {
            let r = ii_flipflop_rate(k, k + 1, &conf, &p, &c, o).unwrap();
            prop_assert_eq!(r, ii_flipflop_rate(k, k + 1, &flipped, &p, &c, o).unwrap());
            prop_assert_eq!(r, ii_flipflop_rate(k, k + 1, &third, &p, &c, o).unwrap());
            prop_assert!(r >= 0.0);
        }
    }

    #[test]
    fn is_rate_decreases_with_constraint_field(
        a in prop::collection::vec(-1e6f64..1e6, 2..10),
        bits in prop::collection::vec(any::<bool>(), 11),
        k in 0usize..10,
        shift in 1.0f64..1e6,
    ) {
        let (p, c) = random_system(&a);
        let n = a.len();
        let k = k % n;
        let conf = Configuration::from_spins(bits[..n + 1].to_vec(), &c);
        let field = p.offset + conf.hyperfine_sum() - a[k] * conf.nucleus_m(k);
        let r0 = is_flipflop_rate(k, &conf, &p, &c, RateOptions::default());
        // Move the offset so that |field| grows by `shift`.
        let dir = if field >= 0.0 { 1.0 } else { -1.0 };
        let p2 = params(|s| s.offset = p.offset + dir * shift);
        let r1 = is_flipflop_rate(k, &conf, &p2, &c, RateOptions::default());
        prop_assert!(r1 < r0, "{r1} !< {r0}");
    }

    #[test]
    fn events_change_magnetization_by_unit_or_zero(
        a in prop::collection::vec(-1e6f64..1e6, 2..8),
        bits in prop::collection::vec(any::<bool>(), 9),
    ) {
        let (p, c) = random_system(&a);
        let n = a.len();
        let model = RateModel::new(&p, &c, RateOptions::default()).unwrap();
        let conf = model.configuration(bits[..n + 1].to_vec());
        let table = enumerate_events(&conf, &model);
        let sum: f64 = table.events.iter().map(|e| e.1).sum();
        prop_assert!((table.total_rate - sum).abs() <= 1e-9 * sum);
        for (event, rate) in table.events {
            prop_assert!(rate > 0.0);
            let mut next = conf.clone();
            model.apply(event, &mut next);
            let dm = next.magnetization() - conf.magnetization();
            prop_assert_eq!(dm, event.magnetization_change(&conf));
            match event {
                Event::ElectronFlip | Event::NuclearFlip(_) => prop_assert_eq!(dm.abs(), 1.0),
                _ => prop_assert_eq!(dm, 0.0),
            }
        }
    }
}

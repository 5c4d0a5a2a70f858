use nalgebra::DMatrix;

use super::config::Configuration;
use super::rates::{constraint_field, pair_rate, single_spin_rates, RateOptions};
use crate::error::{Error, Result};
use crate::spin::{Couplings, PhysicalParams};

/// A classical jump between Zeeman configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Event {
    /// Electron flips away from its current state.
    ElectronFlip,
    /// Nucleus `k` flips away from its current state.
    NuclearFlip(usize),
    /// Electron–nucleus flip-flop (jump operator Ŷ_k).
    ElectronNuclearFlipFlop(usize),
    /// Nucleus–nucleus flip-flop (jump operator X̂_kj) on stored pair `pair`.
    NuclearFlipFlop { pair: usize, k: usize, j: usize },
}

impl Event {
    /// Change of total magnetization Σm caused by the event from `conf`.
    pub fn magnetization_change(&self, conf: &Configuration) -> f64 {
        let dm = |up: bool| if up { -1.0 } else { 1.0 };
        match *self {
            Event::ElectronFlip => dm(conf.electron_up()),
            Event::NuclearFlip(k) => dm(conf.nucleus_up(k)),
            Event::ElectronNuclearFlipFlop(k) => dm(conf.electron_up()) + dm(conf.nucleus_up(k)),
            Event::NuclearFlipFlop { k, j, .. } => dm(conf.nucleus_up(k)) + dm(conf.nucleus_up(j)),
        }
    }
}

/// All rate constants of one system, precomputed once and shared read-only
/// between trajectories.
#[derive(Debug, Clone)]
pub struct RateModel {
    pub(crate) n_nuclei: usize,
    pub(crate) electron_up: f64,
    pub(crate) electron_down: f64,
    pub(crate) nuclear: Vec<f64>,
    /// Unconstrained electron–nucleus flip-flop rate per nucleus.
    pub(crate) is_prefactor: Vec<f64>,
    pub(crate) offset: f64,
    /// Second-order shift of the constraint field per nucleus (0 when off).
    pub(crate) is_correction: Vec<f64>,
    /// R2S + R2I.
    pub(crate) is_width: f64,
    pub(crate) a: Vec<f64>,
    pub(crate) pairs: Vec<(usize, usize)>,
    /// Pair flip-flop rate with the electron up (index 0) or down (index 1).
    pub(crate) pair_rates: [Vec<f64>; 2],
    /// Pair indices touching each nucleus.
    pub(crate) adjacency: Vec<Vec<usize>>,
}

impl RateModel {
    pub fn new(params: &PhysicalParams, c: &Couplings, opts: RateOptions) -> Result<Self> {
        let single = single_spin_rates(params, c)?;
        let n = c.n_nuclei();
        let width = params.r2s + params.r2i;
        let wi = params.omega_i();
        let is_prefactor: Vec<f64> = if params.omega1 == 0.0 {
            vec![0.0; n]
        } else {
            if width == 0.0 {
                return Err(Error::Domain("R2S + R2I = 0: flip-flop rate diverges".into()));
            }
            c.bsq()
                .iter()
                .map(|b2| params.omega1 * params.omega1 * b2 / (8.0 * wi * wi * width))
                .collect()
        };
        let is_correction = c
            .bsq()
            .iter()
            .map(|b2| {
                if opts.second_order {
                    (4.0 * params.omega1 * params.omega1 - b2) / (8.0 * wi)
                } else {
                    0.0
                }
            })
            .collect();
        let mut pairs = Vec::new();
        let mut pair_rates = [Vec::new(), Vec::new()];
        let mut adjacency = vec![Vec::new(); n];
        for p in c.pairs() {
            if p.d == 0.0 {
                continue;
            }
            if params.r2i == 0.0 {
                return Err(Error::Domain("R2I = 0: nuclear flip-flop rate diverges".into()));
            }
            let idx = pairs.len();
            pairs.push((p.k, p.j));
            let da = c.a()[p.k] - c.a()[p.j];
            let db = c.bsq()[p.k] - c.bsq()[p.j];
            for (e, m_s) in [(0, 0.5), (1, -0.5)] {
                pair_rates[e].push(pair_rate(p.d, da, db, m_s, params, opts));
            }
            adjacency[p.k].push(idx);
            adjacency[p.j].push(idx);
        }
        Ok(Self {
            n_nuclei: n,
            electron_up: single.electron_up,
            electron_down: single.electron_down,
            nuclear: single.nuclear,
            is_prefactor,
            offset: params.offset,
            is_correction,
            is_width: width,
            a: c.a().to_vec(),
            pairs,
            pair_rates,
            adjacency,
        })
    }

    pub fn n_nuclei(&self) -> usize {
        self.n_nuclei
    }

    pub fn n_spins(&self) -> usize {
        self.n_nuclei + 1
    }

    pub fn hyperfine(&self) -> &[f64] {
        &self.a
    }

    /// Rate at which the electron leaves its current state.
    pub fn electron_rate(&self, conf: &Configuration) -> f64 {
        if conf.electron_up() {
            self.electron_down
        } else {
            self.electron_up
        }
    }

    /// Kinetic-constraint factor 1/(1 + D_k²) from the cached hyperfine sum.
    pub(crate) fn is_constraint(&self, k: usize, conf: &Configuration) -> f64 {
        let field = self.offset + (conf.hyperfine_sum() - self.a[k] * conf.nucleus_m(k)) + self.is_correction[k];
        let dk = field / self.is_width;
        1.0 / (1.0 + dk * dk)
    }

    /// Electron–nucleus flip-flop rate of nucleus `k` on `conf`, with the
    /// constraint field summed term by term.
    pub fn is_rate(&self, k: usize, conf: &Configuration) -> f64 {
        let field = constraint_field(k, conf, self.offset, &self.a) + self.is_correction[k];
        let dk = field / self.is_width;
        self.is_prefactor[k] / (1.0 + dk * dk)
    }

    pub fn pair_rate(&self, pair: usize, electron_up: bool) -> f64 {
        self.pair_rates[usize::from(!electron_up)][pair]
    }

    pub fn configuration(&self, spins: Vec<bool>) -> Configuration {
        assert_eq!(spins.len(), self.n_spins());
        Configuration::new(spins, &self.a)
    }

    /// Applies `event` to `conf`.
    pub fn apply(&self, event: Event, conf: &mut Configuration) {
        match event {
            Event::ElectronFlip => conf.flip_electron(),
            Event::NuclearFlip(k) => conf.flip_nucleus(k, self.a[k]),
            Event::ElectronNuclearFlipFlop(k) => {
                conf.flip_electron();
                conf.flip_nucleus(k, self.a[k]);
            }
            Event::NuclearFlipFlop { k, j, .. } => {
                conf.flip_nucleus(k, self.a[k]);
                conf.flip_nucleus(j, self.a[j]);
            }
        }
    }
}

/// Applicable events and their rates for one configuration.
#[derive(Debug, Clone, Default)]
pub struct EventTable {
    pub events: Vec<(Event, f64)>,
    pub total_rate: f64,
}

/// Lists every applicable event from `conf` with its current rate.
///
/// Single flips go away from the current state; flip-flops are listed only
/// for antiparallel partners. Zero-rate events are omitted.
pub fn enumerate_events(conf: &Configuration, model: &RateModel) -> EventTable {
    let mut events = Vec::new();
    let mut push = |e: Event, r: f64| {
        if r > 0.0 {
            events.push((e, r));
        }
    };
    push(Event::ElectronFlip, model.electron_rate(conf));
    for k in 0..model.n_nuclei {
        push(Event::NuclearFlip(k), model.nuclear[k]);
    }
    for k in 0..model.n_nuclei {
        if conf.antiparallel(0, k + 1) {
            push(Event::ElectronNuclearFlipFlop(k), model.is_rate(k, conf));
        }
    }
    for (pair, &(k, j)) in model.pairs.iter().enumerate() {
        if conf.antiparallel(k + 1, j + 1) {
            push(
                Event::NuclearFlipFlop { pair, k, j },
                model.pair_rate(pair, conf.electron_up()),
            );
        }
    }
    let total_rate = events.iter().map(|e| e.1).sum();
    EventTable { events, total_rate }
}

/// Largest system for which the dense classical generator is assembled.
pub const MAX_GENERATOR_SPINS: usize = 12;

/// Dense 2^N × 2^N generator G with G[a][b] the rate b → a and zero column sums.
pub fn classical_generator(model: &RateModel) -> Result<DMatrix<f64>> {
    let n = model.n_spins();
    if n > MAX_GENERATOR_SPINS {
        return Err(Error::Capacity {
            what: "dense classical generator",
            spins: n,
            max: MAX_GENERATOR_SPINS,
        });
    }
    let dim = 1usize << n;
    let mut g = DMatrix::zeros(dim, dim);
    for b in 0..dim {
        let spins = (0..n).map(|i| (b >> (n - 1 - i)) & 1 == 0).collect();
        let conf = model.configuration(spins);
        let table = enumerate_events(&conf, model);
        for (event, rate) in table.events {
            let mut next = conf.clone();
            model.apply(event, &mut next);
            g[(next.basis_index(), b)] += rate;
            g[(b, b)] -= rate;
        }
    }
    Ok(g)
}

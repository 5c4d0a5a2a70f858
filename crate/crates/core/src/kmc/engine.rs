//! Gillespie sampling with incrementally maintained rate totals.
//!
//! Electron–nucleus flip-flops are drawn by thinning: candidates are proposed
//! at their unconstrained rate and accepted with the constraint factor
//! 1/(1 + D_k²). Every D_k shifts whenever any nucleus flips, so exact rates
//! would cost O(n) per event; the unconstrained prefactor only changes for
//! the flipped spin.

use rand::{Rng, RngExt};
use rand_distr::Exp1;

use super::config::Configuration;
use super::model::{Event, EventTable, RateModel};
use super::sumtree::SumTree;
use crate::error::{Error, Result};

const RESYNC_INTERVAL: u32 = 4096;

/// One Gillespie step over an explicit event table.
///
/// Draws the waiting time and event from `table`, applies the event to `conf`
/// and returns both. Errors with [`Error::Stall`] if no event has positive rate.
pub fn kmc_step<R: Rng + ?Sized>(
    conf: &mut Configuration,
    table: &EventTable,
    model: &RateModel,
    rng: &mut R,
) -> Result<(Event, f64)> {
    if !(table.total_rate > 0.0) {
        return Err(Error::Stall);
    }
    let dt = rng.sample::<f64, _>(Exp1) / table.total_rate;
    let mut u = rng.random::<f64>() * table.total_rate;
    let mut chosen = table.events[table.events.len() - 1].0;
    for &(event, rate) in &table.events {
        if u < rate {
            chosen = event;
            break;
        }
        u -= rate;
    }
    model.apply(chosen, conf);
    Ok((chosen, dt))
}

/// Trajectory state for the sampler: the configuration plus partial-sum trees
/// of applicable event rates.
#[derive(Debug, Clone)]
pub struct KmcEngine<'m> {
    model: &'m RateModel,
    conf: Configuration,
    nuclear: SumTree,
    /// Unconstrained flip-flop prefactors of nuclei antiparallel to an
    /// electron that is up (index 0) or down (index 1).
    is_trees: [SumTree; 2],
    /// Applicable pair rates; a single tree when the rates do not depend on
    /// the electron.
    ii_trees: Vec<SumTree>,
    nuclear_flips: u32,
    time: f64,
    events: u64,
}

impl<'m> KmcEngine<'m> {
    pub fn new(model: &'m RateModel, conf: Configuration) -> Self {
        assert_eq!(conf.n_spins(), model.n_spins(), "configuration size mismatch");
        let n = model.n_nuclei;
        let is_leaf = |e: usize, k: usize| {
            // Electron up (e = 0) pairs with nuclei that are down.
            if conf.nucleus_up(k) == (e == 1) {
                model.is_prefactor[k]
            } else {
                0.0
            }
        };
        let is_trees = [0, 1].map(|e| SumTree::new(&(0..n).map(|k| is_leaf(e, k)).collect::<Vec<_>>()));
        let shared = model.pair_rates[0] == model.pair_rates[1];
        let ii_trees = (0..if shared { 1 } else { 2 })
            .map(|e| {
                let w: Vec<f64> = model
                    .pairs
                    .iter()
                    .enumerate()
                    .map(|(p, &(k, j))| if conf.antiparallel(k + 1, j + 1) { model.pair_rates[e][p] } else { 0.0 })
                    .collect();
                SumTree::new(&w)
            })
            .collect();
        Self {
            model,
            nuclear: SumTree::new(&model.nuclear),
            conf,
            is_trees,
            ii_trees,
            nuclear_flips: 0,
            time: 0.0,
            events: 0,
        }
    }

    pub fn configuration(&self) -> &Configuration {
        &self.conf
    }

    /// Simulated time so far.
    pub fn time(&self) -> f64 {
        self.time
    }

    /// Number of accepted events so far.
    pub fn events(&self) -> u64 {
        self.events
    }

    fn electron_index(&self) -> usize {
        usize::from(!self.conf.electron_up())
    }

    fn ii_tree(&self) -> &SumTree {
        &self.ii_trees[self.electron_index().min(self.ii_trees.len() - 1)]
    }

    /// Upper bound on the exit rate used for proposals (exact apart from the
    /// flip-flop constraint factors).
    pub fn proposal_rate(&self) -> f64 {
        self.model.electron_rate(&self.conf)
            + self.nuclear.total()
            + self.is_trees[self.electron_index()].total()
            + self.ii_tree().total()
    }

    /// Draws the next event and the time until it happens, without applying it.
    ///
    /// Rejected proposals are absorbed into the waiting time.
    pub fn next_event<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(Event, f64)> {
        let e = self.electron_index();
        let r_e = self.model.electron_rate(&self.conf);
        let r_n = self.nuclear.total();
        let is = &self.is_trees[e];
        let ii = self.ii_tree();
        let total = r_e + r_n + is.total() + ii.total();
        if !(total > 0.0) {
            return Err(Error::Stall);
        }
        let weights = [r_e, r_n, is.total(), ii.total()];
        let last = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
        let mut dt = 0.0;
        loop {
            dt += rng.sample::<f64, _>(Exp1) / total;
            let mut u = rng.random::<f64>() * total;
            let mut cat = last;
            for (i, &w) in weights.iter().enumerate() {
                if u < w {
                    cat = i;
                    break;
                }
                u -= w;
            }
            let u = u.min(weights[cat]);
            match cat {
                0 => return Ok((Event::ElectronFlip, dt)),
                1 => return Ok((Event::NuclearFlip(self.nuclear.find(u)), dt)),
                2 => {
                    let k = is.find(u);
                    if rng.random::<f64>() < self.model.is_constraint(k, &self.conf) {
                        return Ok((Event::ElectronNuclearFlipFlop(k), dt));
                    }
                }
                _ => {
                    let pair = ii.find(u);
                    let (k, j) = self.model.pairs[pair];
                    return Ok((Event::NuclearFlipFlop { pair, k, j }, dt));
                }
            }
        }
    }

    /// Applies `event` and updates the rate trees.
    pub fn apply(&mut self, event: Event) {
        self.events += 1;
        match event {
            Event::ElectronFlip => self.conf.flip_electron(),
            Event::NuclearFlip(k) => self.flip_nucleus(k),
            Event::ElectronNuclearFlipFlop(k) => {
                self.conf.flip_electron();
                self.flip_nucleus(k);
            }
            Event::NuclearFlipFlop { k, j, .. } => {
                self.flip_nucleus(k);
                self.flip_nucleus(j);
            }
        }
    }

    fn flip_nucleus(&mut self, k: usize) {
        let m = self.model;
        self.conf.flip_nucleus(k, m.a[k]);
        let up = self.conf.nucleus_up(k);
        self.is_trees[0].set(k, if up { 0.0 } else { m.is_prefactor[k] });
        self.is_trees[1].set(k, if up { m.is_prefactor[k] } else { 0.0 });
        for &p in &m.adjacency[k] {
            let (a, b) = m.pairs[p];
            let anti = self.conf.antiparallel(a + 1, b + 1);
            for (e, tree) in self.ii_trees.iter_mut().enumerate() {
                tree.set(p, if anti { m.pair_rates[e][p] } else { 0.0 });
            }
        }
        self.nuclear_flips += 1;
        if self.nuclear_flips >= RESYNC_INTERVAL {
            self.nuclear_flips = 0;
            self.conf.resync(&m.a);
        }
    }

    /// Draws and applies one event, advancing the clock.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<(Event, f64)> {
        let (event, dt) = self.next_event(rng)?;
        self.time += dt;
        self.apply(event);
        Ok((event, dt))
    }

    pub(crate) fn apply_at(&mut self, event: Event, t: f64) {
        self.time = t;
        self.apply(event);
    }
}

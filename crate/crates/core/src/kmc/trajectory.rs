use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};

use super::config::Configuration;
use super::engine::KmcEngine;
use super::model::RateModel;
use crate::error::{Error, Result};

/// Sampling times of a run: starts at 0 and strictly increases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeGrid(Vec<f64>);

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::Spec("time grid is empty".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::Spec(format!("time grid must start at 0, got {}", times[0])));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::Spec("time grid has non-finite entries".into()));
        }
        if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::Spec(format!("time grid not strictly increasing at {} -> {}", w[0], w[1])));
        }
        Ok(Self(times))
    }

    /// `points` equally spaced times from 0 to `t_max`.
    pub fn linear(t_max: f64, points: usize) -> Result<Self> {
        if points < 2 {
            return Self::new(vec![0.0]);
        }
        let step = t_max / (points - 1) as f64;
        Self::new((0..points).map(|i| i as f64 * step).collect())
    }

    /// 0 followed by `points` logarithmically spaced times in [t_min, t_max].
    pub fn log_spaced(t_min: f64, t_max: f64, points: usize) -> Result<Self> {
        if !(t_min > 0.0 && t_max >= t_min) || points == 0 {
            return Err(Error::Spec(format!("invalid log grid [{t_min}, {t_max}] with {points} points")));
        }
        let mut times = vec![0.0];
        if points == 1 {
            times.push(t_max);
        } else {
            let r = (t_max / t_min).ln() / (points - 1) as f64;
            times.extend((0..points).map(|i| t_min * (r * i as f64).exp()));
            *times.last_mut().unwrap() = t_max;
        }
        Self::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn t_max(&self) -> f64 {
        *self.0.last().unwrap()
    }
}

impl TryFrom<Vec<f64>> for TimeGrid {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<TimeGrid> for Vec<f64> {
    fn from(g: TimeGrid) -> Self {
        g.0
    }
}

/// Distribution of the starting configuration.
///
/// Polarizations are p = 2⟨m⟩; each spin is drawn independently up with
/// probability (1 + p)/2.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialState {
    /// Electron at its thermal polarization −P0, nuclei unpolarized.
    #[default]
    Thermal,
    /// One polarization for the electron and one shared by all nuclei.
    Uniform { electron: f64, nuclei: f64 },
    /// One polarization per spin, electron first.
    PerSpin { polarization: Vec<f64> },
    /// A fixed configuration, electron first; `true` is up.
    Fixed { spins: Vec<bool> },
}

impl InitialState {
    /// Per-spin polarizations for a system of `n_spins` with thermal
    /// polarization `p0`.
    pub fn polarizations(&self, n_spins: usize, p0: f64) -> Result<Vec<f64>> {
        let p = match self {
            InitialState::Thermal => {
                let mut p = vec![0.0; n_spins];
                p[0] = -p0;
                p
            }
            InitialState::Uniform { electron, nuclei } => {
                let mut p = vec![*nuclei; n_spins];
                p[0] = *electron;
                p
            }
            InitialState::PerSpin { polarization } => polarization.clone(),
            InitialState::Fixed { spins } => spins.iter().map(|&s| if s { 1.0 } else { -1.0 }).collect(),
        };
        if p.len() != n_spins {
            return Err(Error::Spec(format!("initial state lists {} spins, system has {n_spins}", p.len())));
        }
        if let Some(x) = p.iter().find(|x| !(x.abs() <= 1.0)) {
            return Err(Error::Spec(format!("initial polarization {x} outside [-1, 1]")));
        }
        Ok(p)
    }

    pub fn sample<R: Rng + ?Sized>(&self, model: &RateModel, p0: f64, rng: &mut R) -> Result<Configuration> {
        let p = self.polarizations(model.n_spins(), p0)?;
        let spins = p
            .iter()
            .map(|&p| if p.abs() == 1.0 { p > 0.0 } else { rng.random::<f64>() < (1.0 + p) / 2.0 })
            .collect();
        Ok(model.configuration(spins))
    }
}

/// Configurations sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// One configuration per grid time, each electron first.
    pub samples: Vec<Vec<bool>>,
    /// Accepted events.
    pub events: u64,
}

/// Runs one trajectory from `initial` and samples it on `grid`.
///
/// The sample at grid time t is the state just before t. An absorbing state
/// (no event with positive rate) is held to the end of the grid.
pub fn run_trajectory<R: Rng + ?Sized>(
    model: &RateModel,
    grid: &TimeGrid,
    initial: Configuration,
    rng: &mut R,
) -> Result<Trajectory> {
    let mut samples = Vec::with_capacity(grid.len());
    let events = simulate_on_grid(model, grid, initial, rng, |_, conf| samples.push(conf.spins().to_vec()))?;
    Ok(Trajectory { samples, events })
}

/// Core loop shared with the ensemble driver: calls `record(i, conf)` for
/// every grid index in order.
pub(crate) fn simulate_on_grid<R: Rng + ?Sized>(
    model: &RateModel,
    grid: &TimeGrid,
    initial: Configuration,
    rng: &mut R,
    mut record: impl FnMut(usize, &Configuration),
) -> Result<u64> {
    let times = grid.times();
    let t_max = grid.t_max();
    let mut engine = KmcEngine::new(model, initial);
    let mut next = 0;
    while next < times.len() {
        let (event, dt) = match engine.next_event(rng) {
            Ok(x) => x,
            Err(Error::Stall) => (super::model::Event::ElectronFlip, f64::INFINITY),
            Err(e) => return Err(e),
        };
        let t_event = engine.time() + dt;
        while next < times.len() && times[next] <= t_event {
            record(next, engine.configuration());
            next += 1;
        }
        if t_event > t_max {
            break;
        }
        engine.apply_at(event, t_event);
    }
    Ok(engine.events())
}

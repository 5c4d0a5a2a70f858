use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::model::RateModel;
use super::trajectory::{simulate_on_grid, InitialState, TimeGrid};
use crate::error::{Error, Result};

/// Trajectories per reduction block. Blocks are summed in integer arithmetic,
/// so the result does not depend on scheduling.
const BLOCK: usize = 64;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trajectory `index` in a run with `master_seed`.
pub fn trajectory_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(index))
}

/// Random generator used for trajectory `index`.
pub fn trajectory_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trajectory_seed(master_seed, index))
}

/// Per-spin polarization p = 2⟨m⟩ on a time grid with standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationSeries {
    pub times: Vec<f64>,
    /// `mean[t][s]` for grid index t and spin s (electron is spin 0).
    pub mean: Vec<Vec<f64>>,
    /// Standard error of the mean; NaN when a single trajectory was run.
    pub stderr: Vec<Vec<f64>>,
    pub trajectories: usize,
}

impl PolarizationSeries {
    pub fn n_spins(&self) -> usize {
        self.mean.first().map_or(0, Vec::len)
    }

    /// Series of a single spin.
    pub fn spin(&self, s: usize) -> Vec<f64> {
        self.mean.iter().map(|row| row[s]).collect()
    }

    pub fn spin_stderr(&self, s: usize) -> Vec<f64> {
        self.stderr.iter().map(|row| row[s]).collect()
    }

    /// Mean over nuclei `range` (spin indices) at each time, with the standard
    /// error of that average treating spins as independent.
    pub fn average(&self, spins: std::ops::Range<usize>) -> (Vec<f64>, Vec<f64>) {
        let n = spins.len() as f64;
        let mean = self.mean.iter().map(|r| r[spins.clone()].iter().sum::<f64>() / n).collect();
        let se = self
            .stderr
            .iter()
            .map(|r| r[spins.clone()].iter().map(|e| e * e).sum::<f64>().sqrt() / n)
            .collect();
        (mean, se)
    }

    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        let n = self.n_spins();
        let mut header = vec!["time".to_string()];
        header.extend((0..n).map(|s| format!("p_spin{s}")));
        header.extend((0..n).map(|s| format!("se_spin{s}")));
        writeln!(w, "{}", header.join(","))?;
        for (t, (m, e)) in self.times.iter().zip(self.mean.iter().zip(&self.stderr)) {
            let mut row = vec![t.to_string()];
            row.extend(m.iter().map(f64::to_string));
            row.extend(e.iter().map(f64::to_string));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
        self.write_csv(&mut f).and_then(|_| f.flush()).map_err(|e| Error::io(path, e))
    }

    /// Reads a series CSV. The trajectory count is not stored in the file and
    /// is reported as 0.
    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let parse = |message: String| Error::Parse { path: path.to_path_buf(), message };
        let mut lines = BufReader::new(f).lines();
        let header = lines
            .next()
            .ok_or_else(|| parse("empty file".into()))?
            .map_err(|e| Error::io(path, e))?;
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.first() != Some(&"time") || cols.len() % 2 != 1 {
            return Err(parse(format!("unexpected header {header:?}")));
        }
        let n = (cols.len() - 1) / 2;
        for s in 0..n {
            if cols[1 + s] != format!("p_spin{s}") || cols[1 + n + s] != format!("se_spin{s}") {
                return Err(parse(format!("unexpected column names in {header:?}")));
            }
        }
        let mut out = Self { times: vec![], mean: vec![], stderr: vec![], trajectories: 0 };
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let vals = line
                .trim()
                .split(',')
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| parse(format!("line {}: {e}", i + 2)))?;
            if vals.len() != cols.len() {
                return Err(parse(format!("line {}: {} fields, expected {}", i + 2, vals.len(), cols.len())));
            }
            out.times.push(vals[0]);
            out.mean.push(vals[1..=n].to_vec());
            out.stderr.push(vals[n + 1..].to_vec());
        }
        Ok(out)
    }
}

/// Averages `n_traj` trajectories on `grid` using `workers` threads.
///
/// Trajectory i starts from `initial` sampled with its own generator
/// [`trajectory_rng`]`(master_seed, i)`; the result is bit-identical for any
/// worker count.
pub fn average_trajectories(
    model: &RateModel,
    p0: f64,
    grid: &TimeGrid,
    n_traj: usize,
    master_seed: u64,
    workers: usize,
    initial: &InitialState,
) -> Result<PolarizationSeries> {
    if n_traj == 0 {
        return Err(Error::Spec("trajectory count must be at least 1".into()));
    }
    initial.polarizations(model.n_spins(), p0)?;
    let n_spins = model.n_spins();
    let cells = grid.len() * n_spins;
    let block = |b: usize| -> Result<Vec<i64>> {
        let mut sums = vec![0i64; cells];
        for i in b * BLOCK..((b + 1) * BLOCK).min(n_traj) {
            let mut rng = trajectory_rng(master_seed, i as u64);
            let conf = initial.sample(model, p0, &mut rng)?;
            simulate_on_grid(model, grid, conf, &mut rng, |t, conf| {
                let row = &mut sums[t * n_spins..(t + 1) * n_spins];
                for (acc, &up) in row.iter_mut().zip(conf.spins()) {
                    *acc += if up { 1 } else { -1 };
                }
            })?;
        }
        Ok(sums)
    };
    let n_blocks = n_traj.div_ceil(BLOCK);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Spec(format!("cannot start worker pool: {e}")))?;
    let sums = pool.install(|| {
        (0..n_blocks).into_par_iter().map(block).try_reduce(
            || vec![0i64; cells],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )
    })?;
    let n = n_traj as f64;
    let mut mean = Vec::with_capacity(grid.len());
    let mut stderr = Vec::with_capacity(grid.len());
    for row in sums.chunks(n_spins) {
        mean.push(row.iter().map(|&s| s as f64 / n).collect());
        stderr.push(
            row.iter()
                .map(|&s| {
                    if n_traj == 1 {
                        return f64::NAN;
                    }
                    let s = s as f64;
                    // Each sample is ±1, so Σx² = n.
                    let var = ((n - s * s / n) / (n - 1.0)).max(0.0);
                    (var / n).sqrt()
                })
                .collect(),
        );
    }
    Ok(PolarizationSeries { times: grid.times().to_vec(), mean, stderr, trajectories: n_traj })
}

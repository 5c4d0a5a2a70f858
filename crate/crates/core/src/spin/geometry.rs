use std::fmt::Write as _;
use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum allowed separation between two sites, Å.
const MIN_SEPARATION: f64 = 0.1;

/// Site positions in ångström. Index 0 is always the electron.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    positions: Vec<[f64; 3]>,
    /// Nominal lattice spacing when the geometry came from a generator.
    #[serde(default)]
    spacing: Option<f64>,
}

impl Geometry {
    /// Builds a geometry with the electron at `positions[0]`.
    pub fn new(positions: Vec<[f64; 3]>) -> Result<Self> {
        Self::with_spacing(positions, None)
    }

    pub(crate) fn with_spacing(positions: Vec<[f64; 3]>, spacing: Option<f64>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::Geometry("geometry needs at least the electron site".into()));
        }
        if positions.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Geometry("non-finite coordinate".into()));
        }
        for i in 0..positions.len() {
            for j in (i + 1)..positions.len() {
                let r = distance(&positions[i], &positions[j]);
                if r <= MIN_SEPARATION {
                    return Err(Error::Geometry(format!(
                        "sites {i} and {j} coincide (distance {r:.3} Å)"
                    )));
                }
            }
        }
        Ok(Self { positions, spacing })
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn electron(&self) -> [f64; 3] {
        self.positions[0]
    }

    /// Nuclear positions, nucleus `k` at index `k`.
    pub fn nuclei(&self) -> &[[f64; 3]] {
        &self.positions[1..]
    }

    pub fn n_nuclei(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn spacing(&self) -> Option<f64> {
        self.spacing
    }

    /// Plain-text table: one `x y z` line per site in Å, electron first.
    pub fn to_table(&self) -> String {
        let mut out = String::from("# x y z (angstrom), electron first\n");
        for p in &self.positions {
            writeln!(out, "{:.6} {:.6} {:.6}", p[0], p[1], p[2]).unwrap();
        }
        out
    }

    pub fn from_table(text: &str) -> Result<Self> {
        let mut positions = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Geometry(format!("line {}: {e}", lineno + 1)))?;
            let [x, y, z] = cols[..] else {
                return Err(Error::Geometry(format!(
                    "line {}: expected 3 columns, found {}",
                    lineno + 1,
                    cols.len()
                )));
            };
            positions.push([x, y, z]);
        }
        Self::new(positions)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_table(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_table()).map_err(|e| Error::io(path, e))
    }
}

pub(crate) fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Regular geometries used by the experiment presets.
///
/// Jitter is an independent uniform displacement per coordinate with
/// amplitude `jitter * spacing`, applied to nuclei only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LatticeSpec {
    /// `side`×`side`×`side` grid with the electron on the central site.
    Cubic {
        side: usize,
        spacing: f64,
        jitter: f64,
        seed: u64,
    },
    /// Linear chain of `sites` sites (electron first) along a direction at
    /// polar angle `angle` (radians) to the field.
    Chain {
        sites: usize,
        spacing: f64,
        jitter: f64,
        angle: f64,
        seed: u64,
    },
}

pub fn generate_lattice(spec: &LatticeSpec) -> Result<Geometry> {
    match *spec {
        LatticeSpec::Cubic {
            side,
            spacing,
            jitter,
            seed,
        } => {
            check_common(spacing, jitter)?;
            if side % 2 == 0 {
                return Err(Error::Spec(format!(
                    "cubic side {side} is even; the electron needs a unique central site"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = (side / 2) as f64;
            let mut positions = vec![[0.0; 3]];
            for i in 0..side {
                for j in 0..side {
                    for k in 0..side {
                        let site = [i as f64 - c, j as f64 - c, k as f64 - c];
                        if site == [0.0; 3] {
                            continue;
                        }
                        positions.push(jittered(site.map(|x| x * spacing), spacing, jitter, &mut rng));
                    }
                }
            }
            Geometry::with_spacing(positions, Some(spacing))
        }
        LatticeSpec::Chain {
            sites,
            spacing,
            jitter,
            angle,
            seed,
        } => {
            check_common(spacing, jitter)?;
            if sites < 1 {
                return Err(Error::Spec("chain needs at least one site".into()));
            }
            if !angle.is_finite() {
                return Err(Error::Spec("chain angle must be finite".into()));
            }
            let dir = [angle.sin(), 0.0, angle.cos()];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut positions = vec![[0.0; 3]];
            for s in 1..sites {
                let site = dir.map(|u| u * s as f64 * spacing);
                positions.push(jittered(site, spacing, jitter, &mut rng));
            }
            Geometry::with_spacing(positions, Some(spacing))
        }
    }
}

fn check_common(spacing: f64, jitter: f64) -> Result<()> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::Spec(format!("spacing must be positive, got {spacing}")));
    }
    if !(0.0..0.5).contains(&jitter) {
        return Err(Error::Spec(format!("jitter must be in [0, 0.5), got {jitter}")));
    }
    Ok(())
}

fn jittered(p: [f64; 3], spacing: f64, jitter: f64, rng: &mut ChaCha8Rng) -> [f64; 3] {
    if jitter == 0.0 {
        return p;
    }
    let amp = jitter * spacing;
    p.map(|x| x + amp * (2.0 * rng.random::<f64>() - 1.0))
}

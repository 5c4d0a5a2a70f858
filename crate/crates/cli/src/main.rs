//! `dnp`: run solid-effect DNP experiments from config files or presets.
//!
//! Exit codes: 0 success, 1 usage or other errors, 2 validity refusal,
//! 3 comparison failure, 4 file errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dnp_core::experiment::{
    self, compare_series, gate_validity, generators, matrix_csv, preset, preset_names, run_experiment, sweep, write_atomic,
    Bundle, DiffusionConfig, ExperimentConfig, Method, Tolerance,
};
use dnp_core::kmc::PolarizationSeries;
use dnp_core::qme::compare_generators;
use dnp_core::spin::ValidityReport;
use dnp_core::units::format_frequency;
use dnp_core::Error;

#[derive(Parser)]
#[command(name = "dnp", version, about = "Solid-effect DNP as kinetically constrained spin diffusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the spin system and write geometry, couplings and the resolved config.
    Generate(Common),
    /// Average kMC trajectories.
    Simulate(Common),
    /// Propagate the exact quantum master equation (at most 5 nuclei).
    Reference(Common),
    /// Write the classical generator and its numerical adiabatic projection.
    Project(Common),
    /// Run a chain with kMC and compare it to the 1D diffusion model.
    Diffusion(Common),
    /// Run the experiment once per value of a config parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Dotted config path, e.g. modifiers.bulk_dipolar_scale.
        #[arg(long)]
        path: Option<String>,
        /// Comma-separated values in TOML syntax, e.g. 1.0,0.5 or '"0 Hz"'.
        #[arg(long)]
        values: Option<String>,
    },
    /// Compare two series CSV files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Allowed deviation in combined standard errors.
        #[arg(long, default_value_t = 3.0)]
        sigma: f64,
        /// Allowed absolute deviation on top of the statistical one.
        #[arg(long, default_value_t = 0.0)]
        absolute: f64,
        /// Interpolate the second series onto the first grid.
        #[arg(long)]
        interpolate: bool,
    },
    /// Check the config and the adiabatic-elimination validity condition.
    Validate(Common),
    /// List the shipped presets.
    Presets,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config file (TOML) or run manifest (JSON).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    trajectories: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 uses every core).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory (default out/<name>).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    override_validity: bool,
    #[arg(long)]
    second_order: bool,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(p), _) if p.extension().is_some_and(|e| e == "json") => ExperimentConfig::from_manifest(p)?,
            (Some(p), _) => ExperimentConfig::load(p)?,
            (None, Some(name)) => preset(name)?,
            (None, None) => unreachable!("clap requires one of --config and --preset"),
        };
        let sim = &mut cfg.simulation;
        if let Some(n) = self.trajectories {
            sim.trajectories = n;
        }
        if let Some(s) = self.seed {
            sim.seed = s;
        }
        if let Some(w) = self.workers {
            sim.workers = w;
        }
        if self.second_order {
            sim.second_order = true;
        }
        if self.override_validity {
            cfg.validity.override_validity = true;
        }
        if let Some(out) = &self.out {
            cfg.output.dir = Some(out.clone());
        }
        cfg.check()?;
        Ok(cfg)
    }
}

enum Failure {
    Error(Error),
    Comparison(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn print_validity(v: &ValidityReport) {
    println!(
        "validity: {} (ratio {:.3e}, threshold {}, dominant {}, epsilon {:.3e})",
        if v.pass { "pass" } else { "FAIL" },
        v.ratio,
        v.threshold,
        v.dominant,
        v.epsilon
    );
}

fn report(b: &Bundle) -> Result<(), Failure> {
    println!("wrote {}", b.dir.display());
    print_validity(&b.manifest.validity);
    for w in &b.manifest.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(s) = b.kmc.as_ref().or(b.qme.as_ref()) {
        if s.n_spins() > 1 {
            let (m, e) = s.average(1..s.n_spins());
            println!(
                "mean nuclear polarization at t = {}: {:.5} ± {:.5}",
                s.times.last().unwrap(),
                m.last().unwrap(),
                e.last().unwrap()
            );
        }
    }
    if let Some(d) = &b.diffusion {
        println!("D_av = {:.4} A^2/s, source level {:.4}", d.d_av, d.source);
        println!(
            "reflective: max relative crossing error {:.3}, late rms {:.4}; absorbing: late rms {:.4}",
            d.reflective.max_relative, d.reflective.late_rms, d.absorbing.late_rms
        );
    }
    if let Some(c) = &b.comparison {
        println!("{}", c.summary());
        if !c.pass {
            return Err(Failure::Comparison("kMC and master equation disagree".into()));
        }
    }
    Ok(())
}

fn generate(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let r = cfg.resolve()?;
    let dir = cfg.output_dir();
    let c = &r.couplings;
    let mut table = String::from("nucleus,a_hz,b_abs_hz\n");
    for k in 0..c.n_nuclei() {
        table += &format!("{k},{},{}\n", c.a()[k] / std::f64::consts::TAU, c.b_abs(k) / std::f64::consts::TAU);
    }
    write_atomic(&dir.join("hyperfine.csv"), table.as_bytes())?;
    let mut pairs = String::from("k,j,d_hz\n");
    for p in c.pairs() {
        pairs += &format!("{},{},{}\n", p.k, p.j, p.d / std::f64::consts::TAU);
    }
    write_atomic(&dir.join("dipolar.csv"), pairs.as_bytes())?;
    if let Some(g) = &r.geometry {
        write_atomic(&dir.join("geometry.txt"), g.to_table().as_bytes())?;
    }
    write_atomic(&dir.join("config.toml"), cfg.to_toml()?.as_bytes())?;
    println!("wrote {}", dir.display());
    println!(
        "{} nuclei, {} dipolar pairs, nuclear Larmor {}, P0 = {:.6}",
        c.n_nuclei(),
        c.pairs().len(),
        format_frequency(r.params.omega_i()),
        r.params.p0()
    );
    print_validity(&r.validity);
    Ok(())
}

fn project(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let r = cfg.resolve()?;
    if let Some(w) = gate_validity(&r)? {
        eprintln!("warning: {w}");
    }
    let (analytic, numeric) = generators(&r)?;
    let dir = cfg.output_dir();
    write_atomic(&dir.join("generator.csv"), matrix_csv(&analytic).as_bytes())?;
    print_validity(&r.validity);
    match numeric {
        Some(m) => {
            write_atomic(&dir.join("generator_projected.csv"), matrix_csv(&m).as_bytes())?;
            let dev = compare_generators(&m, &analytic, 1e-4 * analytic.abs().max())?;
            println!("max relative deviation of projected from analytic rates: {dev:.3e}");
        }
        None => println!("system too large for the numerical projection; wrote the analytic generator only"),
    }
    println!("wrote {}", dir.display());
    Ok(())
}

fn parse_values(text: &str) -> Result<Vec<toml::Value>, Error> {
    let doc: toml::Table = toml::from_str(&format!("v = [{text}]"))
        .map_err(|e| Error::Schema(format!("sweep values: {}", e.message())))?;
    match doc.get("v") {
        Some(toml::Value::Array(a)) => Ok(a.clone()),
        _ => Err(Error::Schema("sweep values must be a list".into())),
    }
}

fn load_series(p: &Path) -> Result<PolarizationSeries, Error> {
    PolarizationSeries::load(p)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate(c) => generate(&c.load()?),
        Command::Simulate(c) => {
            let mut cfg = c.load()?;
            cfg.method = Method::Kmc;
            report(&run_experiment(&cfg)?)
        }
        Command::Reference(c) => {
            let mut cfg = c.load()?;
            cfg.method = Method::Qme;
            cfg.diffusion = None;
            report(&run_experiment(&cfg)?)
        }
        Command::Project(c) => project(&c.load()?),
        Command::Diffusion(c) => {
            let mut cfg = c.load()?;
            cfg.method = Method::Kmc;
            cfg.diffusion.get_or_insert_with(DiffusionConfig::default);
            report(&run_experiment(&cfg)?)
        }
        Command::Sweep { common, path, values } => {
            let cfg = common.load()?;
            let (path, values) = match (path, values, &cfg.sweep) {
                (Some(p), Some(v), _) => (p, parse_values(&v)?),
                (None, None, Some(s)) => (s.path.clone(), s.values.clone()),
                _ => return Err(Error::Schema("give both --path and --values, or a [sweep] section".into()).into()),
            };
            let out = sweep(&cfg, &path, &values)?;
            println!("wrote {}", out.dir.join("sweep_summary.csv").display());
            let mut failed = None;
            for (v, b) in values.iter().zip(&out.bundles) {
                println!("--- {path} = {v}");
                if let Err(e) = report(b) {
                    failed = Some(e);
                }
            }
            failed.map_or(Ok(()), Err)
        }
        Command::Compare { a, b, sigma, absolute, interpolate } => {
            let tol = Tolerance { sigma, absolute, interpolate };
            let r = compare_series(&load_series(&a)?, &load_series(&b)?, tol)?;
            println!("{}", r.summary());
            if r.pass {
                Ok(())
            } else {
                Err(Failure::Comparison(format!("spins {:?} out of tolerance", r.failing_spins())))
            }
        }
        Command::Validate(c) => {
            let cfg = c.load()?;
            let r = cfg.resolve()?;
            println!("{}", serde_json::to_string_pretty(&r.validity).unwrap_or_default());
            if let Some(w) = gate_validity(&r)? {
                eprintln!("warning: {w}");
            }
            Ok(())
        }
        Command::Presets => {
            for name in preset_names() {
                let cfg = experiment::preset(name)?;
                println!("{name:20} {:?}, {} trajectories", cfg.method, cfg.simulation.trajectories);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Comparison(msg)) => {
            eprintln!("comparison failed: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            if let Error::Validity(v) = &e {
                if let Ok(json) = serde_json::to_string_pretty(v) {
                    eprintln!("{json}");
                }
                eprintln!("rerun with --override-validity to proceed anyway");
            }
            ExitCode::from(match e {
                Error::Validity(_) => 2,
                Error::Io { .. } | Error::Parse { .. } => 4,
                _ => 1,
            })
        }
    }
}

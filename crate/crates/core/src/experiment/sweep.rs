use std::path::PathBuf;

use super::config::ExperimentConfig;
use super::run::{run_experiment, write_atomic, Bundle};
use crate::error::{Error, Result};

/// Copy of `cfg` with the dotted `path` (e.g. `modifiers.bulk_dipolar_scale`)
/// set to `value`.
pub fn set_path(cfg: &ExperimentConfig, path: &str, value: &toml::Value) -> Result<ExperimentConfig> {
    let mut root = toml::Value::try_from(cfg).map_err(|e| Error::Schema(e.to_string()))?;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Schema(format!("malformed parameter path '{path}'")));
    }
    let (last, parents) = keys.split_last().unwrap();
    let mut node = &mut root;
    for k in parents {
        node = node
            .get_mut(*k)
            .filter(|v| v.is_table())
            .ok_or_else(|| Error::Schema(format!("unknown parameter path '{path}'")))?;
    }
    let table = node.as_table_mut().unwrap();
    table.insert(last.to_string(), value.clone());
    // Unknown leaves are caught by deny_unknown_fields.
    let out: ExperimentConfig = root
        .try_into()
        .map_err(|e: toml::de::Error| Error::Schema(format!("parameter path '{path}': {}", e.message())))?;
    out.check()?;
    Ok(out)
}

fn label(v: &toml::Value) -> String {
    let s = match v {
        toml::Value::String(s) => s.clone(),
        v => v.to_string(),
    };
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect()
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub dir: PathBuf,
    pub values: Vec<toml::Value>,
    pub bundles: Vec<Bundle>,
}

impl SweepOutcome {
    /// Long-format table: value, time, mean nuclear polarization and its
    /// standard error.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("value,time,mean_nuclear,se_nuclear\n");
        for (v, b) in self.values.iter().zip(&self.bundles) {
            let Some(s) = b.kmc.as_ref().or(b.qme.as_ref()) else { continue };
            if s.n_spins() < 2 {
                continue;
            }
            let (m, e) = s.average(1..s.n_spins());
            for ((t, m), e) in s.times.iter().zip(m).zip(e) {
                out += &format!("{},{t},{m},{e}\n", label(v));
            }
        }
        out
    }
}

/// Runs `cfg` once per value with the shared master seed. Bundles go to
/// numbered subdirectories of the base output directory.
pub fn sweep(cfg: &ExperimentConfig, path: &str, values: &[toml::Value]) -> Result<SweepOutcome> {
    if values.is_empty() {
        return Err(Error::Schema("sweep needs at least one value".into()));
    }
    let base = cfg.output_dir();
    let configs = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut c = set_path(cfg, path, v)?;
            c.output.dir = Some(base.join(format!("{i:02}-{}", label(v))));
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let bundles = configs.iter().map(run_experiment).collect::<Result<Vec<_>>>()?;
    let out = SweepOutcome { dir: base, values: values.to_vec(), bundles };
    write_atomic(&out.dir.join("sweep_summary.csv"), out.summary_csv().as_bytes())?;
    Ok(out)
}

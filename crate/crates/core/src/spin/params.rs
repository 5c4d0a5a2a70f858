use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{GAMMA_CARBON13, GAMMA_ELECTRON, GAMMA_PROTON, HBAR, K_B};

/// Nuclear species; only spin-1/2 nuclei are modelled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Nucleus {
    #[serde(rename = "1H")]
    Proton,
    #[serde(rename = "13C")]
    Carbon13,
    /// Gyromagnetic ratio in rad s⁻¹ T⁻¹.
    Custom(f64),
}

impl Nucleus {
    pub fn gamma(self) -> f64 {
        match self {
            Nucleus::Proton => GAMMA_PROTON,
            Nucleus::Carbon13 => GAMMA_CARBON13,
            Nucleus::Custom(g) => g,
        }
    }
}

/// Inputs from which [`PhysicalParams`] are derived. All values SI, angular
/// frequencies in rad s⁻¹.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsSpec {
    pub b0: f64,
    pub temperature: f64,
    pub nucleus: Nucleus,
    pub omega1: f64,
    pub offset: f64,
    pub r1s: f64,
    pub r2s: f64,
    pub r1i: f64,
    pub r2i: f64,
    /// Replaces |γ_n|·B0 as the nuclear Larmor frequency when set.
    #[serde(default)]
    pub nuclear_larmor: Option<f64>,
}

/// Validated physical parameters with derived Larmor frequencies and P0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub b0: f64,
    pub temperature: f64,
    pub gamma_e: f64,
    pub gamma_n: f64,
    pub omega1: f64,
    /// Resonance offset λ.
    pub offset: f64,
    pub r1s: f64,
    pub r2s: f64,
    pub r1i: f64,
    pub r2i: f64,
    omega_s: f64,
    omega_i: f64,
    p0: f64,
}

impl PhysicalParams {
    pub fn new(spec: &ParamsSpec) -> Result<Self> {
        if !(spec.b0 > 0.0 && spec.b0.is_finite()) {
            return Err(Error::Domain(format!("B0 must be positive, got {}", spec.b0)));
        }
        for (name, v) in [
            ("R1S", spec.r1s),
            ("R2S", spec.r2s),
            ("R1I", spec.r1i),
            ("R2I", spec.r2i),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !spec.omega1.is_finite() || !spec.offset.is_finite() {
            return Err(Error::Domain("omega1 and offset must be finite".into()));
        }
        let gamma_n = spec.nucleus.gamma();
        let omega_s = GAMMA_ELECTRON.abs() * spec.b0;
        let omega_i = match spec.nuclear_larmor {
            Some(w) if w > 0.0 && w.is_finite() => w,
            Some(w) => return Err(Error::Domain(format!("nuclear Larmor must be positive, got {w}"))),
            None => gamma_n.abs() * spec.b0,
        };
        let p0 = thermal_polarization_at(omega_s, spec.temperature)?;
        Ok(Self {
            b0: spec.b0,
            temperature: spec.temperature,
            gamma_e: GAMMA_ELECTRON,
            gamma_n,
            omega1: spec.omega1,
            offset: spec.offset,
            r1s: spec.r1s,
            r2s: spec.r2s,
            r1i: spec.r1i,
            r2i: spec.r2i,
            omega_s,
            omega_i,
            p0,
        })
    }

    /// Electron Larmor frequency |γ_e|·B0.
    pub fn omega_s(&self) -> f64 {
        self.omega_s
    }

    /// Nuclear Larmor frequency (|γ_n|·B0 unless overridden).
    pub fn omega_i(&self) -> f64 {
        self.omega_i
    }

    /// Thermal electron polarization.
    pub fn p0(&self) -> f64 {
        self.p0
    }

    /// Copy with a different thermal polarization; used for idealised limits.
    pub fn with_p0(&self, p0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p0) {
            return Err(Error::Domain(format!("P0 must be in [0, 1], got {p0}")));
        }
        Ok(Self { p0, ..self.clone() })
    }
}

/// tanh(ħ ω_S / 2 k_B T) for the given parameters.
pub fn thermal_polarization(params: &PhysicalParams) -> Result<f64> {
    thermal_polarization_at(params.omega_s, params.temperature)
}

pub(crate) fn thermal_polarization_at(omega_s: f64, temperature: f64) -> Result<f64> {
    if !(temperature > 0.0) {
        return Err(Error::Domain(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    Ok((HBAR * omega_s / (2.0 * K_B * temperature)).tanh())
}

#[cfg(test)]
pub(crate) fn test_spec() -> ParamsSpec {
    use std::f64::consts::PI;
    ParamsSpec {
        b0: 3.4,
        temperature: 1.0,
        nucleus: Nucleus::Proton,
        omega1: 2.0 * PI * 50e3,
        offset: 0.0,
        r1s: 1.0,
        r2s: 1e5,
        r1i: 1.0 / 3600.0,
        r2i: 200.0,
        nuclear_larmor: None,
    }
}

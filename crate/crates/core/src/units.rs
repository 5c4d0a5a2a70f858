//! Physical constants and unit-suffixed quantity parsing.
//!
//! Frequencies written in Hz (or kHz, MHz, GHz) are linear frequencies and are
//! converted to angular frequency by a factor of 2π. Relaxation rates are plain
//! s⁻¹ and are never scaled by 2π. All internal values are SI: rad s⁻¹, s⁻¹,
//! s, T, K, with lengths kept in ångström.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Reduced Planck constant (J s), CODATA 2018.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant (J K⁻¹), CODATA 2018.
pub const K_B: f64 = 1.380_649e-23;
/// μ0 / 4π (T m A⁻¹), CODATA 2018.
pub const MU0_OVER_4PI: f64 = 1.000_000_000_55e-7;
/// Free-electron gyromagnetic ratio magnitude (rad s⁻¹ T⁻¹), CODATA 2018.
pub const GAMMA_ELECTRON: f64 = 1.760_859_630_23e11;
/// Proton gyromagnetic ratio (rad s⁻¹ T⁻¹), CODATA 2018.
pub const GAMMA_PROTON: f64 = 2.675_221_874_4e8;
/// ¹³C gyromagnetic ratio (rad s⁻¹ T⁻¹).
pub const GAMMA_CARBON13: f64 = 6.728_284e7;

pub const ANGSTROM: f64 = 1e-10;

/// Human-readable statement of the unit convention, recorded in run manifests.
pub const UNIT_CONVENTION: &str = "frequencies quoted in Hz/kHz/MHz/GHz are linear and \
multiplied by 2*pi to give rad/s; relaxation rates are plain s^-1; lengths in angstrom";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantityKind {
    /// Angular frequency, rad s⁻¹.
    Frequency,
    /// Relaxation rate, s⁻¹.
    Rate,
    Time,
    Field,
    Temperature,
    Length,
}

impl QuantityKind {
    fn name(self) -> &'static str {
        match self {
            QuantityKind::Frequency => "frequency",
            QuantityKind::Rate => "rate",
            QuantityKind::Time => "time",
            QuantityKind::Field => "magnetic field",
            QuantityKind::Temperature => "temperature",
            QuantityKind::Length => "length",
        }
    }

    fn scale(self, unit: &str) -> Option<f64> {
        let u = unit.trim();
        let s = match self {
            QuantityKind::Frequency => match u {
                "Hz" => 2.0 * PI,
                "kHz" => 2.0 * PI * 1e3,
                "MHz" => 2.0 * PI * 1e6,
                "GHz" => 2.0 * PI * 1e9,
                "rad/s" | "rad s^-1" => 1.0,
                _ => return None,
            },
            QuantityKind::Rate => match u {
                "s^-1" | "/s" | "1/s" => 1.0,
                "ms^-1" | "/ms" => 1e3,
                _ => return None,
            },
            QuantityKind::Time => match u {
                "s" => 1.0,
                "ms" => 1e-3,
                "us" | "µs" | "μs" => 1e-6,
                "ns" => 1e-9,
                "min" => 60.0,
                "h" => 3600.0,
                _ => return None,
            },
            QuantityKind::Field => match u {
                "T" => 1.0,
                "mT" => 1e-3,
                _ => return None,
            },
            QuantityKind::Temperature => match u {
                "K" => 1.0,
                "mK" => 1e-3,
                _ => return None,
            },
            QuantityKind::Length => match u {
                "A" | "Å" | "angstrom" => 1.0,
                "nm" => 10.0,
                _ => return None,
            },
        };
        Some(s)
    }
}

/// Parses `"<number> <unit>"` into the internal SI value for `kind`.
///
/// A missing unit is always an error so that Hz and rad s⁻¹ cannot be confused.
pub fn parse_quantity(text: &str, kind: QuantityKind) -> Result<f64> {
    let t = text.trim();
    let split = t
        .find(|c: char| c.is_whitespace())
        .or_else(|| t.find(|c: char| c.is_alphabetic() || c == '/' || c == 'µ' || c == 'Å'))
        .ok_or_else(|| {
            Error::Schema(format!(
                "{} value {text:?} has no unit (e.g. \"100 kHz\")",
                kind.name()
            ))
        })?;
    // Exponent markers inside the number ("1e-3 s") are not unit starts.
    let split = exponent_aware_split(t, split);
    let (num, unit) = t.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| Error::Schema(format!("cannot parse number in {text:?}")))?;
    let scale = kind.scale(unit).ok_or_else(|| {
        Error::Schema(format!(
            "unknown {} unit {:?} in {text:?}",
            kind.name(),
            unit.trim()
        ))
    })?;
    if !value.is_finite() {
        return Err(Error::Schema(format!("non-finite value in {text:?}")));
    }
    Ok(value * scale)
}

fn exponent_aware_split(t: &str, first: usize) -> usize {
    let bytes = t.as_bytes();
    let mut i = first;
    // "1e5 s^-1" and "2.5E-3 s": an 'e'/'E' followed by a digit or sign belongs to the number.
    while i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let next = bytes.get(i + 1).copied();
        if matches!(next, Some(b'0'..=b'9') | Some(b'-') | Some(b'+')) {
            i += 2;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
        } else {
            break;
        }
    }
    t[i..]
        .find(|c: char| !(c.is_ascii_digit() || c == '.'))
        .map_or(t.len(), |j| i + j)
}

/// Formats an angular frequency back into the linear-Hz notation used in configs.
pub fn format_frequency(omega: f64) -> String {
    format!("{} Hz", omega / (2.0 * PI))
}

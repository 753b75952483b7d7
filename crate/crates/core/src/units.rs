//! Physical constants and unit conversions.
//!
//! Vibronic quantities live in meV, spin-Hamiltonian quantities in GHz.
//! Every conversion between the two goes through [`Energy`].

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 1 meV expressed in GHz.
pub const MEV_IN_GHZ: f64 = 241.798935;
/// 1 cm⁻¹ expressed in GHz (c = 299 792 458 m/s).
pub const WAVENUMBER_IN_GHZ: f64 = 29.979_245_8;
/// Bohr magneton in GHz/T.
pub const BOHR_MAGNETON_GHZ_PER_T: f64 = 13.996245;
/// Planck constant in J·s.
pub const PLANCK_J_S: f64 = 6.626_070_15e-34;
/// Planck constant in eV·s.
pub const PLANCK_EV_S: f64 = 4.135_667_696e-15;
/// Elementary charge in C.
pub const ELEMENTARY_CHARGE_C: f64 = 1.602_176_634e-19;
/// Gauss per tesla.
pub const GAUSS_PER_TESLA: f64 = 1.0e4;

#[derive(Debug, Error, PartialEq)]
pub enum UnitError {
    #[error("unknown unit `{0}`")]
    UnknownUnit(String),
    #[error("magnetic field must be non-negative, got {0} T")]
    NegativeField(f64),
    #[error("non-finite value {0}")]
    NonFinite(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EnergyUnit {
    #[serde(rename = "meV")]
    MilliElectronVolt,
    #[serde(rename = "GHz")]
    GigaHertz,
    #[serde(rename = "MHz")]
    MegaHertz,
    #[serde(rename = "cm-1")]
    Wavenumber,
}

impl EnergyUnit {
    pub const ALL: [EnergyUnit; 4] = [
        EnergyUnit::MilliElectronVolt,
        EnergyUnit::GigaHertz,
        EnergyUnit::MegaHertz,
        EnergyUnit::Wavenumber,
    ];

    /// Size of one unit in GHz.
    fn in_ghz(self) -> f64 {
        match self {
            EnergyUnit::MilliElectronVolt => MEV_IN_GHZ,
            EnergyUnit::GigaHertz => 1.0,
            EnergyUnit::MegaHertz => 1.0e-3,
            EnergyUnit::Wavenumber => WAVENUMBER_IN_GHZ,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            EnergyUnit::MilliElectronVolt => "meV",
            EnergyUnit::GigaHertz => "GHz",
            EnergyUnit::MegaHertz => "MHz",
            EnergyUnit::Wavenumber => "cm-1",
        }
    }
}

impl std::str::FromStr for EnergyUnit {
    type Err = UnitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "meV" | "mev" => Ok(EnergyUnit::MilliElectronVolt),
            "GHz" | "ghz" => Ok(EnergyUnit::GigaHertz),
            "MHz" | "mhz" => Ok(EnergyUnit::MegaHertz),
            "cm-1" | "cm^-1" | "cm⁻¹" => Ok(EnergyUnit::Wavenumber),
            other => Err(UnitError::UnknownUnit(other.to_string())),
        }
    }
}

impl fmt::Display for EnergyUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// An energy (or frequency-equivalent) value tagged with its unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Energy {
    pub value: f64,
    pub unit: EnergyUnit,
}

impl Energy {
    pub const fn new(value: f64, unit: EnergyUnit) -> Self {
        Self { value, unit }
    }

    pub const fn mev(value: f64) -> Self {
        Self::new(value, EnergyUnit::MilliElectronVolt)
    }

    pub const fn ghz(value: f64) -> Self {
        Self::new(value, EnergyUnit::GigaHertz)
    }

    pub const fn mhz(value: f64) -> Self {
        Self::new(value, EnergyUnit::MegaHertz)
    }

    pub fn to(self, target: EnergyUnit) -> Energy {
        convert_energy(self, target)
    }

    pub fn value_in(self, target: EnergyUnit) -> f64 {
        convert_energy(self, target).value
    }
}

impl fmt::Display for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.value, self.unit)
    }
}

pub fn convert_energy(e: Energy, target: EnergyUnit) -> Energy {
    if e.unit == target {
        return e;
    }
    let value = e.value * (e.unit.in_ghz() / target.in_ghz());
    Energy::new(value, target)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldUnit {
    #[serde(rename = "T")]
    Tesla,
    #[serde(rename = "G")]
    Gauss,
}

/// Magnetic field magnitude, stored in the unit it was given in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagneticField {
    pub value: f64,
    pub unit: FieldUnit,
}

impl MagneticField {
    pub const fn tesla(value: f64) -> Self {
        Self {
            value,
            unit: FieldUnit::Tesla,
        }
    }

    pub const fn gauss(value: f64) -> Self {
        Self {
            value,
            unit: FieldUnit::Gauss,
        }
    }

    pub const fn zero() -> Self {
        Self::tesla(0.0)
    }

    pub fn as_tesla(self) -> f64 {
        match self.unit {
            FieldUnit::Tesla => self.value,
            FieldUnit::Gauss => self.value / GAUSS_PER_TESLA,
        }
    }

    pub fn as_gauss(self) -> f64 {
        match self.unit {
            FieldUnit::Tesla => self.value * GAUSS_PER_TESLA,
            FieldUnit::Gauss => self.value,
        }
    }
}

/// Electron Zeeman splitting g·μ_B·B, returned in GHz.
pub fn zeeman_splitting(g: f64, b: MagneticField) -> Result<Energy, UnitError> {
    let tesla = b.as_tesla();
    if !tesla.is_finite() {
        return Err(UnitError::NonFinite(tesla));
    }
    if tesla < 0.0 {
        return Err(UnitError::NegativeField(tesla));
    }
    Ok(Energy::ghz(g * BOHR_MAGNETON_GHZ_PER_T * tesla))
}

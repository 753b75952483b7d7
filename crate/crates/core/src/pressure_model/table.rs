//! Per-defect parameter tables: loading, canonicalization and validation.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PressureError;
use crate::jt_vibronic::JTParams;
use crate::spin_hamiltonian::{EffectiveHF, NuclearSpin, QuadrupoleParams};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Defect {
    SiV,
    GeV,
    SnV,
    PbV,
}

impl Defect {
    pub const ALL: [Defect; 4] = [Defect::SiV, Defect::GeV, Defect::SnV, Defect::PbV];

    pub fn name(self) -> &'static str {
        match self {
            Defect::SiV => "SiV",
            Defect::GeV => "GeV",
            Defect::SnV => "SnV",
            Defect::PbV => "PbV",
        }
    }

    /// Stem of the shipped data file, e.g. `siv`.
    pub fn file_stem(self) -> &'static str {
        match self {
            Defect::SiV => "siv",
            Defect::GeV => "gev",
            Defect::SnV => "snv",
            Defect::PbV => "pbv",
        }
    }
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Defect {
    type Err = PressureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Defect::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| PressureError::UnknownDefect(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElectronicState {
    Ground,
    Excited,
}

impl ElectronicState {
    pub fn name(self) -> &'static str {
        match self {
            ElectronicState::Ground => "ground",
            ElectronicState::Excited => "excited",
        }
    }

    /// Suffix used in observable names: `g` or `u`.
    pub fn suffix(self) -> &'static str {
        match self {
            ElectronicState::Ground => "g",
            ElectronicState::Excited => "u",
        }
    }
}

impl FromStr for ElectronicState {
    type Err = PressureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ground" | "g" => Ok(ElectronicState::Ground),
            "excited" | "u" => Ok(ElectronicState::Excited),
            _ => Err(PressureError::Schema(format!(
                "unknown electronic state {s:?}"
            ))),
        }
    }
}

/// One tabulated pressure row. Energies in meV, λ in GHz, distances in Å.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PressurePoint {
    pub pressure: f64,
    pub e_jt: f64,
    pub delta_jt: f64,
    pub hbar_omega: f64,
    pub p_factor: f64,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d2: Option<f64>,
    /// Named hyperfine values in MHz.
    #[serde(default, skip_serializing_if = "std::collections::BTreeMap::is_empty")]
    pub hyperfine: std::collections::BTreeMap<String, f64>,
}

impl PressurePoint {
    pub fn jt_params(&self) -> Result<JTParams, crate::jt_vibronic::JtError> {
        JTParams::new(self.e_jt, self.delta_jt, self.hbar_omega)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateTable {
    pub points: Vec<PressurePoint>,
}

/// Hyperfine and quadrupole couplings of one isotope in one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsotopeState {
    pub a_par: f64,
    pub a_perp: f64,
    pub a1: f64,
    pub a2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrupole: Option<QuadrupoleParams>,
}

impl IsotopeState {
    pub fn effective_hf(&self) -> EffectiveHF {
        EffectiveHF::new(self.a_par, self.a_perp, self.a1, self.a2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Isotope {
    /// Mass number and symbol, e.g. `29Si`.
    pub name: String,
    pub nuclear_spin: NuclearSpin,
    #[serde(default = "default_g")]
    pub g_factor: f64,
    pub ground: IsotopeState,
    pub excited: IsotopeState,
}

fn default_g() -> f64 {
    2.0
}

impl Isotope {
    pub fn state(&self, s: ElectronicState) -> &IsotopeState {
        match s {
            ElectronicState::Ground => &self.ground,
            ElectronicState::Excited => &self.excited,
        }
    }
}

/// A user-digitized observable, `(pressure GPa, value)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DigitizedCurve {
    pub observable: String,
    pub unit: String,
    #[serde(default)]
    pub points: Vec<[f64; 2]>,
}

/// Illustrative ZPL and photoionization-threshold curves in eV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhotostabilityDemo {
    pub illustrative: bool,
    #[serde(default)]
    pub note: String,
    pub zpl_ev: Vec<[f64; 2]>,
    pub threshold_ev: Vec<[f64; 2]>,
}

/// A change made while canonicalizing a table on load.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Correction {
    pub state: ElectronicState,
    pub pressure: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefectParamTable {
    pub schema_version: u32,
    pub defect: Defect,
    #[serde(default)]
    pub description: String,
    pub ground: StateTable,
    pub excited: StateTable,
    #[serde(default)]
    pub isotopes: Vec<Isotope>,
    #[serde(default)]
    pub hyperfine_curves: Vec<DigitizedCurve>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub photostability_demo: Option<PhotostabilityDemo>,
    #[serde(skip)]
    pub corrections: Vec<Correction>,
}

fn invalid(
    state: ElectronicState,
    row: usize,
    field: &str,
    msg: impl fmt::Display,
) -> PressureError {
    PressureError::Validation(format!("{} row {row} field {field}: {msg}", state.name()))
}

/// Parses, canonicalizes and validates a table.
///
/// Rows whose barrier exceeds the phonon energy have those two columns
/// swapped; each swap is recorded in `corrections`.
pub fn parse_table(text: &str) -> Result<DefectParamTable, PressureError> {
    if text.trim().is_empty() {
        return Err(PressureError::Schema("empty document".into()));
    }
    let mut t: DefectParamTable =
        serde_json::from_str(text).map_err(|e| PressureError::Schema(e.to_string()))?;
    if t.schema_version != SCHEMA_VERSION {
        return Err(PressureError::Schema(format!(
            "schema_version {} is not supported (expected {SCHEMA_VERSION})",
            t.schema_version
        )));
    }
    t.canonicalize();
    t.validate()?;
    Ok(t)
}

pub fn load_table(path: &Path) -> Result<DefectParamTable, PressureError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| PressureError::Schema(format!("cannot read {}: {e}", path.display())))?;
    parse_table(&text)
}

impl DefectParamTable {
    pub fn state(&self, s: ElectronicState) -> &StateTable {
        match s {
            ElectronicState::Ground => &self.ground,
            ElectronicState::Excited => &self.excited,
        }
    }

    pub fn isotope(&self, name: &str) -> Option<&Isotope> {
        self.isotopes
            .iter()
            .find(|i| i.name.eq_ignore_ascii_case(name))
    }

    fn canonicalize(&mut self) {
        for state in [ElectronicState::Ground, ElectronicState::Excited] {
            let table = match state {
                ElectronicState::Ground => &mut self.ground,
                ElectronicState::Excited => &mut self.excited,
            };
            for p in &mut table.points {
                if p.delta_jt > p.hbar_omega {
                    self.corrections.push(Correction {
                        state,
                        pressure: p.pressure,
                        message: format!(
                            "swapped delta_jt {} and hbar_omega {} (barrier above phonon energy)",
                            p.delta_jt, p.hbar_omega
                        ),
                    });
                    std::mem::swap(&mut p.delta_jt, &mut p.hbar_omega);
                }
            }
        }
    }

    pub fn validate(&self) -> Result<(), PressureError> {
        for state in [ElectronicState::Ground, ElectronicState::Excited] {
            let points = &self.state(state).points;
            if points.len() < 2 {
                return Err(PressureError::Validation(format!(
                    "{} state needs at least 2 pressure points, got {}",
                    state.name(),
                    points.len()
                )));
            }
            for (k, p) in points.iter().enumerate() {
                for (field, v) in [
                    ("pressure", p.pressure),
                    ("e_jt", p.e_jt),
                    ("delta_jt", p.delta_jt),
                    ("hbar_omega", p.hbar_omega),
                    ("p_factor", p.p_factor),
                    ("lambda", p.lambda),
                ] {
                    if !v.is_finite() {
                        return Err(invalid(state, k, field, "not finite"));
                    }
                }
                if k > 0 && p.pressure <= points[k - 1].pressure {
                    return Err(invalid(
                        state,
                        k,
                        "pressure",
                        "pressures must be strictly increasing",
                    ));
                }
                p.jt_params()
                    .map_err(|e| invalid(state, k, "e_jt/delta_jt/hbar_omega", e))?;
                if !(p.p_factor > 0.0 && p.p_factor <= 1.0) {
                    return Err(invalid(
                        state,
                        k,
                        "p_factor",
                        format!("{} outside (0, 1]", p.p_factor),
                    ));
                }
                if p.lambda < 0.0 {
                    return Err(invalid(state, k, "lambda", "must be non-negative"));
                }
                for (field, v) in [("d1", p.d1), ("d2", p.d2)] {
                    if let Some(v) = v {
                        if !(v.is_finite() && v > 0.0) {
                            return Err(invalid(state, k, field, "must be a positive distance"));
                        }
                    }
                }
                if let Some((name, _)) = p.hyperfine.iter().find(|(_, v)| !v.is_finite()) {
                    return Err(invalid(
                        state,
                        k,
                        &format!("hyperfine.{name}"),
                        "not finite",
                    ));
                }
            }
        }
        for iso in &self.isotopes {
            for s in [&iso.ground, &iso.excited] {
                if ![s.a_par, s.a_perp, s.a1, s.a2]
                    .iter()
                    .all(|v| v.is_finite())
                {
                    return Err(PressureError::Validation(format!(
                        "isotope {}: non-finite hyperfine value",
                        iso.name
                    )));
                }
                if s.quadrupole.is_some() && iso.nuclear_spin.twice() < 2 {
                    return Err(PressureError::Validation(format!(
                        "isotope {}: quadrupole given for I < 1",
                        iso.name
                    )));
                }
            }
        }
        for c in &self.hyperfine_curves {
            check_digitized(&c.observable, &c.points)?;
        }
        if let Some(d) = &self.photostability_demo {
            check_digitized("zpl_ev", &d.zpl_ev)?;
            check_digitized("threshold_ev", &d.threshold_ev)?;
        }
        Ok(())
    }
}

fn check_digitized(name: &str, pts: &[[f64; 2]]) -> Result<(), PressureError> {
    for (k, p) in pts.iter().enumerate() {
        if !(p[0].is_finite() && p[1].is_finite()) {
            return Err(PressureError::Validation(format!(
                "curve {name} point {k}: not finite"
            )));
        }
        if k > 0 && p[0] <= pts[k - 1][0] {
            return Err(PressureError::Validation(format!(
                "curve {name} point {k}: pressures must be strictly increasing"
            )));
        }
    }
    Ok(())
}

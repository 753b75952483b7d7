//! Pressure dependence of tabulated defect parameters, calibration and
//! photostability windows.

mod curve;
mod table;

use serde::Serialize;
use thiserror::Error;

pub use curve::{InterpolationMode, PressureCurve, EXTRAPOLATION_MARGIN};
pub use table::{
    load_table, parse_table, Correction, Defect, DefectParamTable, DigitizedCurve, ElectronicState,
    Isotope, IsotopeState, PhotostabilityDemo, PressurePoint, StateTable, SCHEMA_VERSION,
};

use crate::csv::{self, Cell};

/// Root-finding tolerance in GPa.
pub const CALIBRATION_TOL_GPA: f64 = 1e-9;

/// Grid points used to bracket the first crossing in `photostability_limit`.
const CROSSING_SCAN_STEPS: usize = 4096;

/// Distance from a range end, in GPa, within which a crossing is flagged as boundary.
pub const BOUNDARY_TOL_GPA: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PressureError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("unknown defect {0:?}")]
    UnknownDefect(String),
    #[error("unknown observable {0:?}")]
    UnknownObservable(String),
    #[error("observable {0:?} has no tabulated data")]
    NoData(String),
    #[error("at least {needed} points are required, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("quadratic fit is rank deficient (pressures not distinct enough)")]
    RankDeficient,
    #[error("pressure {pressure} GPa outside the allowed range [{lo}, {hi}] GPa")]
    OutOfRange { pressure: f64, lo: f64, hi: f64 },
    #[error("value {value} outside the curve range [{lo}, {hi}]")]
    ValueOutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("curve {0:?} is not strictly monotonic on its data range")]
    NonMonotonic(String),
    #[error("curves share no pressure range")]
    NoOverlap,
}

impl PressureError {
    /// Errors caused by a pressure or value outside the supported range.
    pub fn is_range_error(&self) -> bool {
        matches!(
            self,
            PressureError::OutOfRange { .. } | PressureError::ValueOutOfRange { .. }
        )
    }
}

/// Fields of a pressure row that can be turned into a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowField {
    EJt,
    DeltaJt,
    HbarOmega,
    PFactor,
    Lambda,
    D1,
    D2,
}

impl RowField {
    pub const ALL: [RowField; 7] = [
        RowField::EJt,
        RowField::DeltaJt,
        RowField::HbarOmega,
        RowField::PFactor,
        RowField::Lambda,
        RowField::D1,
        RowField::D2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RowField::EJt => "e_jt",
            RowField::DeltaJt => "delta_jt",
            RowField::HbarOmega => "hbar_omega",
            RowField::PFactor => "p",
            RowField::Lambda => "lambda",
            RowField::D1 => "d1",
            RowField::D2 => "d2",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            RowField::EJt | RowField::DeltaJt | RowField::HbarOmega => "meV",
            RowField::PFactor => "",
            RowField::Lambda => "GHz",
            RowField::D1 | RowField::D2 => "A",
        }
    }

    pub fn get(self, p: &PressurePoint) -> Option<f64> {
        match self {
            RowField::EJt => Some(p.e_jt),
            RowField::DeltaJt => Some(p.delta_jt),
            RowField::HbarOmega => Some(p.hbar_omega),
            RowField::PFactor => Some(p.p_factor),
            RowField::Lambda => Some(p.lambda),
            RowField::D1 => p.d1,
            RowField::D2 => p.d2,
        }
    }
}

/// Tabulated series `(P, value)` and unit for an observable name.
///
/// Names are `<field>_<g|u>` for row fields (`lambda_g`, `e_jt_u`, `d1_g`),
/// `zpl_sum` for λ_g + λ_u in GHz, or the name of a digitized curve.
pub fn series(
    table: &DefectParamTable,
    name: &str,
) -> Result<(Vec<(f64, f64)>, String), PressureError> {
    if name == "zpl_sum" {
        let g = &table.ground.points;
        let u = &table.excited.points;
        let mut out = Vec::new();
        for pg in g {
            if let Some(pu) = u.iter().find(|pu| pu.pressure == pg.pressure) {
                out.push((pg.pressure, pg.lambda + pu.lambda));
            }
        }
        return non_empty(name, out, "GHz".into());
    }
    for state in [ElectronicState::Ground, ElectronicState::Excited] {
        for field in RowField::ALL {
            if name == format!("{}_{}", field.name(), state.suffix()) {
                let pts = table
                    .state(state)
                    .points
                    .iter()
                    .filter_map(|p| field.get(p).map(|v| (p.pressure, v)))
                    .collect();
                return non_empty(name, pts, field.unit().into());
            }
        }
    }
    if let Some(c) = table.hyperfine_curves.iter().find(|c| c.observable == name) {
        let pts = c.points.iter().map(|p| (p[0], p[1])).collect();
        return non_empty(name, pts, c.unit.clone());
    }
    Err(PressureError::UnknownObservable(name.to_string()))
}

fn non_empty(
    name: &str,
    pts: Vec<(f64, f64)>,
    unit: String,
) -> Result<(Vec<(f64, f64)>, String), PressureError> {
    if pts.is_empty() {
        Err(PressureError::NoData(name.to_string()))
    } else {
        Ok((pts, unit))
    }
}

/// Curve of a named observable in the requested mode.
pub fn observable_curve(
    table: &DefectParamTable,
    name: &str,
    mode: InterpolationMode,
) -> Result<PressureCurve, PressureError> {
    let (pts, unit) = series(table, name)?;
    PressureCurve::build(mode, name, unit, &pts)
}

pub fn fit_quadratic(points: &[(f64, f64)]) -> Result<PressureCurve, PressureError> {
    PressureCurve::fit_quadratic("y", "", points)
}

pub fn evaluate(curve: &PressureCurve, p: f64) -> Result<f64, PressureError> {
    curve.evaluate(p)
}

/// Pressure and its residual-based uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub pressure: f64,
    /// rms fit residual divided by |dy/dP| at the solution, GPa.
    pub uncertainty: f64,
}

/// Inverts a monotonic curve on its data range [p_min, p_max].
pub fn calibrate(curve: &PressureCurve, measured: f64) -> Result<f64, PressureError> {
    calibrate_with_uncertainty(curve, measured).map(|c| c.pressure)
}

pub fn calibrate_with_uncertainty(
    curve: &PressureCurve,
    measured: f64,
) -> Result<Calibration, PressureError> {
    if !measured.is_finite() {
        return Err(PressureError::Validation(
            "measured value is not finite".into(),
        ));
    }
    let dir = curve
        .monotonic_direction()
        .ok_or_else(|| PressureError::NonMonotonic(curve.observable.clone()))?;
    let (a, b) = (curve.p_min, curve.p_max);
    let (ya, yb) = (curve.value_unchecked(a), curve.value_unchecked(b));
    let (vlo, vhi) = if dir > 0 { (ya, yb) } else { (yb, ya) };
    if !(measured >= vlo && measured <= vhi) {
        return Err(PressureError::ValueOutOfRange {
            value: measured,
            lo: vlo,
            hi: vhi,
        });
    }
    let pressure = if measured == ya {
        a
    } else if measured == yb {
        b
    } else {
        bisect(
            |p| curve.value_unchecked(p) - measured,
            a,
            b,
            CALIBRATION_TOL_GPA,
        )
    };
    let slope = curve.slope(pressure).abs();
    let uncertainty = if slope > 0.0 {
        curve.rms_residual / slope
    } else {
        f64::INFINITY
    };
    Ok(Calibration {
        pressure,
        uncertainty,
    })
}

/// Root of `f` on [a, b] where f(a) and f(b) differ in sign (or one is zero).
fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    if fa == 0.0 {
        return a;
    }
    if f(b) == 0.0 {
        return b;
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub pressure: f64,
    /// The crossing sits at an end of the shared range.
    pub at_boundary: bool,
}

/// Smallest P in the shared data range where `zpl(P) ≥ threshold(P)`.
pub fn photostability_limit(
    zpl: &PressureCurve,
    threshold: &PressureCurve,
) -> Result<Option<Crossing>, PressureError> {
    let lo = zpl.p_min.max(threshold.p_min);
    let hi = zpl.p_max.min(threshold.p_max);
    if hi.partial_cmp(&lo).is_none_or(|o| o.is_lt()) {
        return Err(PressureError::NoOverlap);
    }
    let d = |p: f64| zpl.value_unchecked(p) - threshold.value_unchecked(p);
    let flag = |p: f64| Crossing {
        pressure: p,
        at_boundary: (p - lo).abs() <= BOUNDARY_TOL_GPA || (hi - p).abs() <= BOUNDARY_TOL_GPA,
    };
    if d(lo) >= 0.0 {
        return Ok(Some(flag(lo)));
    }
    let step = (hi - lo) / CROSSING_SCAN_STEPS as f64;
    let mut a = lo;
    for k in 1..=CROSSING_SCAN_STEPS {
        let b = if k == CROSSING_SCAN_STEPS {
            hi
        } else {
            lo + k as f64 * step
        };
        if d(b) >= 0.0 {
            let root = bisect(d, a, b, CALIBRATION_TOL_GPA);
            return Ok(Some(flag(root)));
        }
        a = b;
    }
    Ok(None)
}

/// Interpolated parameters of one electronic state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateSnapshot {
    pub e_jt: f64,
    pub delta_jt: f64,
    pub hbar_omega: f64,
    pub p_factor: f64,
    pub lambda_ghz: f64,
    pub d1: Option<f64>,
    pub d2: Option<f64>,
}

impl StateSnapshot {
    pub fn jt_params(&self) -> Result<crate::jt_vibronic::JTParams, crate::jt_vibronic::JtError> {
        crate::jt_vibronic::JTParams::new(self.e_jt, self.delta_jt, self.hbar_omega)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableReport {
    pub defect: Defect,
    pub pressure: f64,
    pub mode: InterpolationMode,
    /// True when `pressure` is a tabulated grid point and the stored row is returned.
    pub grid_point: bool,
    pub ground: StateSnapshot,
    pub excited: StateSnapshot,
}

/// Parameters of both states at pressure `p`.
///
/// At a tabulated pressure the stored row is returned unchanged; elsewhere
/// each field is interpolated in `mode`. Structural distances with fewer
/// than three points are interpolated linearly.
pub fn observable_report(
    table: &DefectParamTable,
    p: f64,
    mode: InterpolationMode,
) -> Result<ObservableReport, PressureError> {
    let ground = state_snapshot(table, ElectronicState::Ground, p, mode)?;
    let excited = state_snapshot(table, ElectronicState::Excited, p, mode)?;
    let grid_point = [ElectronicState::Ground, ElectronicState::Excited]
        .iter()
        .all(|&s| table.state(s).points.iter().any(|r| r.pressure == p));
    Ok(ObservableReport {
        defect: table.defect,
        pressure: p,
        mode,
        grid_point,
        ground,
        excited,
    })
}

fn state_snapshot(
    table: &DefectParamTable,
    state: ElectronicState,
    p: f64,
    mode: InterpolationMode,
) -> Result<StateSnapshot, PressureError> {
    let points = &table.state(state).points;
    let value = |field: RowField| -> Result<Option<f64>, PressureError> {
        if let Some(row) = points.iter().find(|r| r.pressure == p) {
            if let Some(v) = field.get(row) {
                return Ok(Some(v));
            }
        }
        let pts: Vec<(f64, f64)> = points
            .iter()
            .filter_map(|r| field.get(r).map(|v| (r.pressure, v)))
            .collect();
        if pts.len() < 2 {
            return Ok(None);
        }
        let curve = PressureCurve::build(mode, field.name(), field.unit(), &pts)?;
        // the range check always refers to the full pressure grid
        let full = PressureCurve::build(
            InterpolationMode::PiecewiseLinear,
            "grid",
            "",
            &points.iter().map(|r| (r.pressure, 0.0)).collect::<Vec<_>>(),
        )?;
        full.evaluate(p)?;
        Ok(Some(curve.value_unchecked(p)))
    };
    let required = |field: RowField| -> Result<f64, PressureError> {
        value(field)?.ok_or_else(|| PressureError::NoData(field.name().into()))
    };
    Ok(StateSnapshot {
        e_jt: required(RowField::EJt)?,
        delta_jt: required(RowField::DeltaJt)?,
        hbar_omega: required(RowField::HbarOmega)?,
        p_factor: required(RowField::PFactor)?,
        lambda_ghz: required(RowField::Lambda)?,
        d1: value(RowField::D1)?,
        d2: value(RowField::D2)?,
    })
}

impl ObservableReport {
    /// One row per state: state, E_JT, δ_JT, ħω, p, λ, d1, d2.
    pub fn to_csv(&self) -> String {
        let row = |name: &str, s: &StateSnapshot| {
            let opt = |v: Option<f64>| v.map(Cell::from).unwrap_or_else(|| Cell::from(""));
            vec![
                Cell::from(name),
                Cell::from(s.e_jt),
                Cell::from(s.delta_jt),
                Cell::from(s.hbar_omega),
                Cell::from(s.p_factor),
                Cell::from(s.lambda_ghz),
                opt(s.d1),
                opt(s.d2),
            ]
        };
        csv::render(
            &[
                "state",
                "e_jt_meV",
                "delta_jt_meV",
                "hbar_omega_meV",
                "p",
                "lambda_GHz",
                "d1_A",
                "d2_A",
            ],
            &[row("ground", &self.ground), row("excited", &self.excited)],
        )
    }
}

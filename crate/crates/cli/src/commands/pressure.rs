//! `calibrate`, `curve` and `photostability`.

use std::path::PathBuf;

use clap::Args;
use g4v_core::csv::{self, Cell};
use g4v_core::pressure_model::{
    calibrate_with_uncertainty, observable_curve, photostability_limit, PressureCurve,
};
use g4v_core::units::{Energy, EnergyUnit};

use super::spin::Mode;
use crate::data::load_table;
use crate::error::CliError;
use crate::output::Run;

/// Observables accepted by `calibrate`.
pub const CALIBRATION_OBSERVABLES: [&str; 4] = ["lambda_g", "lambda_u", "a_ple", "zpl_sum"];

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub defect: Option<String>,
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// lambda_g, lambda_u, a_ple or zpl_sum.
    #[arg(long)]
    pub observable: String,
    /// Measured value.
    #[arg(long, allow_negative_numbers = true)]
    pub value: f64,
    /// Unit of --value (GHz, MHz, meV, cm-1); defaults to the curve's unit.
    #[arg(long)]
    pub unit: Option<String>,
    #[arg(long, value_enum, default_value = "quadratic")]
    pub mode: Mode,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// `value` expressed in the curve's unit.
fn to_curve_unit(value: f64, unit: Option<&str>, curve: &PressureCurve) -> Result<f64, CliError> {
    let Some(u) = unit else { return Ok(value) };
    if u == curve.unit {
        return Ok(value);
    }
    let from: EnergyUnit = u.parse()?;
    let to: EnergyUnit = curve.unit.parse().map_err(|_| {
        CliError::Validation(format!(
            "curve {} is in {:?}; cannot convert from {u}",
            curve.observable, curve.unit
        ))
    })?;
    Ok(Energy::new(value, from).value_in(to))
}

pub fn run_calibrate(a: &CalibrateArgs) -> Result<String, CliError> {
    if !CALIBRATION_OBSERVABLES.contains(&a.observable.as_str()) {
        return Err(CliError::Validation(format!(
            "observable must be one of {CALIBRATION_OBSERVABLES:?}, got {:?}",
            a.observable
        )));
    }
    let mut run = Run::new("calibrate");
    let table = load_table(&mut run, a.defect.as_deref(), a.table.as_deref())?;
    let curve = observable_curve(&table, &a.observable, a.mode.into())?;
    let value = to_curve_unit(a.value, a.unit.as_deref(), &curve)?;
    let cal = calibrate_with_uncertainty(&curve, value)?;
    run.arg("defect", table.defect.name());
    run.arg("observable", &a.observable);
    run.arg("value", a.value);
    run.arg("unit", a.unit.as_deref().unwrap_or(&curve.unit));
    run.arg("mode", curve.mode);
    let text = csv::render(
        &[
            "observable",
            "value",
            "unit",
            "pressure_GPa",
            "uncertainty_GPa",
        ],
        &[vec![
            Cell::from(a.observable.as_str()),
            Cell::from(value),
            Cell::from(curve.unit.as_str()),
            Cell::from(cal.pressure),
            Cell::from(cal.uncertainty),
        ]],
    );
    run.output(a.out.as_deref(), text.clone());
    run.finish()?;
    Ok(text)
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long)]
    pub defect: Option<String>,
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Observable name, e.g. lambda_g, e_jt_u, d1_g, zpl_sum.
    #[arg(long)]
    pub observable: String,
    /// Comma-separated pressures in GPa; defaults to 0..180 in steps of 10.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub grid: Vec<f64>,
    #[arg(long, value_enum, default_value = "quadratic")]
    pub mode: Mode,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_curve(a: &CurveArgs) -> Result<String, CliError> {
    let mut run = Run::new("curve");
    let table = load_table(&mut run, a.defect.as_deref(), a.table.as_deref())?;
    let curve = observable_curve(&table, &a.observable, a.mode.into())?;
    let grid: Vec<f64> = if a.grid.is_empty() {
        (0..=18).map(|k| 10.0 * k as f64).collect()
    } else {
        a.grid.clone()
    };
    let text = curve.to_csv(&grid)?;
    run.arg("defect", table.defect.name());
    run.arg("observable", &a.observable);
    run.arg("grid_GPa", &grid);
    run.arg("mode", curve.mode);
    run.arg("coefficients", curve.coefficients);
    run.arg("rms_residual", curve.rms_residual);
    run.arg("constrained", curve.constrained);
    run.output(a.out.as_deref(), text.clone());
    run.finish()?;
    Ok(text)
}

#[derive(Debug, Args)]
pub struct PhotostabilityArgs {
    #[arg(long)]
    pub defect: Option<String>,
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "quadratic")]
    pub mode: Mode,
}

pub fn run_photostability(a: &PhotostabilityArgs) -> Result<String, CliError> {
    let mut run = Run::new("photostability");
    let table = load_table(&mut run, a.defect.as_deref(), a.table.as_deref())?;
    let demo = table.photostability_demo.as_ref().ok_or_else(|| {
        CliError::Validation(format!("{} has no ZPL/threshold curves", table.defect))
    })?;
    let pts = |v: &[[f64; 2]]| v.iter().map(|p| (p[0], p[1])).collect::<Vec<_>>();
    let zpl = PressureCurve::build(a.mode.into(), "zpl", "eV", &pts(&demo.zpl_ev))?;
    let thr = PressureCurve::build(a.mode.into(), "threshold", "eV", &pts(&demo.threshold_ev))?;
    let crossing = photostability_limit(&zpl, &thr)?;
    let (p, edge) = match crossing {
        Some(c) => (
            Cell::from(c.pressure),
            Cell::from(if c.at_boundary { "yes" } else { "no" }),
        ),
        None => (Cell::from("none"), Cell::from("")),
    };
    let illustrative = Cell::from(if demo.illustrative { "yes" } else { "no" });
    Ok(csv::render(
        &["defect", "limit_GPa", "at_boundary", "illustrative"],
        &[vec![Cell::from(table.defect.name()), p, edge, illustrative]],
    ))
}

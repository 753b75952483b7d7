//! `levels` and `spectrum`: tabulated parameters at a pressure, fed through
//! the vibronic and spin models.

use std::path::PathBuf;

use clap::Args;
use g4v_core::csv::{self, Cell};
use g4v_core::jt_vibronic::{ham_factor_q, ham_factors, DEFAULT_CUTOFF};
use g4v_core::pressure_model::{
    observable_report, DefectParamTable, ElectronicState, InterpolationMode, ObservableReport,
};
use g4v_core::spin_hamiltonian::{
    assemble, levels, ple_lines_csv, ple_lines_grouped, LevelSet, SpinSystemSpec, TermToggles,
};
use g4v_core::units::{Energy, MagneticField};

use crate::data::load_table;
use crate::error::CliError;
use crate::output::Run;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FieldUnit {
    #[value(name = "G")]
    Gauss,
    #[value(name = "T")]
    Tesla,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Quadratic,
    Linear,
}

impl From<Mode> for InterpolationMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Quadratic => InterpolationMode::Quadratic,
            Mode::Linear => InterpolationMode::PiecewiseLinear,
        }
    }
}

#[derive(Debug, Args)]
pub struct SystemArgs {
    /// SiV, GeV, SnV or PbV, read from the data directory.
    #[arg(long)]
    pub defect: Option<String>,
    /// Parameter file to use instead of the shipped one.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Hydrostatic pressure, GPa.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub pressure: f64,
    /// Isotope name from the parameter file (e.g. 29Si), or `none`.
    #[arg(long, default_value = "none")]
    pub isotope: String,
    /// Magnetic field along the defect axis.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub bfield: f64,
    #[arg(long, value_enum, default_value = "G")]
    pub bfield_unit: FieldUnit,
    /// Interpolation between tabulated pressures.
    #[arg(long, value_enum, default_value = "quadratic")]
    pub mode: Mode,
    /// Keep only the spin-orbit term (no Zeeman, no nuclear spin).
    #[arg(long)]
    pub soc_only: bool,
    /// Recompute p from the interpolated Jahn-Teller parameters and rescale λ.
    #[arg(long)]
    pub solve_vibronic: bool,
}

/// Spin system of one state plus the quantities it was built from.
pub struct StateSystem {
    pub spec: SpinSystemSpec,
    pub p: f64,
    pub q: f64,
    pub lambda_ghz: f64,
}

fn field(a: &SystemArgs) -> Result<MagneticField, CliError> {
    if !a.bfield.is_finite() {
        return Err(CliError::Validation(format!(
            "non-finite field {}",
            a.bfield
        )));
    }
    Ok(match a.bfield_unit {
        FieldUnit::Gauss => MagneticField::gauss(a.bfield),
        FieldUnit::Tesla => MagneticField::tesla(a.bfield),
    })
}

pub fn state_system(
    table: &DefectParamTable,
    report: &ObservableReport,
    state: ElectronicState,
    a: &SystemArgs,
) -> Result<StateSystem, CliError> {
    let snap = match state {
        ElectronicState::Ground => &report.ground,
        ElectronicState::Excited => &report.excited,
    };
    let (p, lambda_ghz) = if a.solve_vibronic {
        // λ₀ = λ/p from the table, rescaled by the recomputed p
        let (_, _, f) = ham_factors(&snap.jt_params()?, DEFAULT_CUTOFF)?;
        (f.p, snap.lambda_ghz / snap.p_factor * f.p)
    } else {
        (snap.p_factor, snap.lambda_ghz)
    };
    let q = ham_factor_q(p)?;
    let mut spec = SpinSystemSpec {
        b_field: field(a)?,
        ..SpinSystemSpec::soc_only(lambda_ghz)
    };
    if a.soc_only {
        spec.terms = TermToggles {
            soc: true,
            zeeman: false,
            static_hf: false,
            dynamic_hf: false,
            quadrupole: false,
            orbital_zeeman: None,
        };
    } else if !a.isotope.eq_ignore_ascii_case("none") {
        let iso = table.isotope(&a.isotope).ok_or_else(|| {
            let known: Vec<&str> = table.isotopes.iter().map(|i| i.name.as_str()).collect();
            CliError::Validation(format!(
                "unknown isotope {:?} for {} (known: {known:?})",
                a.isotope, table.defect
            ))
        })?;
        let s = iso.state(state);
        spec.nuclear_spin = iso.nuclear_spin;
        spec.g_factor = iso.g_factor;
        spec.hf = Some(s.effective_hf());
        spec.quad = s.quadrupole;
    }
    spec.validate()?;
    Ok(StateSystem {
        spec,
        p,
        q,
        lambda_ghz,
    })
}

fn report(run: &mut Run, a: &SystemArgs) -> Result<(DefectParamTable, ObservableReport), CliError> {
    let table = load_table(run, a.defect.as_deref(), a.table.as_deref())?;
    if !a.pressure.is_finite() {
        return Err(CliError::Validation(format!(
            "non-finite pressure {}",
            a.pressure
        )));
    }
    let r = observable_report(&table, a.pressure, a.mode.into())?;
    run.arg("defect", table.defect.name());
    run.arg("pressure_GPa", a.pressure);
    run.arg("isotope", &a.isotope);
    run.arg("bfield_T", field(a)?.as_tesla());
    run.arg("mode", r.mode);
    run.arg("soc_only", a.soc_only);
    run.arg("solve_vibronic", a.solve_vibronic);
    Ok((table, r))
}

fn level_set(sys: &StateSystem) -> Result<LevelSet, CliError> {
    Ok(levels(&assemble(&sys.spec)?.matrix)?)
}

fn summary_rows(rows: Vec<(&str, Cell)>) -> String {
    let rows: Vec<Vec<Cell>> = rows
        .into_iter()
        .map(|(k, v)| vec![Cell::from(k), v])
        .collect();
    csv::render(&["quantity", "value"], &rows)
}

#[derive(Debug, Args)]
pub struct LevelsArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, value_parser = parse_state, default_value = "ground")]
    pub state: ElectronicState,
    /// Level CSV destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optical line list (ground to excited) destination.
    #[arg(long)]
    pub ple_out: Option<PathBuf>,
}

fn parse_state(s: &str) -> Result<ElectronicState, String> {
    s.parse()
        .map_err(|e: g4v_core::pressure_model::PressureError| e.to_string())
}

pub fn run_levels(a: &LevelsArgs) -> Result<String, CliError> {
    let mut run = Run::new("levels");
    let (table, r) = report(&mut run, &a.system)?;
    run.arg("state", a.state.name());
    let sys = state_system(&table, &r, a.state, &a.system)?;
    let set = level_set(&sys)?;
    let level_csv = set.to_csv();
    let paired = set.degeneracy.iter().all(|d| d % 2 == 0);
    let width = set.energies.last().unwrap() - set.energies[0];
    let summary = summary_rows(vec![
        ("defect", Cell::from(table.defect.name())),
        ("state", Cell::from(a.state.name())),
        ("pressure_GPa", Cell::from(a.system.pressure)),
        ("lambda_GHz", Cell::from(sys.lambda_ghz)),
        ("p", Cell::from(sys.p)),
        ("q", Cell::from(sys.q)),
        ("nuclear_spin", Cell::from(sys.spec.nuclear_spin.value())),
        ("levels", Cell::from(set.len())),
        ("span_GHz", Cell::from(width)),
        (
            "kramers_paired",
            Cell::from(if paired { "yes" } else { "no" }),
        ),
    ]);
    if let Some(path) = &a.ple_out {
        let other = match a.state {
            ElectronicState::Ground => ElectronicState::Excited,
            ElectronicState::Excited => ElectronicState::Ground,
        };
        let other_set = level_set(&state_system(&table, &r, other, &a.system)?)?;
        let (g, u) = match a.state {
            ElectronicState::Ground => (&set, &other_set),
            ElectronicState::Excited => (&other_set, &set),
        };
        let lines = ple_lines_grouped(g, u, Energy::ghz(0.0))?;
        run.output(a.out.as_deref(), level_csv.clone());
        run.output(Some(path), ple_lines_csv(&lines));
    } else {
        run.output(a.out.as_deref(), level_csv.clone());
    }
    run.finish()?;
    Ok(match &a.out {
        Some(_) => summary,
        None => format!("{summary}\n{level_csv}"),
    })
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Position of the zero-phonon line, GHz; lines are reported relative to it.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub zpl_offset: f64,
    /// Line list CSV destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_spectrum(a: &SpectrumArgs) -> Result<String, CliError> {
    let mut run = Run::new("spectrum");
    let (table, r) = report(&mut run, &a.system)?;
    run.arg("zpl_offset_GHz", a.zpl_offset);
    let g = state_system(&table, &r, ElectronicState::Ground, &a.system)?;
    let u = state_system(&table, &r, ElectronicState::Excited, &a.system)?;
    let lines = ple_lines_grouped(&level_set(&g)?, &level_set(&u)?, Energy::ghz(a.zpl_offset))?;
    let text = ple_lines_csv(&lines);
    let span = match (lines.first(), lines.last()) {
        (Some(f), Some(l)) => l.offset_ghz - f.offset_ghz,
        _ => 0.0,
    };
    let summary = summary_rows(vec![
        ("defect", Cell::from(table.defect.name())),
        ("pressure_GPa", Cell::from(a.system.pressure)),
        ("lambda_g_GHz", Cell::from(g.lambda_ghz)),
        ("lambda_u_GHz", Cell::from(u.lambda_ghz)),
        ("lines", Cell::from(lines.len())),
        ("span_GHz", Cell::from(span)),
    ]);
    run.output(a.out.as_deref(), text.clone());
    run.finish()?;
    Ok(match &a.out {
        Some(_) => summary,
        None => format!("{summary}\n{text}"),
    })
}

//! `g4v`: vibronic, spin and pressure models of group-IV vacancy centers.
//!
//! Exit codes: 0 success, 1 I/O, 2 invalid input or schema, 3 solver did
//! not converge, 4 pressure or value out of range, 5 frame or symmetry
//! violation.

mod commands;
mod data;
mod error;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{hf, jt, pressure, spin};

#[derive(Debug, Parser)]
#[command(
    name = "g4v",
    version,
    about = "Group-IV vacancy center fine-structure models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the E⊗e Jahn-Teller problem and report Ham factors.
    JtSolve(jt::JtSolveArgs),
    /// Spin levels of one electronic state at a given pressure and field.
    Levels(spin::LevelsArgs),
    /// Decompose hyperfine tensors into static and orbital-flip parts.
    HfDecompose(hf::HfDecomposeArgs),
    /// Pressure from a measured observable.
    Calibrate(pressure::CalibrateArgs),
    /// Optical line positions relative to the zero-phonon line.
    Spectrum(spin::SpectrumArgs),
    /// Tabulated observable on a pressure grid.
    Curve(pressure::CurveArgs),
    /// Pressure at which the ZPL reaches the photoionization threshold.
    Photostability(pressure::PhotostabilityArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::JtSolve(a) => jt::run(a),
        Command::Levels(a) => spin::run_levels(a),
        Command::HfDecompose(a) => hf::run(a),
        Command::Calibrate(a) => pressure::run_calibrate(a),
        Command::Spectrum(a) => spin::run_spectrum(a),
        Command::Curve(a) => pressure::run_curve(a),
        Command::Photostability(a) => pressure::run_photostability(a),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

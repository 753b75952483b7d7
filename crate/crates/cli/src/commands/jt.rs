use std::path::PathBuf;

use clap::Args;
use g4v_core::csv::{self, Cell};
use g4v_core::jt_vibronic::{
    fit_couplings, ham_factor_p, ham_factor_q, solve, solve_auto, JTParams,
};

use crate::error::CliError;
use crate::output::Run;

#[derive(Debug, Args)]
pub struct JtSolveArgs {
    /// Jahn-Teller energy, meV.
    #[arg(long, allow_negative_numbers = true)]
    pub ejt: f64,
    /// Barrier between APES minima, meV.
    #[arg(long, allow_negative_numbers = true)]
    pub delta: f64,
    /// Effective phonon energy, meV.
    #[arg(long, allow_negative_numbers = true)]
    pub omega: f64,
    /// Oscillator cutoff; by default 64, raised to 96 if not converged.
    #[arg(long)]
    pub cutoff: Option<usize>,
    /// Number of vibronic levels to report.
    #[arg(long, default_value_t = 8)]
    pub n_eigen: usize,
    /// Eigenvalue CSV destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(a: &JtSolveArgs) -> Result<String, CliError> {
    let mut run = Run::new("jt-solve");
    let params = JTParams::new(a.ejt, a.delta, a.omega)?;
    let couplings = fit_couplings(&params)?;
    let sol = match a.cutoff {
        Some(n) => solve(&couplings, params.hbar_omega(), n, a.n_eigen)?,
        None => solve_auto(&params, a.n_eigen)?,
    };
    let p = ham_factor_p(&sol)?;
    let q = ham_factor_q(p)?;

    run.arg("ejt_meV", a.ejt);
    run.arg("delta_meV", a.delta);
    run.arg("omega_meV", a.omega);
    run.arg("cutoff", sol.cutoff);
    run.arg("n_eigen", a.n_eigen);

    let e0 = sol.eigenvalues[0];
    let rows: Vec<Vec<Cell>> = sol
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(k, &e)| vec![Cell::from(k), Cell::from(e), Cell::from(e - e0)])
        .collect();
    let eigen_csv = csv::render(&["index", "energy_meV", "relative_meV"], &rows);

    let summary = csv::render(
        &["quantity", "value"],
        &[
            vec![Cell::from("V_meV"), Cell::from(couplings.v_linear)],
            vec![Cell::from("G_meV"), Cell::from(couplings.g_quadratic)],
            vec![Cell::from("p"), Cell::from(p)],
            vec![Cell::from("q"), Cell::from(q)],
            vec![Cell::from("cutoff"), Cell::from(sol.cutoff)],
        ],
    );
    let stdout = match &a.out {
        Some(_) => summary,
        None => format!("{summary}\n{eigen_csv}"),
    };
    run.output(a.out.as_deref(), eigen_csv);
    run.finish()?;
    Ok(stdout)
}

//! Quadratic E⊗e Jahn-Teller problem.
//!
//! With dimensionless normal coordinates Q = (a + a†)/√2 the model is
//!
//! ```text
//! H = ħω(n_x + n_y + 1) + V(Q_x σ_z + Q_y σ_x) + G[(Q_x² − Q_y²)σ_z − 2 Q_x Q_y σ_x]
//! ```
//!
//! in the {e_x, e_y} electronic basis. For G > 0 the lower adiabatic sheet
//! has three minima at φ = 0, ±2π/3 and saddles in between.
//! All energies are in meV.

mod hamiltonian;
pub mod lanczos;
pub mod sparse;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::{Energy, EnergyUnit};

pub use hamiltonian::{build_hamiltonian, OscillatorBasis, DEFAULT_MAX_NONZEROS};
pub use lanczos::{lowest_eigenpairs, EigenPairs, LanczosError, LanczosOptions};
pub use sparse::SparseSymmetric;

pub const DEFAULT_CUTOFF: usize = 64;
pub const ESCALATED_CUTOFF: usize = 96;
/// Cutoff step used for the convergence test.
pub const CUTOFF_STEP: usize = 4;
/// Ground doublet energy change allowed between N−4 and N, in units of ħω.
pub const CONVERGENCE_TOL: f64 = 1e-6;
/// Gap below which the two lowest states count as one doublet, in units of ħω.
pub const DOUBLET_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JtError {
    #[error("invalid Jahn-Teller parameters: {0}")]
    InvalidParams(String),
    #[error(
        "barrier {delta} meV cannot be reached; the attainable barrier is below {max_barrier} meV"
    )]
    NoSolution { delta: f64, max_barrier: f64 },
    #[error("cutoff must be at least 1, got {0}")]
    InvalidCutoff(usize),
    #[error("cutoff {cutoff} needs up to {nonzeros} nonzeros, above the limit {limit}")]
    TooLarge {
        cutoff: usize,
        nonzeros: usize,
        limit: usize,
    },
    #[error("at least two eigenpairs are required, got {0}")]
    TooFewEigen(usize),
    #[error(transparent)]
    Eigensolver(#[from] LanczosError),
    #[error("ground doublet not converged: shift {shift:e} meV between cutoffs {from} and {to}")]
    NotConverged { shift: f64, from: usize, to: usize },
    #[error("two lowest vibronic states are not degenerate (gap {gap:e} meV)")]
    NoDoublet { gap: f64 },
    #[error("Ham factor must lie in (0, 1], got {0}")]
    FactorOutOfRange(f64),
}

#[derive(Deserialize)]
struct RawParams {
    e_jt: f64,
    delta_jt: f64,
    hbar_omega: f64,
}

/// (E_JT, δ_JT, ħω) of one Jahn-Teller problem, in meV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct JTParams {
    e_jt: f64,
    delta_jt: f64,
    hbar_omega: f64,
}

impl TryFrom<RawParams> for JTParams {
    type Error = JtError;

    fn try_from(r: RawParams) -> Result<Self, Self::Error> {
        JTParams::new(r.e_jt, r.delta_jt, r.hbar_omega)
    }
}

impl JTParams {
    pub fn new(e_jt: f64, delta_jt: f64, hbar_omega: f64) -> Result<Self, JtError> {
        if ![e_jt, delta_jt, hbar_omega].iter().all(|x| x.is_finite()) {
            return Err(JtError::InvalidParams("non-finite value".into()));
        }
        if e_jt <= 0.0 {
            return Err(JtError::InvalidParams(format!(
                "E_JT must be positive, got {e_jt}"
            )));
        }
        if hbar_omega <= 0.0 {
            return Err(JtError::InvalidParams(format!(
                "phonon energy must be positive, got {hbar_omega}"
            )));
        }
        if delta_jt < 0.0 || delta_jt >= e_jt {
            return Err(JtError::InvalidParams(format!(
                "barrier must satisfy 0 <= delta < E_JT, got delta={delta_jt}, E_JT={e_jt}"
            )));
        }
        Ok(Self {
            e_jt,
            delta_jt,
            hbar_omega,
        })
    }

    pub fn e_jt(&self) -> f64 {
        self.e_jt
    }

    pub fn delta_jt(&self) -> f64 {
        self.delta_jt
    }

    pub fn hbar_omega(&self) -> f64 {
        self.hbar_omega
    }
}

/// Linear (V) and quadratic (G) vibronic constants, meV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JTCouplings {
    pub v_linear: f64,
    pub g_quadratic: f64,
}

/// Both adiabatic sheets at (q_x, q_y), lower first.
pub fn apes_energies(qx: f64, qy: f64, c: &JTCouplings, hbar_omega: f64) -> (f64, f64) {
    let elastic = 0.5 * hbar_omega * (qx * qx + qy * qy);
    let cz = c.v_linear * qx + c.g_quadratic * (qx * qx - qy * qy);
    let cx = c.v_linear * qy - 2.0 * c.g_quadratic * qx * qy;
    let split = cz.hypot(cx);
    (elastic - split, elastic + split)
}

/// Minimum of `f` on [a, b] by golden-section search.
fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-14 * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Stationary points of the lower sheet found numerically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApesExtrema {
    /// Global minimum energy relative to the degenerate origin.
    pub minimum: f64,
    /// Saddle energy between neighbouring minima.
    pub saddle: f64,
    /// Radius of the minima.
    pub rho_min: f64,
}

impl ApesExtrema {
    pub fn jahn_teller_energy(&self) -> f64 {
        -self.minimum
    }

    pub fn barrier(&self) -> f64 {
        self.saddle - self.minimum
    }
}

/// Scans the lower sheet along the two high-symmetry rays φ = 0 and φ = π/3.
pub fn apes_extrema(c: &JTCouplings, hbar_omega: f64) -> ApesExtrema {
    let soft = (hbar_omega - 2.0 * c.g_quadratic.abs()).max(1e-12 * hbar_omega);
    let rho_max = 4.0 * c.v_linear.abs() / soft + 1.0;
    let along = |phi: f64| {
        let (s, co) = phi.sin_cos();
        golden_min(
            |r| apes_energies(r * co, r * s, c, hbar_omega).0,
            0.0,
            rho_max,
        )
    };
    let (r0, e0) = along(0.0);
    let (r1, e1) = along(std::f64::consts::FRAC_PI_3);
    if e0 <= e1 {
        ApesExtrema {
            minimum: e0,
            saddle: e1,
            rho_min: r0,
        }
    } else {
        ApesExtrema {
            minimum: e1,
            saddle: e0,
            rho_min: r1,
        }
    }
}

/// Finds (V, G ≥ 0) reproducing E_JT and δ_JT.
///
/// V is fixed by the minimum depth, V² = 2 E_JT (ħω − 2G); G is then found
/// by bisection on the numerically evaluated barrier, which rises
/// monotonically from 0 at G = 0 towards E_JT as G → ħω/2.
pub fn fit_couplings(params: &JTParams) -> Result<JTCouplings, JtError> {
    let (e_jt, delta, w) = (params.e_jt, params.delta_jt, params.hbar_omega);
    let couplings_for = |g: f64| JTCouplings {
        v_linear: (2.0 * e_jt * (w - 2.0 * g)).max(0.0).sqrt(),
        g_quadratic: g,
    };
    if delta >= e_jt {
        return Err(JtError::NoSolution {
            delta,
            max_barrier: e_jt,
        });
    }
    if delta == 0.0 {
        return Ok(couplings_for(0.0));
    }
    let barrier = |g: f64| apes_extrema(&couplings_for(g), w).barrier();
    let mut lo = 0.0;
    let mut hi = 0.5 * w * (1.0 - 1e-12);
    let top = barrier(hi);
    if top < delta {
        return Err(JtError::NoSolution {
            delta,
            max_barrier: top,
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if barrier(mid) < delta {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * w {
            break;
        }
    }
    Ok(couplings_for(0.5 * (lo + hi)))
}

/// Lowest vibronic eigenpairs at a given cutoff.
#[derive(Debug, Clone)]
pub struct VibronicSolution {
    pub eigenvalues: Vec<f64>,
    pub ground_doublet: [Vec<f64>; 2],
    pub cutoff: usize,
    pub converged: bool,
    pub hbar_omega: f64,
    pub residuals: Vec<f64>,
    /// Ground energy change between cutoffs N−4 and N (meV).
    pub cutoff_shift: f64,
}

impl VibronicSolution {
    pub fn doublet_gap(&self) -> f64 {
        self.eigenvalues[1] - self.eigenvalues[0]
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub max_nonzeros: usize,
    pub lanczos: LanczosOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_nonzeros: DEFAULT_MAX_NONZEROS,
            lanczos: LanczosOptions::default(),
        }
    }
}

/// Lowest `n_eigen` eigenpairs of the Hamiltonian at one cutoff.
pub fn solve_at_cutoff(
    c: &JTCouplings,
    hbar_omega: f64,
    cutoff: usize,
    n_eigen: usize,
    opts: &SolveOptions,
) -> Result<EigenPairs, JtError> {
    let h = build_hamiltonian(c, hbar_omega, cutoff, opts.max_nonzeros)?;
    let mut lopts = opts.lanczos.clone();
    lopts.block_size = lopts.block_size.max(n_eigen).max(2);
    Ok(lowest_eigenpairs(&h, n_eigen.min(h.dim()), &lopts)?)
}

/// Solves at cutoff N and N−4 and marks the result converged when the
/// ground energy moved by less than 1e-6·ħω.
pub fn solve(
    c: &JTCouplings,
    hbar_omega: f64,
    cutoff: usize,
    n_eigen: usize,
) -> Result<VibronicSolution, JtError> {
    solve_with(c, hbar_omega, cutoff, n_eigen, &SolveOptions::default())
}

pub fn solve_with(
    c: &JTCouplings,
    hbar_omega: f64,
    cutoff: usize,
    n_eigen: usize,
    opts: &SolveOptions,
) -> Result<VibronicSolution, JtError> {
    if n_eigen < 2 {
        return Err(JtError::TooFewEigen(n_eigen));
    }
    if cutoff < 1 {
        return Err(JtError::InvalidCutoff(cutoff));
    }
    let top = solve_at_cutoff(c, hbar_omega, cutoff, n_eigen, opts)?;
    let cutoff_shift = if cutoff > CUTOFF_STEP {
        let lower = solve_at_cutoff(c, hbar_omega, cutoff - CUTOFF_STEP, 2, opts)?;
        (top.values[0] - lower.values[0]).abs()
    } else {
        f64::INFINITY
    };
    let converged = cutoff_shift < CONVERGENCE_TOL * hbar_omega;
    let mut vectors = top.vectors.into_iter();
    let ground_doublet = [vectors.next().unwrap(), vectors.next().unwrap()];
    Ok(VibronicSolution {
        eigenvalues: top.values,
        ground_doublet,
        cutoff,
        converged,
        hbar_omega,
        residuals: top.residuals,
        cutoff_shift,
    })
}

/// Solves at [`DEFAULT_CUTOFF`] and retries at [`ESCALATED_CUTOFF`] when the
/// ground doublet has not settled.
pub fn solve_auto(params: &JTParams, n_eigen: usize) -> Result<VibronicSolution, JtError> {
    let c = fit_couplings(params)?;
    let first = solve(&c, params.hbar_omega, DEFAULT_CUTOFF, n_eigen)?;
    if first.converged {
        return Ok(first);
    }
    let second = solve(&c, params.hbar_omega, ESCALATED_CUTOFF, n_eigen)?;
    if second.converged {
        Ok(second)
    } else {
        Err(JtError::NotConverged {
            shift: second.cutoff_shift,
            from: ESCALATED_CUTOFF - CUTOFF_STEP,
            to: ESCALATED_CUTOFF,
        })
    }
}

fn check_doublet(sol: &VibronicSolution) -> Result<(), JtError> {
    if !sol.converged {
        return Err(JtError::NotConverged {
            shift: sol.cutoff_shift,
            from: sol.cutoff.saturating_sub(CUTOFF_STEP),
            to: sol.cutoff,
        });
    }
    let gap = sol.doublet_gap();
    if gap.abs() > DOUBLET_TOL * sol.hbar_omega {
        return Err(JtError::NoDoublet { gap });
    }
    Ok(())
}

/// Splits a vibronic vector into its e_x and e_y halves.
fn halves(v: &[f64]) -> (&[f64], &[f64]) {
    v.split_at(v.len() / 2)
}

/// Ham factor p: magnitude of the eigenvalues of L_z = i(|e_y⟩⟨e_x| − |e_x⟩⟨e_y|)
/// restricted to the ground doublet.
///
/// For real doublet vectors u, v the restricted operator is
/// [[0, −iκ], [iκ, 0]] with κ = ⟨u_x|v_y⟩ − ⟨u_y|v_x⟩, so p = |κ|.
pub fn ham_factor_p(sol: &VibronicSolution) -> Result<f64, JtError> {
    check_doublet(sol)?;
    let (ux, uy) = halves(&sol.ground_doublet[0]);
    let (vx, vy) = halves(&sol.ground_doublet[1]);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let kappa = dot(ux, vy) - dot(uy, vx);
    Ok(kappa.abs().min(1.0))
}

/// q = (1 + p)/2.
pub fn ham_factor_q(p: f64) -> Result<f64, JtError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(JtError::FactorOutOfRange(p));
    }
    Ok(0.5 * (1.0 + p))
}

/// q evaluated directly as the largest |eigenvalue| of σ_z in the ground
/// doublet. Research diagnostic; the reported q uses [`ham_factor_q`].
pub fn ham_factor_q_direct(sol: &VibronicSolution) -> Result<f64, JtError> {
    check_doublet(sol)?;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let sz = |a: &[f64], b: &[f64]| {
        let (ax, ay) = halves(a);
        let (bx, by) = halves(b);
        dot(ax, bx) - dot(ay, by)
    };
    let [u, v] = &sol.ground_doublet;
    let (a, b, d) = (sz(u, u), sz(u, v), sz(v, v));
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    Ok((mean.abs() + radius).min(1.0))
}

/// λ = p·λ₀, returned in GHz.
pub fn effective_lambda(p: f64, lambda0: Energy) -> Energy {
    Energy::ghz(p * lambda0.value_in(EnergyUnit::GigaHertz))
}

/// Full pipeline from tabulated parameters to Ham factors.
#[derive(Debug, Clone, Serialize)]
pub struct HamFactors {
    pub p: f64,
    pub q: f64,
}

pub fn ham_factors(
    params: &JTParams,
    cutoff: usize,
) -> Result<(JTCouplings, VibronicSolution, HamFactors), JtError> {
    let c = fit_couplings(params)?;
    let sol = solve(&c, params.hbar_omega, cutoff, 4)?;
    let p = ham_factor_p(&sol)?;
    let q = ham_factor_q(p)?;
    Ok((c, sol, HamFactors { p, q }))
}

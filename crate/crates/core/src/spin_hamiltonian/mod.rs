//! Effective spin Hamiltonian on (orbital doublet) ⊗ (electron spin ½) ⊗ (nuclear spin I).
//!
//! Basis ordering is orbital-major: `index = o·2(2I+1) + s·(2I+1) + k` with
//! o ∈ {e₊, e₋}, s ∈ {↑, ↓} and k enumerating m_I = I, I−1, …, −I.
//! Energies are in GHz; hyperfine and quadrupole inputs are in MHz.
//!
//! Orbital ladder convention: σ₊ = |e₋⟩⟨e₊| and σ₋ = |e₊⟩⟨e₋|. With
//! H_SOC = −λ L_z S_z and λ > 0 the lowest branch is {e₊↑, e₋↓}.

mod levels;
mod observables;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::{MagneticField, BOHR_MAGNETON_GHZ_PER_T, ELEMENTARY_CHARGE_C, PLANCK_J_S};

pub use levels::{levels, LevelSet, DEGENERACY_TOL_GHZ};
pub use observables::{
    a_ple, hf_splitting_exact, hf_splitting_perturbative, ple_lines, ple_lines_csv,
    ple_lines_grouped, zpl_broadening_proxy, PleLine, PLE_WEIGHT_THRESHOLD,
};

pub type Operator = DMatrix<Complex64>;

const MHZ_IN_GHZ: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpinError {
    #[error("nuclear spin must be a non-negative half-integer, got {0}")]
    InvalidSpin(f64),
    #[error("{0} is not finite")]
    NonFinite(&'static str),
    #[error("hyperfine terms need a nuclear spin I > 0")]
    NoNuclearSpin,
    #[error("quadrupole terms need I >= 1, got I = {0}")]
    QuadrupoleNeedsSpinOne(f64),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("perturbative splitting is singular: g·μB·B + A∥ = {0:e} MHz")]
    SingularRegime(f64),
    #[error("nuclear dimensions differ: ground {ground}, excited {excited}")]
    DimensionMismatch { ground: usize, excited: usize },
    #[error("operation requires I = 1/2, got I = {0}")]
    UnsupportedSpin(f64),
    #[error("level set has no product-basis structure (dimension {0})")]
    NoBasisStructure(usize),
}

/// Nuclear spin stored as the integer 2I.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct NuclearSpin(u32);

impl NuclearSpin {
    pub const ZERO: NuclearSpin = NuclearSpin(0);
    pub const HALF: NuclearSpin = NuclearSpin(1);

    pub const fn from_twice(two_i: u32) -> Self {
        NuclearSpin(two_i)
    }

    pub fn new(i: f64) -> Result<Self, SpinError> {
        let twice = 2.0 * i;
        if !i.is_finite() || i < 0.0 || (twice - twice.round()).abs() > 1e-9 || twice > 1e6 {
            return Err(SpinError::InvalidSpin(i));
        }
        Ok(NuclearSpin(twice.round() as u32))
    }

    pub fn twice(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    /// Number of m_I states, 2I+1.
    pub fn multiplicity(self) -> usize {
        self.0 as usize + 1
    }

    /// Projection m_I of the k-th nuclear basis state.
    pub fn m(self, k: usize) -> f64 {
        self.value() - k as f64
    }
}

impl TryFrom<f64> for NuclearSpin {
    type Error = SpinError;
    fn try_from(v: f64) -> Result<Self, SpinError> {
        NuclearSpin::new(v)
    }
}

impl From<NuclearSpin> for f64 {
    fn from(s: NuclearSpin) -> f64 {
        s.value()
    }
}

/// Axial hyperfine parameters in MHz. `a1` and `a2` already include the
/// vibronic q reduction when `reduced` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveHF {
    pub a_par: f64,
    pub a_perp: f64,
    pub a1: f64,
    pub a2: f64,
    #[serde(default = "default_true")]
    pub reduced: bool,
}

fn default_true() -> bool {
    true
}

impl EffectiveHF {
    pub fn new(a_par: f64, a_perp: f64, a1: f64, a2: f64) -> Self {
        Self {
            a_par,
            a_perp,
            a1,
            a2,
            reduced: true,
        }
    }

    fn validate(&self) -> Result<(), SpinError> {
        for (name, v) in [
            ("a_par", self.a_par),
            ("a_perp", self.a_perp),
            ("a1", self.a1),
            ("a2", self.a2),
        ] {
            if !v.is_finite() {
                return Err(SpinError::NonFinite(name));
            }
        }
        Ok(())
    }
}

/// Quadrupole couplings in MHz and the nuclear quadrupole moment in m².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadrupoleParams {
    pub q_static: f64,
    pub q1: f64,
    pub q2: f64,
    pub nuclear_moment: f64,
}

impl QuadrupoleParams {
    fn validate(&self) -> Result<(), SpinError> {
        for (name, v) in [
            ("q_static", self.q_static),
            ("q1", self.q1),
            ("q2", self.q2),
            ("nuclear_moment", self.nuclear_moment),
        ] {
            if !v.is_finite() {
                return Err(SpinError::NonFinite(name));
            }
        }
        Ok(())
    }
}

/// Which terms `assemble` includes. The orbital Zeeman term is off by
/// default since the orbital moment is strongly quenched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermToggles {
    pub soc: bool,
    pub zeeman: bool,
    pub static_hf: bool,
    pub dynamic_hf: bool,
    pub quadrupole: bool,
    /// Orbital Zeeman prefactor (reduction factor times g_L = 1), if enabled.
    pub orbital_zeeman: Option<f64>,
}

impl Default for TermToggles {
    fn default() -> Self {
        Self {
            soc: true,
            zeeman: true,
            static_hf: true,
            dynamic_hf: true,
            quadrupole: true,
            orbital_zeeman: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystemSpec {
    /// Effective spin-orbit splitting in GHz, stored positive.
    pub lambda_eff: f64,
    pub g_factor: f64,
    pub hf: Option<EffectiveHF>,
    pub quad: Option<QuadrupoleParams>,
    pub nuclear_spin: NuclearSpin,
    /// Field along the defect symmetry axis.
    pub b_field: MagneticField,
    pub terms: TermToggles,
}

impl SpinSystemSpec {
    /// SOC-only spec with g = 2 and no nuclear spin.
    pub fn soc_only(lambda_eff: f64) -> Self {
        Self {
            lambda_eff,
            g_factor: 2.0,
            hf: None,
            quad: None,
            nuclear_spin: NuclearSpin::ZERO,
            b_field: MagneticField::zero(),
            terms: TermToggles::default(),
        }
    }

    pub fn dim(&self) -> usize {
        4 * self.nuclear_spin.multiplicity()
    }

    pub fn validate(&self) -> Result<(), SpinError> {
        if !self.lambda_eff.is_finite() {
            return Err(SpinError::NonFinite("lambda_eff"));
        }
        if !self.g_factor.is_finite() {
            return Err(SpinError::NonFinite("g_factor"));
        }
        if !self.b_field.as_tesla().is_finite() {
            return Err(SpinError::NonFinite("b_field"));
        }
        if let Some(hf) = &self.hf {
            hf.validate()?;
            if self.nuclear_spin.twice() == 0 {
                return Err(SpinError::NoNuclearSpin);
            }
        }
        if let Some(q) = &self.quad {
            q.validate()?;
            if self.nuclear_spin.twice() < 2 {
                return Err(SpinError::QuadrupoleNeedsSpinOne(self.nuclear_spin.value()));
            }
        }
        Ok(())
    }
}

/// Angular momentum matrices (J_z, J_+, J_−) for spin j = twice/2 in the
/// basis m = j, j−1, …, −j.
pub fn angular_momentum(twice: u32) -> (Operator, Operator, Operator) {
    let d = twice as usize + 1;
    let j = twice as f64 / 2.0;
    let mut jz = Operator::zeros(d, d);
    let mut jp = Operator::zeros(d, d);
    for k in 0..d {
        let m = j - k as f64;
        jz[(k, k)] = Complex64::new(m, 0.0);
        if k > 0 {
            // ⟨m+1|J+|m⟩
            jp[(k - 1, k)] = Complex64::new((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
        }
    }
    let jm = jp.adjoint();
    (jz, jp, jm)
}

struct Blocks {
    lz: Operator,
    o1: Operator,
    sig_p: Operator,
    sig_m: Operator,
    sz: Operator,
    sp: Operator,
    sm: Operator,
    s1: Operator,
    iz: Operator,
    ip: Operator,
    im: Operator,
    i1: Operator,
}

impl Blocks {
    fn new(spin: NuclearSpin) -> Self {
        let c = |re: f64| Complex64::new(re, 0.0);
        let mut lz = Operator::zeros(2, 2);
        lz[(0, 0)] = c(1.0);
        lz[(1, 1)] = c(-1.0);
        let mut sig_p = Operator::zeros(2, 2);
        sig_p[(1, 0)] = c(1.0);
        let sig_m = sig_p.adjoint();
        let (sz, sp, sm) = angular_momentum(1);
        let (iz, ip, im) = angular_momentum(spin.twice());
        let n = spin.multiplicity();
        Self {
            lz,
            o1: Operator::identity(2, 2),
            sig_p,
            sig_m,
            sz,
            sp,
            sm,
            s1: Operator::identity(2, 2),
            iz,
            ip,
            im,
            i1: Operator::identity(n, n),
        }
    }
}

fn kron3(a: &Operator, b: &Operator, c: &Operator) -> Operator {
    a.kronecker(&b.kronecker(c))
}

fn scaled(m: Operator, s: f64) -> Operator {
    m * Complex64::new(s, 0.0)
}

/// −λ L_z S_z (GHz), identity on the nuclear space.
pub fn build_soc(lambda_eff: f64, spin: NuclearSpin) -> Operator {
    let b = Blocks::new(spin);
    scaled(kron3(&b.lz, &b.sz, &b.i1), -lambda_eff)
}

/// g μ_B B S_z (GHz). Nuclear Zeeman is neglected.
pub fn build_zeeman(g: f64, field: MagneticField, spin: NuclearSpin) -> Operator {
    let b = Blocks::new(spin);
    scaled(
        kron3(&b.o1, &b.sz, &b.i1),
        g * BOHR_MAGNETON_GHZ_PER_T * field.as_tesla(),
    )
}

/// Orbital Zeeman term `factor · μ_B B L_z` (GHz).
pub fn build_orbital_zeeman(factor: f64, field: MagneticField, spin: NuclearSpin) -> Operator {
    let b = Blocks::new(spin);
    scaled(
        kron3(&b.lz, &b.s1, &b.i1),
        factor * BOHR_MAGNETON_GHZ_PER_T * field.as_tesla(),
    )
}

/// A∥ S_z I_z + (A⊥/2)(S₊I₋ + S₋I₊), in GHz.
pub fn build_static_hf(hf: &EffectiveHF, spin: NuclearSpin) -> Result<Operator, SpinError> {
    hf.validate()?;
    if spin.twice() == 0 {
        return Err(SpinError::NoNuclearSpin);
    }
    let b = Blocks::new(spin);
    let par = scaled(kron3(&b.o1, &b.sz, &b.iz), hf.a_par * MHZ_IN_GHZ);
    let flip = kron3(&b.o1, &b.sp, &b.im) + kron3(&b.o1, &b.sm, &b.ip);
    Ok(par + scaled(flip, 0.5 * hf.a_perp * MHZ_IN_GHZ))
}

/// A₁[(S₊I_z + S_zI₊)σ₋ + (S_zI₋ + S₋I_z)σ₊] + A₂[S₋I₋σ₋ + S₊I₊σ₊], in GHz.
pub fn build_dynamic_hf(hf: &EffectiveHF, spin: NuclearSpin) -> Result<Operator, SpinError> {
    hf.validate()?;
    if spin.twice() == 0 {
        return Err(SpinError::NoNuclearSpin);
    }
    let b = Blocks::new(spin);
    let a1 = kron3(&b.sig_m, &b.sp, &b.iz)
        + kron3(&b.sig_m, &b.sz, &b.ip)
        + kron3(&b.sig_p, &b.sz, &b.im)
        + kron3(&b.sig_p, &b.sm, &b.iz);
    let a2 = kron3(&b.sig_m, &b.sm, &b.im) + kron3(&b.sig_p, &b.sp, &b.ip);
    Ok(scaled(a1, hf.a1 * MHZ_IN_GHZ) + scaled(a2, hf.a2 * MHZ_IN_GHZ))
}

/// Q[I_z² − I(I+1)/3] + Q₁[(I₊I_z + I_zI₊)σ₋ + h.c.] + Q₂[I₋²σ₋ + I₊²σ₊], in GHz.
pub fn build_quadrupole(quad: &QuadrupoleParams, spin: NuclearSpin) -> Result<Operator, SpinError> {
    quad.validate()?;
    if spin.twice() < 2 {
        return Err(SpinError::QuadrupoleNeedsSpinOne(spin.value()));
    }
    let b = Blocks::new(spin);
    let i = spin.value();
    let n = spin.multiplicity();
    let axial = &b.iz * &b.iz - scaled(Operator::identity(n, n), i * (i + 1.0) / 3.0);
    let static_part = kron3(&b.o1, &b.s1, &axial);
    let mixed = &b.ip * &b.iz + &b.iz * &b.ip;
    let q1 = kron3(&b.sig_m, &b.s1, &mixed) + kron3(&b.sig_p, &b.s1, &mixed.adjoint());
    let q2 = kron3(&b.sig_m, &b.s1, &(&b.im * &b.im)) + kron3(&b.sig_p, &b.s1, &(&b.ip * &b.ip));
    Ok(scaled(static_part, quad.q_static * MHZ_IN_GHZ)
        + scaled(q1, quad.q1 * MHZ_IN_GHZ)
        + scaled(q2, quad.q2 * MHZ_IN_GHZ))
}

/// Quadrupole coupling ρ·e·V_ZZ/h in MHz, with ρ in m² and V_ZZ in V/m².
pub fn quadrupole_coupling(rho: f64, v_zz: f64) -> Result<f64, SpinError> {
    if !rho.is_finite() {
        return Err(SpinError::NonFinite("rho"));
    }
    if !v_zz.is_finite() {
        return Err(SpinError::NonFinite("v_zz"));
    }
    Ok(rho * ELEMENTARY_CHARGE_C * v_zz / PLANCK_J_S * 1e-6)
}

/// One entry of the assembled term list.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermRecord {
    pub name: &'static str,
    pub included: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinHamiltonian {
    pub matrix: Operator,
    pub nuclear_spin: NuclearSpin,
    pub terms: Vec<TermRecord>,
}

pub fn assemble(spec: &SpinSystemSpec) -> Result<SpinHamiltonian, SpinError> {
    spec.validate()?;
    let spin = spec.nuclear_spin;
    let dim = spec.dim();
    let t = &spec.terms;
    let mut h = Operator::zeros(dim, dim);
    let mut terms = Vec::new();

    terms.push(TermRecord {
        name: "soc",
        included: t.soc,
    });
    if t.soc {
        h += build_soc(spec.lambda_eff, spin);
    }
    terms.push(TermRecord {
        name: "zeeman",
        included: t.zeeman,
    });
    if t.zeeman {
        h += build_zeeman(spec.g_factor, spec.b_field, spin);
    }
    let orbital = t.orbital_zeeman.is_some();
    terms.push(TermRecord {
        name: "orbital_zeeman",
        included: orbital,
    });
    if let Some(f) = t.orbital_zeeman {
        if !f.is_finite() {
            return Err(SpinError::NonFinite("orbital_zeeman"));
        }
        h += build_orbital_zeeman(f, spec.b_field, spin);
    }
    let static_on = t.static_hf && spec.hf.is_some();
    terms.push(TermRecord {
        name: "static_hf",
        included: static_on,
    });
    let dynamic_on = t.dynamic_hf && spec.hf.is_some();
    terms.push(TermRecord {
        name: "dynamic_hf",
        included: dynamic_on,
    });
    if let Some(hf) = &spec.hf {
        if static_on {
            h += build_static_hf(hf, spin)?;
        }
        if dynamic_on {
            h += build_dynamic_hf(hf, spin)?;
        }
    }
    let quad_on = t.quadrupole && spec.quad.is_some();
    terms.push(TermRecord {
        name: "quadrupole",
        included: quad_on,
    });
    if let (true, Some(q)) = (quad_on, &spec.quad) {
        h += build_quadrupole(q, spin)?;
    }
    Ok(SpinHamiltonian {
        matrix: h,
        nuclear_spin: spin,
        terms,
    })
}

/// Largest |H_ij − conj(H_ji)|.
pub fn hermiticity_deviation(h: &Operator) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..h.nrows() {
        for j in 0..h.ncols() {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Basis index of |o, s, k⟩ for o, s ∈ {0, 1} and nuclear index k.
pub fn basis_index(spin: NuclearSpin, orbital: usize, electron: usize, k: usize) -> usize {
    let n = spin.multiplicity();
    orbital * 2 * n + electron * n + k
}

/// Human-readable label of a product basis state.
pub fn basis_label(spin: NuclearSpin, index: usize) -> String {
    let n = spin.multiplicity();
    let orbital = if index / (2 * n) == 0 { "E+" } else { "E-" };
    let electron = if (index / n).is_multiple_of(2) {
        "up"
    } else {
        "dn"
    };
    if spin.twice() == 0 {
        return format!("{orbital} {electron}");
    }
    format!("{orbital} {electron} m={}", format_half(spin.m(index % n)))
}

fn format_half(m: f64) -> String {
    let twice = (2.0 * m).round() as i64;
    let sign = if twice < 0 { "-" } else { "+" };
    if twice % 2 == 0 {
        format!("{sign}{}", (twice / 2).abs())
    } else {
        format!("{sign}{}/2", twice.abs())
    }
}

//! Effective-Hamiltonian toolkit for negatively charged group-IV vacancy
//! centers (SiV, GeV, SnV, PbV) in diamond.
//!
//! * [`units`] constants and energy/field conversions
//! * [`jt_vibronic`] quadratic E⊗e Jahn-Teller solver and Ham factors
//! * [`spin_hamiltonian`] orbital ⊗ electron spin ⊗ nuclear spin model
//! * [`hf_decompose`] symmetry decomposition of raw hyperfine tensors
//! * [`pressure_model`] pressure tables, quadratic fits and calibration

pub mod csv;
pub mod hf_decompose;
pub mod jt_vibronic;
pub mod pressure_model;
pub mod spin_hamiltonian;
pub mod units;

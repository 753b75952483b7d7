use g4v_core::hf_decompose::HfError;
use g4v_core::jt_vibronic::JtError;
use g4v_core::pressure_model::PressureError;
use g4v_core::spin_hamiltonian::SpinError;
use g4v_core::units::UnitError;
use thiserror::Error;

/// Failure of a command, carrying its exit-code class.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    NonConvergence(String),
    #[error("{0}")]
    Range(String),
    #[error("{0}")]
    Symmetry(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Range(_) => 4,
            CliError::Symmetry(_) => 5,
        }
    }
}

impl From<JtError> for CliError {
    fn from(e: JtError) -> Self {
        match e {
            JtError::NotConverged { .. }
            | JtError::Eigensolver(_)
            | JtError::NoDoublet { .. }
            | JtError::FactorOutOfRange(_) => CliError::NonConvergence(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<PressureError> for CliError {
    fn from(e: PressureError) -> Self {
        if e.is_range_error() {
            CliError::Range(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<HfError> for CliError {
    fn from(e: HfError) -> Self {
        if e.is_symmetry_violation() {
            CliError::Symmetry(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<SpinError> for CliError {
    fn from(e: SpinError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<UnitError> for CliError {
    fn from(e: UnitError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

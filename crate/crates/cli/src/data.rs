//! Locating and loading shipped parameter files.

use std::path::{Path, PathBuf};

use g4v_core::pressure_model::{parse_table, Defect, DefectParamTable};

use crate::error::CliError;
use crate::output::Run;

/// Environment variable overriding the data directory.
pub const DATA_DIR_ENV: &str = "G4V_DATA_DIR";

/// `$G4V_DATA_DIR`, else `./data` when it holds parameter files, else the
/// data directory of the source tree this binary was built from.
pub fn data_dir() -> PathBuf {
    if let Some(d) = std::env::var_os(DATA_DIR_ENV) {
        return PathBuf::from(d);
    }
    let local = PathBuf::from("data");
    if local.join("siv.json").is_file() {
        return local;
    }
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// Table from an explicit file or from the data directory.
pub fn load_table(
    run: &mut Run,
    defect: Option<&str>,
    table: Option<&Path>,
) -> Result<DefectParamTable, CliError> {
    let path = match (table, defect) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(d)) => {
            let d: Defect = d.parse()?;
            data_dir().join(format!("{}.json", d.file_stem()))
        }
        (None, None) => {
            return Err(CliError::Validation(
                "either --defect or --table is required".into(),
            ))
        }
    };
    let text = run.read_input(&path)?;
    let t =
        parse_table(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    if let Some(d) = defect {
        let d: Defect = d.parse()?;
        if d != t.defect {
            return Err(CliError::Validation(format!(
                "{} describes {}, not {d}",
                path.display(),
                t.defect
            )));
        }
    }
    Ok(t)
}

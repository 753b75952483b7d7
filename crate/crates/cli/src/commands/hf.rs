use std::path::PathBuf;

use clap::Args;
use g4v_core::hf_decompose::{parse_document, run_document};

use crate::error::CliError;
use crate::output::Run;

#[derive(Debug, Args)]
pub struct HfDecomposeArgs {
    /// Tensor input document (JSON).
    #[arg(long)]
    pub input: PathBuf,
    /// Vibronic reduction factor q, replacing the document's value.
    #[arg(long)]
    pub q: Option<f64>,
    /// JSON result destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Tensor CSV destination.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

pub fn run(a: &HfDecomposeArgs) -> Result<String, CliError> {
    let mut run = Run::new("hf-decompose");
    let text = run.read_input(&a.input)?;
    let doc = parse_document(&text)?;
    let out = run_document(&doc, a.q)?;
    run.arg("input", a.input.display().to_string());
    run.arg("q", out.q);
    let mut json = serde_json::to_string_pretty(&out)
        .map_err(|e| CliError::Io(format!("cannot serialize result: {e}")))?;
    json.push('\n');
    let tensors = out.tensors_csv();
    let stdout = out.effective_csv().unwrap_or_else(|| tensors.clone());
    run.output(a.out.as_deref(), json);
    run.output(a.csv.as_deref(), tensors);
    run.finish()?;
    Ok(stdout)
}

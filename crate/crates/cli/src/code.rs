use std::path::Path;

use clap::Args;
use sha2::{Digest, Sha256};
use tsrecon::gf2::{build_peg, load_alist, DegreeTemplate};
use tsrecon::ParityCheckMatrix;

use crate::config::CodeSource;
use crate::error::{CliError, Result};

/// Where a parity-check matrix comes from on the command line.
#[derive(Args, Debug, Clone)]
pub struct CodeArgs {
    /// Parity-check matrix in alist format.
    #[arg(long, conflicts_with = "template")]
    pub alist: Option<std::path::PathBuf>,
    /// Degree template to build a PEG code from.
    #[arg(long, requires = "n")]
    pub template: Option<std::path::PathBuf>,
    /// Code length for --template.
    #[arg(long)]
    pub n: Option<usize>,
    /// Construction seed for --template.
    #[arg(long, default_value_t = 1)]
    pub code_seed: u64,
}

impl CodeArgs {
    pub fn source(&self) -> Result<CodeSource> {
        match (&self.alist, &self.template, self.n) {
            (Some(p), None, _) => Ok(CodeSource::Alist(p.clone())),
            (None, Some(t), Some(n)) => Ok(CodeSource::Generated {
                template: t.clone(),
                n,
                seed: self.code_seed,
            }),
            _ => Err(CliError::Usage("give --alist PATH or --template PATH --n N".into())),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(CliError::io(path))
}

pub fn load_template(path: &Path) -> Result<DegreeTemplate> {
    read_text(path)?.parse().map_err(|e: tsrecon::Error| CliError::Data {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

/// Loads or builds the matrix, returning it with the checksum of the file
/// it came from.
pub fn load_code(source: &CodeSource) -> Result<(ParityCheckMatrix, String)> {
    match source {
        CodeSource::Alist(path) => {
            let text = read_text(path)?;
            let h = load_alist(&text).map_err(|e| CliError::Data {
                path: path.clone(),
                msg: e.to_string(),
            })?;
            Ok((h, sha256_hex(text.as_bytes())))
        }
        CodeSource::Generated { template, n, seed } => {
            let text = read_text(template)?;
            let dist = load_template(template)?.instantiate(*n)?;
            let h = build_peg(&dist, *n, *seed)?;
            Ok((h, sha256_hex(text.as_bytes())))
        }
    }
}

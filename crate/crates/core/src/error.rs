use std::path::PathBuf;

use thiserror::Error;

use crate::oracle::VerificationReport;
use crate::scanner::ScanError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO_OR_CONFIG: i32 = 2;
pub const EXIT_MARKER: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;
pub const EXIT_STRUCTURE: i32 = 5;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{path} is not valid UTF-8")]
    NotUtf8 { path: PathBuf },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot split the document: {0}")]
    Scan(#[from] ScanError),
    #[error(
        "document already carries a zero2hero marker (seed={seed}, intensity={intensity}); \
         do not apply zero2hero multiple times to the same simple equation. Pass --force to override"
    )]
    MarkerPresent { seed: u64, intensity: u8 },
    #[error("the transformed document has no zero2hero marker on its first line; it was not produced by `run`")]
    MarkerMissing,
    #[error("equation {index}: transformed output failed verification ({detail})")]
    VerificationFailed { index: usize, detail: String, report: Option<VerificationReport> },
    #[error("structural mismatch: original has {original} math segments, transformed has {transformed}")]
    StructuralMismatch { original: usize, transformed: usize },
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Read { .. }
            | PipelineError::Write { .. }
            | PipelineError::NotUtf8 { .. }
            | PipelineError::Config(_)
            | PipelineError::Scan(_)
            | PipelineError::MarkerMissing => EXIT_IO_OR_CONFIG,
            PipelineError::MarkerPresent { .. } => EXIT_MARKER,
            PipelineError::VerificationFailed { .. } => EXIT_VERIFICATION,
            PipelineError::StructuralMismatch { .. } => EXIT_STRUCTURE,
        }
    }
}

pub fn read_source(path: &std::path::Path) -> Result<String, PipelineError> {
    let bytes = std::fs::read(path).map_err(|source| PipelineError::Read { path: path.to_path_buf(), source })?;
    String::from_utf8(bytes).map_err(|_| PipelineError::NotUtf8 { path: path.to_path_buf() })
}

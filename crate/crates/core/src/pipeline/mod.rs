//! Document-level commands: `run`, `score` and `verify`.

pub mod report;
mod run;
mod score;
mod verify;

use std::path::PathBuf;

use crate::error::PipelineError;
use crate::passes::Registry;
use crate::rng::content_seed;

pub use report::{EquationRow, Format, RowStatus, RunReport, ScoreReport, ScoreRow, Totals, VerifyReport, VerifyRow};
pub use run::{run, transform_document, Transformed};
pub use score::{score_document, score_file};
pub use verify::{verify_documents, verify_files};

pub const SEED_ENV: &str = "ZERO2HERO_SEED";
pub const DEFAULT_INTENSITY: u8 = 3;
pub const DEFAULT_TRIALS: usize = 20;
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const MAX_INTENSITY: u8 = 5;

/// Settings for transforming one document, independent of file paths.
#[derive(Debug, Clone, PartialEq)]
pub struct Options {
    pub seed: u64,
    pub intensity: u8,
    pub force: bool,
    pub trials: usize,
    pub tol: f64,
    pub parallel: bool,
}

impl Options {
    pub fn new(seed: u64, intensity: u8) -> Options {
        Options { seed, intensity, force: false, trials: DEFAULT_TRIALS, tol: DEFAULT_TOLERANCE, parallel: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub intensity: u8,
    pub passes: Option<Vec<String>>,
    pub force: bool,
    pub dry_run: bool,
    pub trials: usize,
    pub tol: f64,
    pub parallel: bool,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>, output: impl Into<PathBuf>) -> RunConfig {
        RunConfig {
            input: input.into(),
            output: Some(output.into()),
            seed: None,
            intensity: DEFAULT_INTENSITY,
            passes: None,
            force: false,
            dry_run: false,
            trials: DEFAULT_TRIALS,
            tol: DEFAULT_TOLERANCE,
            parallel: true,
        }
    }

    pub fn registry(&self) -> Result<Registry, PipelineError> {
        match &self.passes {
            None => Ok(Registry::catalog()),
            Some(ids) if ids.is_empty() => Err(PipelineError::Config("--passes needs at least one pass id".into())),
            Some(ids) => Registry::only(ids).map_err(|e| PipelineError::Config(e.to_string())),
        }
    }

    /// Validates the numeric settings and fixes the seed for `source`.
    pub fn options(&self, source: &str) -> Result<Options, PipelineError> {
        if self.intensity > MAX_INTENSITY {
            return Err(PipelineError::Config(format!(
                "intensity must be 0..={MAX_INTENSITY}, got {}",
                self.intensity
            )));
        }
        if self.trials == 0 {
            return Err(PipelineError::Config("--trials must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(PipelineError::Config("--tol must be a positive number".into()));
        }
        let env = std::env::var(SEED_ENV).ok();
        Ok(Options {
            seed: resolve_seed(self.seed, env.as_deref(), source.as_bytes())?,
            intensity: self.intensity,
            force: self.force,
            trials: self.trials,
            tol: self.tol,
            parallel: self.parallel,
        })
    }
}

/// `--seed`, then the environment variable, then a hash of the input.
pub fn resolve_seed(flag: Option<u64>, env: Option<&str>, content: &[u8]) -> Result<u64, PipelineError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match env.map(str::trim).filter(|s| !s.is_empty()) {
        Some(text) => text
            .parse::<u64>()
            .map_err(|_| PipelineError::Config(format!("{SEED_ENV} must be an unsigned integer, got {text:?}"))),
        None => Ok(content_seed(content)),
    }
}

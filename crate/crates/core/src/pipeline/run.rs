use std::collections::BTreeMap;

use rayon::prelude::*;

use super::report::{EquationRow, RowStatus, RunReport};
use super::{Options, RunConfig};
use crate::ast::{emit, parse_math};
use crate::error::{read_source, PipelineError};
use crate::metric::score;
use crate::oracle::{verify_equiv, Verdict};
use crate::passes::{apply_plan_steps, plan_with, Registry};
use crate::rng::{stream, Stream};
use crate::scanner::{detect_marker, replacement_fits, scan, splice, DocumentMarker, Segment};

pub struct Transformed {
    pub output: String,
    pub report: RunReport,
}

struct Outcome {
    row: EquationRow,
    replacement: Option<String>,
    warnings: Vec<String>,
    failure: Option<PipelineError>,
}

impl Outcome {
    fn skipped(index: usize, why: String) -> Outcome {
        Outcome {
            row: EquationRow::skipped(index, why.clone()),
            replacement: None,
            warnings: vec![format!("eq#{index}: left unchanged, {why}")],
            failure: None,
        }
    }
}

/// Keeps the whitespace that surrounded the original content.
fn with_padding(inner: &str, emitted: &str) -> String {
    let lead = &inner[..inner.len() - inner.trim_start().len()];
    let trail = &inner[inner.trim_end().len()..];
    format!("{lead}{emitted}{trail}")
}

fn transform_equation(index: usize, segment: &Segment, registry: &Registry, opts: &Options) -> Outcome {
    let inner = segment.inner().expect("math segment");
    let delimiter = segment.delimiter().expect("math segment");
    let original = match parse_math(inner) {
        Ok(e) => e,
        Err(u) => return Outcome::skipped(index, format!("unparseable: {u}")),
    };
    let before = score(&original);
    let plan = plan_with(registry, opts.seed, index as u64, opts.intensity, &original);
    let plan_ids: Vec<String> = plan.ids.iter().map(|s| s.to_string()).collect();
    if plan.is_empty() {
        let row = EquationRow {
            index,
            status: RowStatus::Unchanged,
            plan: plan_ids,
            verdict: None,
            trials: 0,
            max_deviation: None,
            before: Some(before),
            after: Some(before),
            note: None,
        };
        return Outcome { row, replacement: None, warnings: Vec::new(), failure: None };
    }
    let (mut steps, renaming) =
        apply_plan_steps(registry, &original, &plan, opts.seed, index as u64).expect("plan ids come from registry");
    let transformed = steps.pop().expect("nonempty");
    let emitted = emit(&transformed);
    let reparsed = match parse_math(&emitted) {
        Ok(e) => e,
        Err(u) => {
            let failure = PipelineError::VerificationFailed {
                index,
                detail: format!("emitted math does not parse: {u}"),
                report: None,
            };
            return Outcome {
                row: EquationRow::skipped(index, "internal emission error".into()),
                replacement: None,
                warnings: Vec::new(),
                failure: Some(failure),
            };
        }
    };
    let mut warnings = Vec::new();
    let mut rng = stream(opts.seed, index as u64, Stream::Verify);
    let (verdict, trials, max_deviation) =
        match verify_equiv(&original, &reparsed, Some(&renaming), opts.trials, opts.tol, &mut rng) {
            Ok(report) if report.verdict == Verdict::Fail => {
                let failure = PipelineError::VerificationFailed {
                    index,
                    detail: format!("max deviation {:.3e} over {} trials", report.max_deviation, report.trials),
                    report: Some(report),
                };
                return Outcome {
                    row: EquationRow::skipped(index, "verification failed".into()),
                    replacement: None,
                    warnings,
                    failure: Some(failure),
                };
            }
            Ok(report) => (report.verdict, report.trials, Some(report.max_deviation)),
            Err(exhausted) => {
                warnings.push(format!("eq#{index}: verification indeterminate, {exhausted}"));
                (Verdict::Indeterminate, 0, None)
            }
        };
    let replacement = with_padding(inner, &emitted);
    if !replacement_fits(delimiter, &replacement) {
        return Outcome::skipped(index, "rewritten math would break its delimiters".into());
    }
    let row = EquationRow {
        index,
        status: RowStatus::Transformed,
        plan: plan_ids,
        verdict: Some(verdict),
        trials,
        max_deviation: if verdict == Verdict::Pass { max_deviation } else { None },
        before: Some(before),
        after: Some(score(&reparsed)),
        note: None,
    };
    Outcome { row, replacement: Some(replacement), warnings, failure: None }
}

/// Rewrites every parseable equation of `source`. Pure: no file access.
pub fn transform_document(source: &str, registry: &Registry, opts: &Options) -> Result<Transformed, PipelineError> {
    let (marker, marker_warning) = detect_marker(source);
    if marker.present && !opts.force {
        return Err(PipelineError::MarkerPresent { seed: marker.seed, intensity: marker.intensity });
    }
    let segments = scan(source)?;
    let math: Vec<(usize, &Segment)> = segments.iter().enumerate().filter(|(_, s)| s.is_math()).collect();
    let work = |(index, (_, seg)): (usize, &(usize, &Segment))| transform_equation(index, seg, registry, opts);
    let outcomes: Vec<Outcome> = if opts.parallel {
        math.par_iter().enumerate().map(work).collect()
    } else {
        math.iter().enumerate().map(work).collect()
    };
    let mut warnings: Vec<String> = marker_warning.into_iter().collect();
    let mut replacements = BTreeMap::new();
    let mut rows = Vec::with_capacity(outcomes.len());
    for (outcome, (segment_index, _)) in outcomes.into_iter().zip(&math) {
        if let Some(failure) = outcome.failure {
            return Err(failure);
        }
        if let Some(text) = outcome.replacement {
            replacements.insert(*segment_index, text);
        }
        warnings.extend(outcome.warnings);
        rows.push(outcome.row);
    }
    let output = splice(&segments, &replacements, &DocumentMarker::new(opts.seed, opts.intensity))
        .map_err(|e| PipelineError::Config(format!("internal splice error: {e}")))?;
    Ok(Transformed { output, report: RunReport::new(opts.seed, opts.intensity, rows, warnings) })
}

fn same_file(a: &std::path::Path, b: &std::path::Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => a == b,
    }
}

/// Reads the input, transforms it and writes the output file.
pub fn run(config: &RunConfig) -> Result<RunReport, PipelineError> {
    let registry = config.registry()?;
    let source = read_source(&config.input)?;
    let opts = config.options(&source)?;
    if !config.dry_run {
        match &config.output {
            None => return Err(PipelineError::Config("--output is required unless --dry-run is given".into())),
            Some(out) if same_file(out, &config.input) && !config.force => {
                return Err(PipelineError::Config("output path equals input path; pass --force to overwrite".into()))
            }
            _ => {}
        }
    }
    let Transformed { output, report } = transform_document(&source, &registry, &opts)?;
    if !config.dry_run {
        let path = config.output.as_ref().expect("checked above");
        std::fs::write(path, output).map_err(|source| PipelineError::Write { path: path.clone(), source })?;
    }
    Ok(report)
}

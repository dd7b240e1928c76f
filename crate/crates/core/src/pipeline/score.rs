use std::path::Path;

use super::report::{ScoreReport, ScoreRow};
use crate::ast::parse_math;
use crate::error::{read_source, PipelineError};
use crate::metric::score;
use crate::scanner::{scan, strip_marker};

/// Scores every equation without changing anything.
pub fn score_document(source: &str) -> Result<ScoreReport, PipelineError> {
    let segments = scan(strip_marker(source))?;
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for (index, seg) in segments.iter().filter(|s| s.is_math()).enumerate() {
        match parse_math(seg.inner().expect("math segment")) {
            Ok(e) => rows.push(ScoreRow { index, score: Some(score(&e)), note: None }),
            Err(u) => {
                warnings.push(format!("eq#{index}: not scored, unparseable: {u}"));
                rows.push(ScoreRow { index, score: None, note: Some(format!("unparseable: {u}")) });
            }
        }
    }
    let total = rows.iter().filter_map(|r| r.score.map(|s| s.total)).sum();
    Ok(ScoreReport { rows, total, warnings })
}

pub fn score_file(path: &Path) -> Result<ScoreReport, PipelineError> {
    score_document(&read_source(path)?)
}

use std::collections::BTreeMap;
use std::path::Path;

use super::report::{VerifyReport, VerifyRow};
use crate::ast::{canonicalize, free_atoms, parse_math, Atom, Expr};
use crate::error::{read_source, PipelineError};
use crate::oracle::{verify_equiv, Verdict, VerificationReport};
use crate::passes::{apply_plan, plan_passes, Renaming};
use crate::rng::{stream, Stream};
use crate::scanner::{detect_marker, scan, strip_marker};

const MAX_RENAMING_CANDIDATES: usize = 5_000;

fn atoms_by_key(e: &Expr) -> BTreeMap<String, Atom> {
    let mut out = BTreeMap::new();
    e.visit(&mut |node, _| {
        if let Expr::Symbol(a) = node {
            out.entry(a.key()).or_insert_with(|| a.clone());
        }
    });
    out
}

/// Injective maps from symbols that vanished to Greek symbols that
/// appeared, keeping subscript and accent.
fn candidate_renamings(original: &Expr, transformed: &Expr) -> Vec<Renaming> {
    let before = free_atoms(original);
    let after = free_atoms(transformed);
    let atoms_before = atoms_by_key(original);
    let atoms_after = atoms_by_key(transformed);
    let vanished: Vec<&Atom> = before.difference(&after).filter_map(|k| atoms_before.get(k)).collect();
    let appeared: Vec<&Atom> =
        after.difference(&before).filter_map(|k| atoms_after.get(k)).filter(|a| a.is_greek()).collect();
    let mut out = Vec::new();
    let mut current: Vec<(String, String)> = Vec::new();
    let mut used = vec![false; appeared.len()];
    fn search(
        i: usize,
        vanished: &[&Atom],
        appeared: &[&Atom],
        used: &mut Vec<bool>,
        current: &mut Vec<(String, String)>,
        out: &mut Vec<Renaming>,
    ) {
        if out.len() >= MAX_RENAMING_CANDIDATES {
            return;
        }
        if i == vanished.len() {
            out.push(Renaming::from_pairs(current.iter().cloned()));
            return;
        }
        let old = vanished[i];
        for (j, new) in appeared.iter().enumerate() {
            if !used[j] && new.sub == old.sub && new.accent == old.accent {
                used[j] = true;
                current.push((old.key(), new.key()));
                search(i + 1, vanished, appeared, used, current, out);
                current.pop();
                used[j] = false;
            }
        }
        // The symbol may also have vanished for another reason.
        search(i + 1, vanished, appeared, used, current, out);
    }
    search(0, &vanished, &appeared, &mut used, &mut current, &mut out);
    out
}

fn row(index: usize, report: VerificationReport, note: Option<String>) -> VerifyRow {
    let max_deviation = report.max_deviation.is_finite().then_some(report.max_deviation);
    VerifyRow { index, verdict: report.verdict, trials: report.trials, max_deviation, note }
}

fn verdict_only(index: usize, verdict: Verdict, note: String) -> VerifyRow {
    VerifyRow { index, verdict, trials: 0, max_deviation: None, note: Some(note) }
}

fn verify_pair(
    index: usize,
    original: &str,
    transformed: &str,
    seed: u64,
    intensity: u8,
    trials: usize,
    tol: f64,
) -> VerifyRow {
    let o = match parse_math(original) {
        Ok(e) => e,
        Err(_) if original == transformed => {
            return verdict_only(index, Verdict::Indeterminate, "unparseable, left unchanged".into())
        }
        Err(u) => return verdict_only(index, Verdict::Fail, format!("original unparseable ({u}) but changed")),
    };
    let t = match parse_math(transformed) {
        Ok(e) => e,
        Err(u) => return verdict_only(index, Verdict::Fail, format!("transformed unparseable: {u}")),
    };
    let check = |sigma: Option<&Renaming>| {
        let mut rng = stream(seed, index as u64, Stream::Verify);
        verify_equiv(&o, &t, sigma, trials, tol, &mut rng)
    };
    let exhausted = |e: crate::oracle::BudgetExhausted| verdict_only(index, Verdict::Indeterminate, e.to_string());
    let plan = plan_passes(seed, index as u64, intensity, &o);
    let (replayed, sigma) = apply_plan(&o, &plan, seed, index as u64);
    if canonicalize(&replayed) == t {
        return match check(Some(&sigma)) {
            Ok(report) => row(index, report, None),
            Err(e) => exhausted(e),
        };
    }
    let mut first: Option<VerificationReport> = None;
    for candidate in candidate_renamings(&o, &t) {
        match check(Some(&candidate)) {
            Ok(report) if report.verdict != Verdict::Fail => {
                let note = (!candidate.is_empty()).then(|| "renaming inferred".to_string());
                return row(index, report, note);
            }
            Ok(report) => {
                first.get_or_insert(report);
            }
            Err(e) => return exhausted(e),
        }
    }
    match first {
        Some(report) => row(index, report, Some("not reproducible from the marker".into())),
        None => verdict_only(index, Verdict::Fail, "no renaming explains the change".into()),
    }
}

/// Re-pairs the equations of both documents by position and checks each pair.
pub fn verify_documents(
    original: &str,
    transformed: &str,
    trials: usize,
    tol: f64,
) -> Result<VerifyReport, PipelineError> {
    let (marker, _) = detect_marker(transformed);
    if !marker.present {
        return Err(PipelineError::MarkerMissing);
    }
    let a = scan(original)?;
    let b = scan(strip_marker(transformed))?;
    let a: Vec<&str> = a.iter().filter_map(|s| s.inner()).collect();
    let b: Vec<&str> = b.iter().filter_map(|s| s.inner()).collect();
    if a.len() != b.len() {
        return Err(PipelineError::StructuralMismatch { original: a.len(), transformed: b.len() });
    }
    let rows = a
        .iter()
        .zip(&b)
        .enumerate()
        .map(|(i, (o, t))| verify_pair(i, o, t, marker.seed, marker.intensity, trials, tol))
        .collect();
    Ok(VerifyReport { seed: marker.seed, intensity: marker.intensity, rows, warnings: Vec::new() })
}

pub fn verify_files(
    original: &Path,
    transformed: &Path,
    trials: usize,
    tol: f64,
) -> Result<VerifyReport, PipelineError> {
    verify_documents(&read_source(original)?, &read_source(transformed)?, trials, tol)
}

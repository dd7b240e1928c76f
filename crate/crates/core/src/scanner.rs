//! Lossless split of a LaTeX source into prose and math segments.

use std::collections::BTreeMap;
use std::ops::Range;
use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

pub const MATH_ENVIRONMENTS: &[&str] = &["equation", "align", "gather", "multline", "eqnarray", "displaymath"];
const VERBATIM_ENVIRONMENTS: &[&str] = &["verbatim", "verbatim*", "lstlisting", "minted", "comment", "Verbatim"];
const MARKER_PREFIX: &str = "% zero2hero:";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MathDelimiter {
    /// `$ .. $`
    InlineDollar,
    /// `\( .. \)`
    InlineParen,
    /// `$$ .. $$`
    DisplayDollar,
    /// `\[ .. \]`
    DisplayBracket,
    /// `\begin{name} .. \end{name}`; `name` excludes the star.
    Environment { name: String, starred: bool },
}

impl MathDelimiter {
    pub fn opener(&self) -> String {
        match self {
            MathDelimiter::InlineDollar => "$".into(),
            MathDelimiter::InlineParen => "\\(".into(),
            MathDelimiter::DisplayDollar => "$$".into(),
            MathDelimiter::DisplayBracket => "\\[".into(),
            MathDelimiter::Environment { .. } => format!("\\begin{{{}}}", self.env_name()),
        }
    }

    pub fn closer(&self) -> String {
        match self {
            MathDelimiter::InlineDollar => "$".into(),
            MathDelimiter::InlineParen => "\\)".into(),
            MathDelimiter::DisplayDollar => "$$".into(),
            MathDelimiter::DisplayBracket => "\\]".into(),
            MathDelimiter::Environment { .. } => format!("\\end{{{}}}", self.env_name()),
        }
    }

    fn env_name(&self) -> String {
        match self {
            MathDelimiter::Environment { name, starred } => format!("{name}{}", if *starred { "*" } else { "" }),
            _ => String::new(),
        }
    }

    pub fn is_display(&self) -> bool {
        !matches!(self, MathDelimiter::InlineDollar | MathDelimiter::InlineParen)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SegmentKind {
    Prose,
    /// `inner` indexes into the segment's `raw`.
    Math {
        delimiter: MathDelimiter,
        inner: Range<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub raw: String,
}

impl Segment {
    pub fn prose(raw: impl Into<String>) -> Segment {
        Segment { kind: SegmentKind::Prose, raw: raw.into() }
    }

    pub fn math(delimiter: MathDelimiter, inner: &str) -> Segment {
        let open = delimiter.opener();
        let raw = format!("{open}{inner}{}", delimiter.closer());
        Segment { kind: SegmentKind::Math { delimiter, inner: open.len()..open.len() + inner.len() }, raw }
    }

    pub fn is_math(&self) -> bool {
        matches!(self.kind, SegmentKind::Math { .. })
    }

    pub fn inner(&self) -> Option<&str> {
        match &self.kind {
            SegmentKind::Math { inner, .. } => Some(&self.raw[inner.clone()]),
            SegmentKind::Prose => None,
        }
    }

    pub fn delimiter(&self) -> Option<&MathDelimiter> {
        match &self.kind {
            SegmentKind::Math { delimiter, .. } => Some(delimiter),
            SegmentKind::Prose => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScanError {
    #[error("math delimiter opened at byte {0} is never closed")]
    UnbalancedDelimiter(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpliceError {
    #[error("replacement index {0} is out of range")]
    IndexOutOfRange(usize),
    #[error("segment {0} is prose, not math")]
    NotMath(usize),
    #[error("replacement for segment {0} would close its delimiter early")]
    ReplacementContainsDelimiter(usize),
}

fn starts_at(b: &[u8], i: usize, pat: &str) -> bool {
    b.len() >= i + pat.len() && &b[i..i + pat.len()] == pat.as_bytes()
}

fn line_end(b: &[u8], i: usize) -> usize {
    b[i..].iter().position(|&c| c == b'\n').map(|p| i + p).unwrap_or(b.len())
}

/// `\begin{name}` at `i`: returns the name and the index after `}`.
fn env_at(src: &str, i: usize, keyword: &str) -> Option<(String, usize)> {
    let b = src.as_bytes();
    let open = format!("\\{keyword}{{");
    if !starts_at(b, i, &open) {
        return None;
    }
    let start = i + open.len();
    let close = b[start..].iter().position(|&c| c == b'}')? + start;
    let name = &src[start..close];
    if name.is_empty() || !name.bytes().all(|c| c.is_ascii_alphabetic() || c == b'*') {
        return None;
    }
    Some((name.to_string(), close + 1))
}

fn math_environment(name: &str) -> Option<MathDelimiter> {
    let (base, starred) = match name.strip_suffix('*') {
        Some(base) => (base, true),
        None => (name, false),
    };
    MATH_ENVIRONMENTS.contains(&base).then(|| MathDelimiter::Environment { name: base.to_string(), starred })
}

/// Finds the closer of `delim` in `src[from..]`: returns (inner end, closer end).
fn find_closer(src: &str, from: usize, delim: &MathDelimiter) -> Option<(usize, usize)> {
    let b = src.as_bytes();
    let closer = delim.closer();
    let mut depth = 0usize;
    let mut nest = 0usize;
    let mut i = from;
    while i < b.len() {
        match b[i] {
            b'%' => i = line_end(b, i),
            b'{' => {
                depth += 1;
                i += 1;
            }
            b'}' => {
                depth = depth.saturating_sub(1);
                i += 1;
            }
            b'$' if depth == 0 => match delim {
                MathDelimiter::InlineDollar => return Some((i, i + 1)),
                MathDelimiter::DisplayDollar if starts_at(b, i, "$$") => return Some((i, i + 2)),
                _ => i += 1,
            },
            b'\\' => {
                if depth == 0
                    && starts_at(b, i, &closer)
                    && !matches!(delim, MathDelimiter::InlineDollar | MathDelimiter::DisplayDollar)
                {
                    if nest == 0 {
                        return Some((i, i + closer.len()));
                    }
                    nest -= 1;
                    i += closer.len();
                    continue;
                }
                if matches!(delim, MathDelimiter::Environment { .. }) && starts_at(b, i, &delim.opener()) {
                    nest += 1;
                    i += delim.opener().len();
                    continue;
                }
                i += 1;
                if i < b.len() {
                    i += src[i..].chars().next().map(char::len_utf8).unwrap_or(1);
                }
            }
            _ => i += 1,
        }
    }
    None
}

/// Splits `source` into segments whose raw bytes concatenate back to it.
pub fn scan(source: &str) -> Result<Vec<Segment>, ScanError> {
    let b = source.as_bytes();
    let mut segments = Vec::new();
    let mut prose_start = 0;
    let mut i = 0;
    while i < b.len() {
        let opened: Option<(MathDelimiter, usize)> = match b[i] {
            b'%' => {
                i = line_end(b, i);
                continue;
            }
            b'$' if starts_at(b, i, "$$") => Some((MathDelimiter::DisplayDollar, i + 2)),
            b'$' => Some((MathDelimiter::InlineDollar, i + 1)),
            b'\\' if starts_at(b, i, "\\(") => Some((MathDelimiter::InlineParen, i + 2)),
            b'\\' if starts_at(b, i, "\\[") => Some((MathDelimiter::DisplayBracket, i + 2)),
            b'\\' => {
                if let Some(next) = skip_verbatim(source, i) {
                    i = next;
                    continue;
                }
                let env =
                    env_at(source, i, "begin").and_then(|(name, after)| math_environment(&name).map(|d| (d, after)));
                if env.is_none() {
                    i += 1;
                    if i < b.len() {
                        i += source[i..].chars().next().map(char::len_utf8).unwrap_or(1);
                    }
                }
                env
            }
            _ => {
                i += 1;
                None
            }
        };
        let Some((delimiter, inner_start)) = opened else { continue };
        let (inner_end, end) = find_closer(source, inner_start, &delimiter).ok_or(ScanError::UnbalancedDelimiter(i))?;
        if prose_start < i {
            segments.push(Segment::prose(&source[prose_start..i]));
        }
        segments.push(Segment {
            kind: SegmentKind::Math { delimiter, inner: inner_start - i..inner_end - i },
            raw: source[i..end].to_string(),
        });
        i = end;
        prose_start = end;
    }
    if prose_start < b.len() {
        segments.push(Segment::prose(&source[prose_start..]));
    }
    Ok(segments)
}

/// `\verb|..|` or a verbatim-like environment at `i`: index after it.
fn skip_verbatim(src: &str, i: usize) -> Option<usize> {
    let b = src.as_bytes();
    if starts_at(b, i, "\\verb") && !b.get(i + 5).is_some_and(|c| c.is_ascii_alphabetic()) {
        let mut j = i + 5;
        if b.get(j) == Some(&b'*') {
            j += 1;
        }
        let delim = *b.get(j)?;
        if delim.is_ascii_whitespace() {
            return None;
        }
        let close = b[j + 1..].iter().position(|&c| c == delim || c == b'\n');
        return Some(match close {
            Some(p) => j + 1 + p + 1,
            None => b.len(),
        });
    }
    let (name, after) = env_at(src, i, "begin")?;
    if !VERBATIM_ENVIRONMENTS.contains(&name.as_str()) {
        return None;
    }
    let end = format!("\\end{{{name}}}");
    Some(src[after..].find(&end).map(|p| after + p + end.len()).unwrap_or(b.len()))
}

/// Checks that `inner` can sit between the delimiters without closing them
/// early or leaving them open.
pub fn replacement_fits(delimiter: &MathDelimiter, inner: &str) -> bool {
    let candidate = format!("{inner}{}", delimiter.closer());
    find_closer(&candidate, 0, delimiter) == Some((inner.len(), candidate.len()))
}

/// Reassembles the document, substituting replaced math content.
pub fn splice(
    segments: &[Segment],
    replacements: &BTreeMap<usize, String>,
    marker: &DocumentMarker,
) -> Result<String, SpliceError> {
    for (&idx, text) in replacements {
        let seg = segments.get(idx).ok_or(SpliceError::IndexOutOfRange(idx))?;
        let delimiter = seg.delimiter().ok_or(SpliceError::NotMath(idx))?;
        if !replacement_fits(delimiter, text) {
            return Err(SpliceError::ReplacementContainsDelimiter(idx));
        }
    }
    let mut out = String::new();
    if marker.present {
        out.push_str(&marker.line());
    }
    for (idx, seg) in segments.iter().enumerate() {
        match (replacements.get(&idx), &seg.kind) {
            (Some(text), SegmentKind::Math { inner, .. }) => {
                out.push_str(&seg.raw[..inner.start]);
                out.push_str(text);
                out.push_str(&seg.raw[inner.end..]);
            }
            _ => out.push_str(&seg.raw),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentMarker {
    pub present: bool,
    pub seed: u64,
    pub intensity: u8,
    pub tool_version: String,
}

impl DocumentMarker {
    pub fn absent() -> DocumentMarker {
        DocumentMarker { present: false, seed: 0, intensity: 0, tool_version: String::new() }
    }

    pub fn new(seed: u64, intensity: u8) -> DocumentMarker {
        DocumentMarker { present: true, seed, intensity, tool_version: env!("CARGO_PKG_VERSION").to_string() }
    }

    pub fn line(&self) -> String {
        format!("{MARKER_PREFIX} seed={} intensity={} v={}\n", self.seed, self.intensity, self.tool_version)
    }
}

fn marker_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^% zero2hero: seed=(\d+) intensity=([0-5]) v=(\d+(?:\.\d+)*(?:[-+][0-9A-Za-z.-]+)?)\r?$")
            .expect("marker pattern")
    })
}

/// Reads the marker from the first line. A line that starts like a marker
/// but does not match the grammar yields `present = false` and a warning.
pub fn detect_marker(source: &str) -> (DocumentMarker, Option<String>) {
    let first = source.split('\n').next().unwrap_or("");
    if let Some(c) = marker_regex().captures(first) {
        if let Ok(seed) = c[1].parse::<u64>() {
            let marker = DocumentMarker {
                present: true,
                seed,
                intensity: c[2].parse().expect("single digit"),
                tool_version: c[3].to_string(),
            };
            return (marker, None);
        }
    }
    let warning = first.starts_with(MARKER_PREFIX).then(|| format!("ignoring malformed marker line: {first:?}"));
    (DocumentMarker::absent(), warning)
}

/// The document without its marker line, if it has one.
pub fn strip_marker(source: &str) -> &str {
    if detect_marker(source).0.present {
        source.find('\n').map(|p| &source[p + 1..]).unwrap_or("")
    } else {
        source
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(bool, String)> {
        scan(src).unwrap().into_iter().map(|s| (s.is_math(), s.inner().unwrap_or(&s.raw).to_string())).collect()
    }

    #[test]
    fn inline_dollar() {
        assert_eq!(kinds("a $x$ b"), vec![(false, "a ".into()), (true, "x".into()), (false, " b".into())]);
        assert!(scan("").unwrap().is_empty());
    }

    #[test]
    fn all_delimiter_forms() {
        let src = "$$a$$ \\(b\\) \\[c\\] \\begin{align*}d\\end{align*}";
        let segs = scan(src).unwrap();
        let delims: Vec<_> = segs.iter().filter_map(|s| s.delimiter().cloned()).collect();
        assert_eq!(
            delims,
            vec![
                MathDelimiter::DisplayDollar,
                MathDelimiter::InlineParen,
                MathDelimiter::DisplayBracket,
                MathDelimiter::Environment { name: "align".into(), starred: true },
            ]
        );
        for s in &segs {
            if let Some(d) = s.delimiter() {
                assert_eq!(s.raw, format!("{}{}{}", d.opener(), s.inner().unwrap(), d.closer()));
            }
        }
    }

    #[test]
    fn nested_split_stays_inside() {
        let src = "x \\begin{equation}\\begin{split} a &= b \\end{split}\\end{equation} y";
        let segs = scan(src).unwrap();
        assert_eq!(segs.len(), 3);
        assert_eq!(segs[1].delimiter(), Some(&MathDelimiter::Environment { name: "equation".into(), starred: false }));
    }

    #[test]
    fn verbatim_regions_are_prose() {
        for src in ["cost \\$5 and \\$6", "\\verb|$x$| ok", "% $x$\nplain", "\\begin{verbatim}$a$\\end{verbatim}"] {
            assert!(scan(src).unwrap().iter().all(|s| !s.is_math()), "{src}");
        }
    }

    #[test]
    fn closer_inside_braces_is_ignored() {
        let segs = scan("$\\text{a $b$ c} d$").unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].inner(), Some("\\text{a $b$ c} d"));
    }

    #[test]
    fn unbalanced_reports_offset() {
        assert_eq!(scan("ab $x"), Err(ScanError::UnbalancedDelimiter(3)));
        assert_eq!(scan("\\begin{equation} x"), Err(ScanError::UnbalancedDelimiter(0)));
    }

    #[test]
    fn splice_substitutes_inside_delimiters() {
        let segs = scan("a $x$ b").unwrap();
        let marker = DocumentMarker::new(7, 3);
        let mut r = BTreeMap::new();
        r.insert(1, "\\ln\\left(e^{x}\\right)".to_string());
        let out = splice(&segs, &r, &marker).unwrap();
        assert_eq!(out, format!("{}a $\\ln\\left(e^{{x}}\\right)$ b", marker.line()));
        assert_eq!(splice(&segs, &BTreeMap::new(), &DocumentMarker::absent()).unwrap(), "a $x$ b");
    }

    #[test]
    fn splice_rejects_unsafe_replacements() {
        let segs = scan("a $x$ b").unwrap();
        for (idx, text) in [(1, "y$z"), (1, "{y"), (1, "y % c")] {
            let r = BTreeMap::from([(idx, text.to_string())]);
            assert_eq!(splice(&segs, &r, &DocumentMarker::absent()), Err(SpliceError::ReplacementContainsDelimiter(1)));
        }
        let r = BTreeMap::from([(5, "y".to_string())]);
        assert_eq!(splice(&segs, &r, &DocumentMarker::absent()), Err(SpliceError::IndexOutOfRange(5)));
        let r = BTreeMap::from([(0, "y".to_string())]);
        assert_eq!(splice(&segs, &r, &DocumentMarker::absent()), Err(SpliceError::NotMath(0)));
    }

    #[test]
    fn markers() {
        let (m, w) = detect_marker("% zero2hero: seed=42 intensity=3 v=1.0\nrest");
        assert!(m.present && w.is_none());
        assert_eq!((m.seed, m.intensity, m.tool_version.as_str()), (42, 3, "1.0"));
        let (m, w) = detect_marker("\\documentclass{article}");
        assert!(!m.present && w.is_none());
        let (m, w) = detect_marker("% zero2hero: garbage\n");
        assert!(!m.present && w.is_some());
        let line = DocumentMarker::new(9, 5).line();
        assert_eq!(detect_marker(&line).0, DocumentMarker::new(9, 5));
        assert_eq!(strip_marker(&format!("{line}body")), "body");
    }
}

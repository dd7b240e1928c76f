//! Report rows and their text and JSON-lines renderings.

use std::fmt::Write as _;

use serde::Serialize;

use crate::metric::ComplexityScore;
use crate::oracle::Verdict;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Machine,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Transformed,
    /// Parsed, but the plan was empty.
    Unchanged,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquationRow {
    pub index: usize,
    pub status: RowStatus,
    pub plan: Vec<String>,
    pub verdict: Option<Verdict>,
    pub trials: usize,
    pub max_deviation: Option<f64>,
    pub before: Option<ComplexityScore>,
    pub after: Option<ComplexityScore>,
    pub note: Option<String>,
}

impl EquationRow {
    pub fn skipped(index: usize, note: String) -> EquationRow {
        EquationRow {
            index,
            status: RowStatus::Skipped,
            plan: Vec::new(),
            verdict: None,
            trials: 0,
            max_deviation: None,
            before: None,
            after: None,
            note: Some(note),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Totals {
    pub equations: usize,
    pub transformed: usize,
    pub unchanged: usize,
    pub skipped: usize,
    pub before: u64,
    pub after: u64,
    pub greek_added: i64,
    pub bigops_added: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub seed: u64,
    pub intensity: u8,
    pub rows: Vec<EquationRow>,
    pub totals: Totals,
    pub warnings: Vec<String>,
}

fn signed(before: u64, after: u64) -> i64 {
    after as i64 - before as i64
}

impl RunReport {
    pub fn new(seed: u64, intensity: u8, rows: Vec<EquationRow>, warnings: Vec<String>) -> RunReport {
        let mut totals = Totals { equations: rows.len(), ..Totals::default() };
        for row in &rows {
            match row.status {
                RowStatus::Transformed => totals.transformed += 1,
                RowStatus::Unchanged => totals.unchanged += 1,
                RowStatus::Skipped => totals.skipped += 1,
            }
            if let (Some(b), Some(a)) = (&row.before, &row.after) {
                totals.before += b.total;
                totals.after += a.total;
                totals.greek_added += signed(b.greek_count, a.greek_count);
                totals.bigops_added += signed(b.bigop_count, a.bigop_count);
            }
        }
        RunReport { seed, intensity, rows, totals, warnings }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.render_text(),
            Format::Machine => {
                let mut out = String::new();
                for row in &self.rows {
                    out.push_str(&serde_json::to_string(row).expect("rows serialize"));
                    out.push('\n');
                }
                let summary = serde_json::json!({
                    "seed": self.seed,
                    "intensity": self.intensity,
                    "totals": self.totals,
                    "warnings": self.warnings,
                });
                out.push_str(&summary.to_string());
                out.push('\n');
                out
            }
        }
    }

    fn render_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "seed={} intensity={} equations={}", self.seed, self.intensity, self.rows.len()).unwrap();
        for row in &self.rows {
            let plan = format!("plan=[{}]", row.plan.join(","));
            match (&row.before, &row.after) {
                (Some(b), Some(a)) => {
                    write!(
                        out,
                        "eq#{} before={} after={} Δ={} greek {:+} bigops {:+} {plan}",
                        row.index,
                        b.total,
                        a.total,
                        signed(b.total, a.total),
                        signed(b.greek_count, a.greek_count),
                        signed(b.bigop_count, a.bigop_count),
                    )
                    .unwrap();
                    if let Some(v) = row.verdict {
                        write!(out, " verdict={v} trials={}", row.trials).unwrap();
                        if let Some(d) = row.max_deviation {
                            write!(out, " maxdev={d:.3e}").unwrap();
                        }
                    }
                }
                _ => write!(out, "eq#{} skipped {plan}", row.index).unwrap(),
            }
            if let Some(note) = &row.note {
                write!(out, " ({note})").unwrap();
            }
            out.push('\n');
        }
        let t = &self.totals;
        writeln!(
            out,
            "total before={} after={} Δ={} greek {:+} bigops {:+} transformed={} unchanged={} skipped={}",
            t.before,
            t.after,
            signed(t.before, t.after),
            t.greek_added,
            t.bigops_added,
            t.transformed,
            t.unchanged,
            t.skipped
        )
        .unwrap();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreRow {
    pub index: usize,
    pub score: Option<ComplexityScore>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub rows: Vec<ScoreRow>,
    pub total: u64,
    pub warnings: Vec<String>,
}

impl ScoreReport {
    pub fn render(&self, format: Format) -> String {
        let mut out = String::new();
        match format {
            Format::Machine => {
                for row in &self.rows {
                    out.push_str(&serde_json::to_string(row).expect("rows serialize"));
                    out.push('\n');
                }
                out.push_str(&serde_json::json!({ "total": self.total, "warnings": self.warnings }).to_string());
                out.push('\n');
            }
            Format::Text => {
                for row in &self.rows {
                    match &row.score {
                        Some(s) => writeln!(
                            out,
                            "eq#{} total={} nodes={} greek={} bigops={} depth={} diversity={}",
                            row.index, s.total, s.node_count, s.greek_count, s.bigop_count, s.max_depth, s.op_diversity
                        )
                        .unwrap(),
                        None => {
                            writeln!(out, "eq#{} skipped ({})", row.index, row.note.as_deref().unwrap_or("")).unwrap()
                        }
                    }
                }
                writeln!(out, "total={} equations={}", self.total, self.rows.len()).unwrap();
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyRow {
    pub index: usize,
    pub verdict: Verdict,
    pub trials: usize,
    pub max_deviation: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub intensity: u8,
    pub rows: Vec<VerifyRow>,
    pub warnings: Vec<String>,
}

impl VerifyReport {
    pub fn count(&self, verdict: Verdict) -> usize {
        self.rows.iter().filter(|r| r.verdict == verdict).count()
    }

    pub fn render(&self, format: Format) -> String {
        let mut out = String::new();
        match format {
            Format::Machine => {
                for row in &self.rows {
                    out.push_str(&serde_json::to_string(row).expect("rows serialize"));
                    out.push('\n');
                }
                let summary = serde_json::json!({
                    "pass": self.count(Verdict::Pass),
                    "fail": self.count(Verdict::Fail),
                    "indeterminate": self.count(Verdict::Indeterminate),
                    "warnings": self.warnings,
                });
                out.push_str(&summary.to_string());
                out.push('\n');
            }
            Format::Text => {
                for row in &self.rows {
                    write!(out, "eq#{} {} trials={}", row.index, row.verdict, row.trials).unwrap();
                    if let Some(d) = row.max_deviation {
                        write!(out, " maxdev={d:.3e}").unwrap();
                    }
                    if let Some(note) = &row.note {
                        write!(out, " ({note})").unwrap();
                    }
                    out.push('\n');
                }
                writeln!(
                    out,
                    "pass={} fail={} indeterminate={}",
                    self.count(Verdict::Pass),
                    self.count(Verdict::Fail),
                    self.count(Verdict::Indeterminate)
                )
                .unwrap();
            }
        }
        out
    }
}

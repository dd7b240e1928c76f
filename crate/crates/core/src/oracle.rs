//! Numeric evaluation and sampled equivalence checking.

use std::collections::BTreeMap;
use std::f64::consts::{E, PI};

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::ast::{free_symbols, BigOpKind, BinOpKind, Bracket, Constant, Expr};
use crate::passes::Renaming;
use crate::rng::SeededRng;

/// Planck constant in J·s, exact by the SI definition.
pub const PLANCK_H: f64 = 6.62607015e-34;

pub fn hbar() -> f64 {
    PLANCK_H / (2.0 * PI)
}

const MAX_ITERATIONS: i64 = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NotEvaluable {
    #[error("contains an opaque command")]
    OpaquePresent,
    #[error("outside the domain")]
    DomainError,
    #[error("no value bound for {0}")]
    UnboundSymbol(String),
    #[error("{0}")]
    Unsupported(String),
}

pub type EvalResult = Result<f64, NotEvaluable>;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignment {
    pub bindings: BTreeMap<String, f64>,
}

impl Assignment {
    pub fn new() -> Assignment {
        Assignment::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Assignment {
        self.bindings.insert(name.to_string(), value);
        self
    }

    pub fn constant(c: Constant) -> f64 {
        match c {
            Constant::Pi => PI,
            Constant::E => E,
            Constant::H => PLANCK_H,
            Constant::HBar => hbar(),
        }
    }

    /// The same values under renamed keys: `x ↦ v` becomes `σ(x) ↦ v`.
    pub fn renamed(&self, sigma: &Renaming) -> Assignment {
        let bindings = self.bindings.iter().map(|(k, v)| (sigma.apply(k).to_string(), *v)).collect();
        Assignment { bindings }
    }
}

fn finite(v: f64) -> EvalResult {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(NotEvaluable::DomainError)
    }
}

fn integer_literal(e: &Expr) -> Option<i64> {
    match e {
        Expr::Number(n) => n.parse::<i64>().ok(),
        Expr::Neg { operand, .. } => integer_literal(operand).map(|v| -v),
        Expr::Group { inner, bracket: Bracket::Paren, .. } => integer_literal(inner),
        _ => None,
    }
}

fn apply_function(name: &str, x: f64) -> EvalResult {
    let v = match name {
        "sin" => x.sin(),
        "cos" => x.cos(),
        "tan" => x.tan(),
        "cot" => 1.0 / x.tan(),
        "sec" => 1.0 / x.cos(),
        "csc" => 1.0 / x.sin(),
        "sinh" => x.sinh(),
        "cosh" => x.cosh(),
        "tanh" => x.tanh(),
        "arcsin" | "arccos" if !(-1.0..=1.0).contains(&x) => return Err(NotEvaluable::DomainError),
        "arcsin" => x.asin(),
        "arccos" => x.acos(),
        "arctan" => x.atan(),
        "ln" | "log" if x <= 0.0 => return Err(NotEvaluable::DomainError),
        "ln" | "log" => x.ln(),
        // Below this the result is subnormal and has lost precision.
        "exp" if x < f64::MIN_POSITIVE.ln() => return Err(NotEvaluable::DomainError),
        "exp" => x.exp(),
        "sqrt" if x < 0.0 => return Err(NotEvaluable::DomainError),
        "sqrt" => x.sqrt(),
        other => return Err(NotEvaluable::Unsupported(format!("unknown function {other}"))),
    };
    finite(v)
}

/// Evaluates `e` over the reals. Failures are values, never panics.
pub fn eval(e: &Expr, a: &Assignment) -> EvalResult {
    match e {
        Expr::Number(n) => n.parse::<f64>().map_err(|_| NotEvaluable::Unsupported(format!("number {n}"))),
        Expr::Symbol(atom) => {
            let key = atom.key();
            a.bindings.get(&key).copied().ok_or(NotEvaluable::UnboundSymbol(key))
        }
        Expr::Constant(c) => Ok(Assignment::constant(*c)),
        Expr::Neg { operand, .. } => Ok(-eval(operand, a)?),
        Expr::BinOp { op, lhs, rhs, .. } => {
            if op.is_mul_family() && *op != BinOpKind::Div && lhs.is_literal_zero() {
                return Ok(0.0);
            }
            let l = eval(lhs, a)?;
            let r = eval(rhs, a)?;
            match op {
                BinOpKind::Add => finite(l + r),
                BinOpKind::Sub => finite(l - r),
                BinOpKind::Mul | BinOpKind::ImplicitMul => finite(l * r),
                BinOpKind::Div if r == 0.0 => Err(NotEvaluable::DomainError),
                BinOpKind::Div => finite(l / r),
                BinOpKind::Pow => finite(l.powf(r)),
            }
        }
        Expr::Fraction { num, den } => {
            let n = eval(num, a)?;
            let d = eval(den, a)?;
            if d == 0.0 {
                return Err(NotEvaluable::DomainError);
            }
            finite(n / d)
        }
        Expr::Function { name, args } => match args.as_slice() {
            [x] => apply_function(name, eval(x, a)?),
            _ => Err(NotEvaluable::Unsupported(format!("{name} with {} arguments", args.len()))),
        },
        Expr::BigOp(b) => match b.kind {
            BigOpKind::Sum | BigOpKind::Prod => {
                let (Some(var), Some(lo), Some(hi)) = (&b.var, &b.lower, &b.upper) else {
                    return Err(NotEvaluable::Unsupported("sum without literal bounds".into()));
                };
                let (Some(lo), Some(hi)) = (integer_literal(lo), integer_literal(hi)) else {
                    return Err(NotEvaluable::Unsupported("sum without literal bounds".into()));
                };
                if hi - lo > MAX_ITERATIONS {
                    return Err(NotEvaluable::Unsupported("range too long to iterate".into()));
                }
                let key = var.key();
                let mut inner = a.clone();
                let mut acc = if b.kind == BigOpKind::Sum { 0.0 } else { 1.0 };
                for k in lo..=hi {
                    inner.bindings.insert(key.clone(), k as f64);
                    let v = eval(&b.body, &inner)?;
                    acc = if b.kind == BigOpKind::Sum { acc + v } else { acc * v };
                }
                finite(acc)
            }
            BigOpKind::Integral | BigOpKind::ContourIntegral => {
                let (Some(var), Some(lo), Some(hi)) = (&b.var, &b.lower, &b.upper) else {
                    return Err(NotEvaluable::Unsupported("integral without bounds".into()));
                };
                if b.kind == BigOpKind::ContourIntegral {
                    return Err(NotEvaluable::Unsupported("contour integral".into()));
                }
                if free_symbols(&b.body).contains(&var.key()) {
                    return Err(NotEvaluable::Unsupported("integrand depends on the variable".into()));
                }
                let lo = eval(lo, a)?;
                let hi = eval(hi, a)?;
                finite((hi - lo) * eval(&b.body, a)?)
            }
        },
        Expr::Partial { .. } => Err(NotEvaluable::Unsupported("derivative".into())),
        Expr::Group { inner, bracket: Bracket::Vert, .. } => Ok(eval(inner, a)?.abs()),
        Expr::Group { inner, .. } => eval(inner, a),
        Expr::Annotated { inner, .. } => eval(inner, a),
        Expr::Opaque(_) => Err(NotEvaluable::OpaquePresent),
        Expr::Relation { .. } | Expr::Rows { .. } => {
            Err(NotEvaluable::Unsupported("relations are compared side by side".into()))
        }
    }
}

/// One value from [−10, −0.1] ∪ [0.1, 10], uniform over the union.
pub fn draw_value(rng: &mut SeededRng) -> f64 {
    let magnitude = rng.gen_range(0.1..=10.0);
    if rng.gen_bool(0.5) {
        magnitude
    } else {
        -magnitude
    }
}

/// Binds every free symbol of `e`, in name order.
pub fn random_assignment(e: &Expr, rng: &mut SeededRng) -> Assignment {
    let mut a = Assignment::new();
    for name in free_symbols(e) {
        a.bindings.insert(name, draw_value(rng));
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Indeterminate => "INDETERMINATE",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub verdict: Verdict,
    pub trials: usize,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("gave up after {redraws} re-drawn assignments")]
pub struct BudgetExhausted {
    pub redraws: usize,
}

pub fn relative_deviation(expected: f64, actual: f64) -> f64 {
    (expected - actual).abs() / expected.abs().max(1.0)
}

/// Compares `original` and `transformed` on random assignments, side by
/// side for relations and rows. `renaming` maps original names to the
/// names used in `transformed`.
pub fn verify_equiv(
    original: &Expr,
    transformed: &Expr,
    renaming: Option<&Renaming>,
    trials: usize,
    tol: f64,
    rng: &mut SeededRng,
) -> Result<VerificationReport, BudgetExhausted> {
    let lhs = original.terms();
    let rhs = transformed.terms();
    if lhs.len() != rhs.len() {
        return Ok(VerificationReport { verdict: Verdict::Fail, trials: 0, max_deviation: f64::INFINITY });
    }
    let identity = Renaming::default();
    let sigma = renaming.unwrap_or(&identity);
    let extra: Vec<String> = free_symbols(transformed).into_iter().collect();
    let budget = trials.saturating_mul(10).max(10);
    let mut redraws = 0;
    let mut done = 0;
    let mut max_deviation: f64 = 0.0;
    let mut indeterminate = false;
    let mut failed = false;
    while done < trials {
        let base = random_assignment(original, rng);
        let mut image = base.renamed(sigma);
        for name in &extra {
            if !image.bindings.contains_key(name) {
                image.bindings.insert(name.clone(), draw_value(rng));
            }
        }
        let results: Vec<(EvalResult, EvalResult)> =
            lhs.iter().zip(&rhs).map(|(l, r)| (eval(l, &base), eval(r, &image))).collect();
        let domain =
            results.iter().any(|(l, r)| *l == Err(NotEvaluable::DomainError) || *r == Err(NotEvaluable::DomainError));
        if domain {
            redraws += 1;
            if redraws > budget {
                return Err(BudgetExhausted { redraws });
            }
            continue;
        }
        done += 1;
        for (l, r) in results {
            match (l, r) {
                (Ok(l), Ok(r)) => {
                    let dev = relative_deviation(l, r);
                    if dev.is_nan() || dev > tol {
                        failed = true;
                    }
                    max_deviation = max_deviation.max(if dev.is_nan() { f64::INFINITY } else { dev });
                }
                (Err(_), Err(_)) => indeterminate = true,
                _ => failed = true,
            }
        }
    }
    let verdict = if failed {
        Verdict::Fail
    } else if indeterminate {
        Verdict::Indeterminate
    } else {
        Verdict::Pass
    };
    Ok(VerificationReport { verdict, trials: done, max_deviation })
}

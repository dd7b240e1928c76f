//! Seeded generators shared by the property, CLI and acceptance tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use zero2hero::ast::{
    Accent, Annotation, Atom, BigOp, BigOpKind, BinOpKind, Bracket, Constant, Expr, Font, Layout, RelOp, Sizing,
};

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const LOSS_EQUATION: &str = include_str!("../fixtures/loss.tex");

// `d`, `e` and `h` are excluded: the first reads as a differential, the
// others as constants.
const LETTERS: &[&str] = &[
    "a", "b", "c", "f", "g", "k", "m", "n", "p", "q", "r", "s", "t", "u", "v", "w", "x", "y", "z", "A", "B", "L", "N",
];
const GREEKS: &[&str] = &["alpha", "beta", "gamma", "theta", "lambda", "mu", "sigma", "omega", "Omega", "Gamma"];
const FUNCS: &[&str] = &["sin", "cos", "tan", "ln", "log", "exp", "sqrt", "sinh", "arctan"];
const OPAQUE: &[&str] = &["\\infty", "\\mycmd{a}", "\\text{for all}", "\\operatorname{tr}", "\\nabla"];
const RELS: &[RelOp] = &[RelOp::Eq, RelOp::Neq, RelOp::Lt, RelOp::Le, RelOp::Approx, RelOp::Equiv];

fn pick<'a, T>(r: &mut TestRng, xs: &'a [T]) -> &'a T {
    xs.choose(r).expect("nonempty")
}

pub fn gen_number(r: &mut TestRng) -> Expr {
    match r.gen_range(0..4) {
        0 => Expr::num(r.gen_range(0..10).to_string()),
        1 => Expr::num(r.gen_range(10..1000).to_string()),
        2 => Expr::num(format!("{}.{}", r.gen_range(0..20), r.gen_range(1..100))),
        _ => Expr::num(r.gen_range(1..5).to_string()),
    }
}

pub fn gen_atom(r: &mut TestRng, depth: u32) -> Atom {
    let mut atom = if r.gen_bool(0.3) { Atom::new(*pick(r, GREEKS)) } else { Atom::new(*pick(r, LETTERS)) };
    if !atom.is_greek() && r.gen_bool(0.15) {
        atom.font = Some(*pick(r, &[Font::Cal, Font::Bold, Font::Roman, Font::Blackboard]));
    }
    if r.gen_bool(0.25) {
        let sub = if depth > 0 && r.gen_bool(0.3) {
            gen_expr(r, depth - 1)
        } else if r.gen_bool(0.5) {
            Expr::num(r.gen_range(0..10).to_string())
        } else {
            Expr::sym(*pick(r, &["i", "j", "k", "n"]))
        };
        atom = atom.with_sub(sub);
    }
    if r.gen_bool(0.1) {
        atom = atom.with_accent(*pick(r, &[Accent::Hat, Accent::Bar, Accent::Tilde]));
    }
    atom
}

fn plain_atom(r: &mut TestRng) -> Atom {
    if r.gen_bool(0.5) {
        Atom::new(*pick(r, &["i", "j", "k", "n"]))
    } else {
        Atom::new(*pick(r, &["theta", "omega", "t", "s", "u"]))
    }
}

fn gen_leaf(r: &mut TestRng) -> Expr {
    match r.gen_range(0..10) {
        0..=2 => gen_number(r),
        3..=7 => Expr::Symbol(gen_atom(r, 0)),
        8 => Expr::Constant(*pick(r, &[Constant::Pi, Constant::E, Constant::HBar, Constant::H])),
        _ => Expr::Opaque(pick(r, OPAQUE).to_string()),
    }
}

/// Any single term in the supported fragment; no relations at the top.
pub fn gen_expr(r: &mut TestRng, depth: u32) -> Expr {
    if depth == 0 || r.gen_bool(0.2) {
        return gen_leaf(r);
    }
    let d = depth - 1;
    match r.gen_range(0..13) {
        0..=3 => {
            let op =
                *pick(r, &[BinOpKind::Add, BinOpKind::Sub, BinOpKind::Mul, BinOpKind::ImplicitMul, BinOpKind::Div]);
            Expr::bin(op, gen_expr(r, d), gen_expr(r, d))
        }
        4 => Expr::pow(gen_expr(r, d), gen_expr(r, d)),
        5 => Expr::neg(gen_expr(r, d)),
        6 => Expr::frac(gen_expr(r, d), gen_expr(r, d)),
        7 => Expr::func(*pick(r, FUNCS), gen_expr(r, d)),
        8 => {
            let bracket = *pick(r, &[Bracket::Paren, Bracket::Square, Bracket::Brace, Bracket::Vert]);
            let sizing = *pick(r, &[Sizing::Plain, Sizing::Auto, Sizing::Fixed(0), Sizing::Fixed(3)]);
            let inner = if r.gen_bool(0.2) { gen_relation(r, d) } else { gen_expr(r, d) };
            Expr::Group { inner: Box::new(inner), bracket, sizing }
        }
        9 => {
            let kind = *pick(r, &[BigOpKind::Sum, BigOpKind::Prod]);
            let var = plain_atom(r);
            let (lower, upper) = match r.gen_range(0..3) {
                0 => (None, None),
                1 => (Some(gen_expr(r, d)), Some(gen_expr(r, d))),
                _ => (Some(gen_number(r)), None),
            };
            Expr::big_op(kind, Some(var), lower, upper, gen_expr(r, d))
        }
        10 => {
            let kind = *pick(r, &[BigOpKind::Integral, BigOpKind::ContourIntegral]);
            let var = plain_atom(r);
            let (lower, upper) = match (kind, r.gen_range(0..3)) {
                (_, 0) => (None, None),
                (BigOpKind::ContourIntegral, _) => (Some(Expr::sym("C")), None),
                _ => (Some(gen_expr(r, d)), Some(gen_expr(r, d))),
            };
            Expr::big_op(kind, Some(var), lower, upper, gen_expr(r, d))
        }
        11 => Expr::Partial { order: r.gen_range(1..=3), wrt: gen_atom(r, 0), operand: Box::new(gen_expr(r, d)) },
        _ => {
            let rows = (0..r.gen_range(1..=3)).map(|_| gen_expr(r, d)).collect();
            let env = pick(r, &["aligned", "gathered"]).to_string();
            Expr::Rows { env: Some(env), rows }
        }
    }
}

pub fn gen_relation(r: &mut TestRng, depth: u32) -> Expr {
    Expr::Relation {
        op: *pick(r, RELS),
        lhs: Box::new(gen_expr(r, depth)),
        rhs: Box::new(gen_expr(r, depth)),
        layout: Layout::NONE,
    }
}

fn maybe_layout(r: &mut TestRng, e: Expr) -> Expr {
    match e {
        Expr::BinOp { op, lhs, rhs, .. } if op.is_additive() && r.gen_bool(0.3) => {
            Expr::BinOp { op, lhs, rhs, layout: Layout { newline: r.gen_bool(0.5), align: r.gen_bool(0.5) } }
        }
        other => other,
    }
}

/// A whole equation: a term, a relation, rows, possibly annotated.
pub fn gen_equation(r: &mut TestRng, depth: u32) -> Expr {
    let body = match r.gen_range(0..6) {
        0 | 1 => gen_expr(r, depth),
        2 | 3 => {
            let lhs = gen_expr(r, depth);
            let rhs = gen_expr(r, depth);
            let rhs = maybe_layout(r, rhs);
            Expr::Relation { op: *pick(r, RELS), lhs: Box::new(lhs), rhs: Box::new(rhs), layout: Layout::NONE }
        }
        4 => {
            let rows = (0..r.gen_range(2..=3)).map(|_| gen_relation(r, depth.saturating_sub(1))).collect();
            Expr::Rows { env: None, rows }
        }
        _ => {
            let rows = (0..r.gen_range(1..=3)).map(|_| gen_relation(r, depth.saturating_sub(1))).collect();
            Expr::Rows { env: Some(pick(r, &["split", "aligned"]).to_string()), rows }
        }
    };
    if r.gen_bool(0.15) {
        let trailing = vec![pick(r, &[Annotation::Punct(','), Annotation::Punct('.')]).clone()];
        let leading = if r.gen_bool(0.5) { vec![Annotation::Command("\\label{eq:gen}".into())] } else { Vec::new() };
        return Expr::Annotated { leading, inner: Box::new(body), trailing };
    }
    body
}

/// Terms the oracle can evaluate: no opaque parts, no partials, only
/// literal bounds, and values kept moderate.
pub fn gen_evaluable(r: &mut TestRng, depth: u32) -> Expr {
    if depth == 0 || r.gen_bool(0.2) {
        return match r.gen_range(0..6) {
            0 | 1 => Expr::num(r.gen_range(1..10).to_string()),
            2 => Expr::Constant(*pick(r, &[Constant::Pi, Constant::E, Constant::HBar, Constant::H])),
            _ => Expr::Symbol(if r.gen_bool(0.3) {
                Atom::new(*pick(r, &["alpha", "theta", "omega"]))
            } else {
                let mut a = Atom::new(*pick(r, &["a", "b", "x", "y", "z"]));
                if r.gen_bool(0.2) {
                    a = a.with_sub(Expr::num(r.gen_range(1..4).to_string()));
                }
                a
            }),
        };
    }
    let d = depth - 1;
    match r.gen_range(0..10) {
        0..=3 => {
            let op = *pick(r, &[BinOpKind::Add, BinOpKind::Sub, BinOpKind::Mul, BinOpKind::ImplicitMul]);
            Expr::bin(op, gen_evaluable(r, d), gen_evaluable(r, d))
        }
        4 => Expr::frac(gen_evaluable(r, d), Expr::add(Expr::num("2"), Expr::pow(gen_evaluable(r, d), Expr::num("2")))),
        5 => Expr::pow(gen_evaluable(r, d), Expr::num(r.gen_range(2..=3).to_string())),
        6 => Expr::neg(gen_evaluable(r, d)),
        7 => Expr::func(*pick(r, &["sin", "cos", "arctan"]), gen_evaluable(r, d)),
        8 => Expr::group(gen_evaluable(r, d)),
        _ => {
            let kind = *pick(r, &[BigOpKind::Sum, BigOpKind::Prod]);
            let hi = r.gen_range(1..=3);
            Expr::big_op(
                kind,
                Some(Atom::new("k")),
                Some(Expr::num("1")),
                Some(Expr::num(hi.to_string())),
                gen_evaluable(r, d),
            )
        }
    }
}

/// An integral whose body does not mention the differential variable.
pub fn gen_constant_integral(r: &mut TestRng) -> (Expr, f64, f64) {
    let lo = r.gen_range(-5..5) as f64;
    let hi = lo + r.gen_range(1..6) as f64;
    let body = gen_evaluable(r, 2);
    let var = Atom::new("t");
    let e = Expr::BigOp(Box::new(BigOp {
        kind: BigOpKind::Integral,
        var: Some(var),
        lower: Some(Expr::num(format!("{lo}"))),
        upper: Some(Expr::num(format!("{hi}"))),
        body,
    }));
    (e, lo, hi)
}

/// Math sources for the document generator; the last three do not parse.
pub const GOOD_MATH: &[&str] = &[
    "x",
    "a + b",
    "\\frac{a}{b}",
    "\\sum_{i=1}^{n} x_i",
    "E = m c^2",
    "\\int_0^1 f(t) \\, dt",
    "\\alpha \\beta",
    "\\left( x + y \\right)^{2}",
    "e^{i \\pi} + 1 = 0",
    "\\sin^2 \\theta + \\cos^2 \\theta = 1",
    " y_{k} \\le 3 ",
];
pub const BAD_MATH: &[&str] = &["x^", "\\frac{a}", "a + + )"];

fn wrap_math(r: &mut TestRng, inner: &str) -> String {
    match r.gen_range(0..5) {
        0 => format!("${inner}$"),
        1 => format!("\\({inner}\\)"),
        2 => format!("$${inner}$$"),
        3 => format!("\\[{inner}\\]"),
        _ => {
            let env = pick(r, &["equation", "equation*", "align", "gather*", "multline"]);
            format!("\\begin{{{env}}}\n{inner}\n\\end{{{env}}}")
        }
    }
}

fn gen_prose(r: &mut TestRng) -> String {
    match r.gen_range(0..9) {
        0 => "Some words about the model. ".into(),
        1 => "It costs \\$5 and \\$6. ".into(),
        2 => "% a comment with $x$ and \\[ inside\n".into(),
        3 => "\\verb|$a$| ".into(),
        4 => "\\begin{verbatim}\n$$ not math $$\n\\end{verbatim}\n".into(),
        5 => "\\section{Intro}\n\n".into(),
        6 => "\\textbf{bold} {braced} text\n".into(),
        7 => "ÄÖ ünïcode ∑ text. ".into(),
        _ => "\n".into(),
    }
}

/// A document mixing prose, comments, verbatim and every math delimiter.
pub fn gen_document(r: &mut TestRng) -> String {
    let mut out = String::from("\\documentclass{article}\n\\begin{document}\n");
    for _ in 0..r.gen_range(1..12) {
        out.push_str(&gen_prose(r));
        if r.gen_bool(0.6) {
            let inner = if r.gen_bool(0.1) { *pick(r, BAD_MATH) } else { *pick(r, GOOD_MATH) };
            let math = wrap_math(r, inner);
            out.push_str(&math);
            out.push(' ');
        }
    }
    out.push_str("\\end{document}\n");
    out
}

/// A document with `good` parseable and `bad` unparseable display equations.
pub fn document_with(good: usize, bad: usize) -> String {
    let mut out = String::from("Intro text.\n\n");
    for i in 0..good + bad {
        let inner =
            if i % 3 == 2 && i / 3 < bad { BAD_MATH[(i / 3) % BAD_MATH.len()] } else { GOOD_MATH[i % GOOD_MATH.len()] };
        out.push_str(&format!("Paragraph {i}.\n\\begin{{equation}}\n{inner}\n\\end{{equation}}\n\n"));
    }
    out
}

pub fn bin_path() -> &'static str {
    env!("CARGO_BIN_EXE_zero2hero")
}

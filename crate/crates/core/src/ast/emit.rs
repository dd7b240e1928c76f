//! Canonical LaTeX emission.
//!
//! [`canonicalize`] inserts the `\left( … \right)` groups that precedence
//! forces, re-associates implicit-multiplication chains to the left and
//! normalizes a few spellings; [`emit`] prints the canonical tree without
//! making any further grouping decisions. Parsing the output yields the
//! canonical tree again.

use super::{Annotation, Atom, BigOp, BigOpKind, BinOpKind, Bracket, Constant, Expr, Layout, Sizing, SIZE_COMMANDS};

const PREC_RELATION: u8 = 0;
const PREC_ADD: u8 = 1;
const PREC_NEG: u8 = 2;
const PREC_MUL: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Relation { .. } | Expr::Annotated { .. } | Expr::Rows { env: None, .. } => PREC_RELATION,
        Expr::BinOp { op, .. } if op.is_additive() => PREC_ADD,
        Expr::BinOp { op: BinOpKind::Pow, .. } => PREC_POW,
        Expr::BinOp { .. } => PREC_MUL,
        Expr::Neg { .. } => PREC_NEG,
        _ => PREC_ATOM,
    }
}

/// Whether the rightmost factor of `e` swallows whatever follows it
/// (big operators and derivatives take the rest of the product).
fn ends_greedy(e: &Expr) -> bool {
    match e {
        Expr::BigOp(_) | Expr::Partial { .. } => true,
        Expr::BinOp { op, rhs, .. } if op.is_mul_family() => ends_greedy(rhs),
        _ => false,
    }
}

fn starts_with_digit(e: &Expr) -> bool {
    match e {
        Expr::Number(_) => true,
        Expr::BinOp { op: BinOpKind::Pow, lhs, .. } => starts_with_digit(lhs),
        _ => false,
    }
}

fn wrap(e: Expr) -> Expr {
    Expr::group(e)
}

fn at_least(e: Expr, min: u8) -> Expr {
    if prec(&e) < min {
        wrap(e)
    } else {
        e
    }
}

/// Function arguments printed without parentheses.
pub(crate) fn is_bare_arg(e: &Expr) -> bool {
    matches!(e, Expr::Symbol(_) | Expr::Number(_) | Expr::Constant(_))
}

/// Functions printed as `\name` with optional `^{…}` before the argument.
pub(crate) fn is_named_function(name: &str) -> bool {
    name != "exp" && name != "sqrt"
}

fn pow_base_ok(e: &Expr) -> bool {
    match e {
        Expr::Symbol(_) | Expr::Number(_) | Expr::Group { .. } | Expr::Opaque(_) => true,
        Expr::Rows { env: Some(_), .. } => true,
        Expr::Constant(c) => *c != Constant::E,
        Expr::Function { name, .. } => name != "exp",
        _ => false,
    }
}

pub fn canonicalize(e: &Expr) -> Expr {
    canon(e, true)
}

fn keep(layout: Layout, layout_ok: bool) -> Layout {
    if layout_ok {
        layout
    } else {
        Layout::NONE
    }
}

fn canon_atom(a: &Atom) -> Atom {
    Atom {
        name: a.name.clone(),
        font: a.font,
        sub: a.sub.as_ref().map(|s| Box::new(canon(s, false))),
        accent: a.accent,
    }
}

fn make_mul(op: BinOpKind, lhs: Expr, rhs: Expr, layout: Layout) -> Expr {
    let op = if op == BinOpKind::ImplicitMul && starts_with_digit(&rhs) { BinOpKind::Mul } else { op };
    let lhs = if prec(&lhs) < PREC_MUL || ends_greedy(&lhs) { wrap(lhs) } else { lhs };
    let rhs = at_least(rhs, PREC_POW);
    let layout = if op == BinOpKind::ImplicitMul { Layout::NONE } else { layout };
    Expr::BinOp { op, lhs: Box::new(lhs), rhs: Box::new(rhs), layout }
}

fn implicit_factors<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
    match e {
        Expr::BinOp { op: BinOpKind::ImplicitMul, lhs, rhs, .. } => {
            implicit_factors(lhs, out);
            implicit_factors(rhs, out);
        }
        other => out.push(other),
    }
}

fn canon(e: &Expr, layout_ok: bool) -> Expr {
    match e {
        Expr::Number(_) | Expr::Constant(_) | Expr::Opaque(_) => e.clone(),
        Expr::Symbol(a) => Expr::Symbol(canon_atom(a)),
        Expr::Neg { operand, layout } => Expr::Neg {
            operand: Box::new(at_least(canon(operand, layout_ok), PREC_NEG)),
            layout: keep(*layout, layout_ok),
        },
        Expr::BinOp { op: BinOpKind::Pow, lhs, rhs, .. } => {
            let base = canon(lhs, false);
            let exponent = canon(rhs, false);
            if base == Expr::Constant(Constant::E) {
                return Expr::func("exp", exponent);
            }
            let base = if pow_base_ok(&base) { base } else { wrap(base) };
            Expr::BinOp { op: BinOpKind::Pow, lhs: Box::new(base), rhs: Box::new(exponent), layout: Layout::NONE }
        }
        Expr::BinOp { op, lhs, rhs, layout } if op.is_additive() => Expr::BinOp {
            op: *op,
            lhs: Box::new(at_least(canon(lhs, layout_ok), PREC_ADD)),
            rhs: Box::new(at_least(canon(rhs, layout_ok), PREC_NEG)),
            layout: keep(*layout, layout_ok),
        },
        Expr::BinOp { op: BinOpKind::ImplicitMul, .. } => {
            let mut factors = Vec::new();
            implicit_factors(e, &mut factors);
            let mut iter = factors.into_iter().map(|f| canon(f, layout_ok));
            let first = iter.next().expect("at least two factors");
            iter.fold(first, |acc, f| make_mul(BinOpKind::ImplicitMul, acc, f, Layout::NONE))
        }
        Expr::BinOp { op, lhs, rhs, layout } => {
            make_mul(*op, canon(lhs, layout_ok), canon(rhs, layout_ok), keep(*layout, layout_ok))
        }
        Expr::Relation { op, lhs, rhs, layout } => Expr::Relation {
            op: *op,
            lhs: Box::new(at_least(canon(lhs, layout_ok), PREC_RELATION)),
            rhs: Box::new(at_least(canon(rhs, layout_ok), PREC_ADD)),
            layout: keep(*layout, layout_ok),
        },
        Expr::Fraction { num, den } => Expr::frac(canon(num, false), canon(den, false)),
        Expr::Function { name, args } => {
            Expr::Function { name: name.clone(), args: args.iter().map(|a| canon(a, false)).collect() }
        }
        Expr::BigOp(b) => Expr::BigOp(Box::new(BigOp {
            kind: b.kind,
            var: b.var.as_ref().map(canon_atom),
            lower: b.lower.as_ref().map(|x| canon(x, false)),
            upper: b.upper.as_ref().map(|x| canon(x, false)),
            body: at_least(canon(&b.body, layout_ok), PREC_MUL),
        })),
        Expr::Partial { order, wrt, operand } => Expr::Partial {
            order: *order,
            wrt: canon_atom(wrt),
            operand: Box::new(at_least(canon(operand, layout_ok), PREC_MUL)),
        },
        Expr::Group { inner, bracket, sizing } => {
            let sizing = if *bracket == Bracket::Vert { Sizing::Auto } else { *sizing };
            let inner_ok = matches!(sizing, Sizing::Fixed(_)) && layout_ok;
            Expr::Group { inner: Box::new(canon(inner, inner_ok)), bracket: *bracket, sizing }
        }
        Expr::Rows { env, rows } => {
            let row_ok = env.is_some() || layout_ok;
            let rows = rows
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let r = canon(r, row_ok);
                    if i > 0 && starts_with_minus(&r) {
                        shield_row(r)
                    } else {
                        r
                    }
                })
                .collect();
            Expr::Rows { env: env.clone(), rows }
        }
        Expr::Annotated { leading, inner, trailing } => {
            annotate(canon(inner, layout_ok), leading.clone(), trailing.clone())
        }
    }
}

/// A row opening with `-` would read as a continuation of the row above.
fn starts_with_minus(e: &Expr) -> bool {
    match e {
        Expr::Neg { layout, .. } => !layout.newline,
        Expr::BinOp { lhs, .. } | Expr::Relation { lhs, .. } => starts_with_minus(lhs),
        Expr::Annotated { leading, inner, .. } if leading.is_empty() => starts_with_minus(inner),
        _ => false,
    }
}

fn shield_row(e: Expr) -> Expr {
    match e {
        Expr::Annotated { leading, inner, trailing } => {
            Expr::Annotated { leading, inner: Box::new(shield_row(*inner)), trailing }
        }
        other => canon(&wrap(other), false),
    }
}

/// Annotations on a bare list of rows belong to its first and last rows,
/// which is where the parser attaches them.
fn annotate(e: Expr, leading: Vec<Annotation>, trailing: Vec<Annotation>) -> Expr {
    match e {
        Expr::Rows { env: None, mut rows } if !rows.is_empty() => {
            let first = rows.remove(0);
            rows.insert(0, annotate(first, leading, Vec::new()));
            let last = rows.pop().expect("nonempty");
            rows.push(annotate(last, Vec::new(), trailing));
            Expr::Rows { env: None, rows }
        }
        Expr::Annotated { leading: l, inner, trailing: t } => {
            let leading = leading.into_iter().chain(l).collect();
            let trailing = t.into_iter().chain(trailing).collect();
            Expr::Annotated { leading, inner, trailing }
        }
        other if leading.is_empty() && trailing.is_empty() => other,
        other => Expr::Annotated { leading, inner: Box::new(other), trailing },
    }
}

/// Prints `e` as LaTeX math. Equal trees print identical bytes.
pub fn emit(e: &Expr) -> String {
    let mut out = String::new();
    write(&canonicalize(e), &mut out);
    out
}

pub(crate) fn emit_atom(a: &Atom) -> String {
    let mut out = String::new();
    write_atom(&canon_atom(a), &mut out);
    out
}

fn write_atom(a: &Atom, out: &mut String) {
    if let Some(acc) = a.accent {
        out.push('\\');
        out.push_str(acc.command());
        out.push('{');
    }
    let name = if a.is_greek() { format!("\\{}", a.name) } else { a.name.clone() };
    match a.font {
        Some(font) => {
            out.push('\\');
            out.push_str(font.command());
            out.push('{');
            out.push_str(&name);
            out.push('}');
        }
        None => out.push_str(&name),
    }
    if let Some(sub) = &a.sub {
        out.push_str("_{");
        write(sub, out);
        out.push('}');
    }
    if a.accent.is_some() {
        out.push('}');
    }
}

fn write_layout(layout: Layout, out: &mut String) {
    if layout.newline {
        out.push_str("\\\\ ");
    }
    if layout.align {
        out.push('&');
    }
}

fn write_function_arg(arg: &Expr, out: &mut String) {
    if is_bare_arg(arg) {
        let mut s = String::new();
        write(arg, &mut s);
        if !s.starts_with('\\') {
            out.push(' ');
        }
        out.push_str(&s);
    } else {
        out.push_str("\\left( ");
        write(arg, out);
        out.push_str(" \\right)");
    }
}

fn write_function(name: &str, args: &[Expr], power: Option<&Expr>, out: &mut String) {
    match (name, args) {
        ("exp", [arg]) => {
            out.push_str("e^{");
            write(arg, out);
            out.push('}');
        }
        ("sqrt", [arg]) => {
            out.push_str("\\sqrt{");
            write(arg, out);
            out.push('}');
        }
        _ => {
            out.push('\\');
            out.push_str(name);
            if let Some(p) = power {
                out.push_str("^{");
                write(p, out);
                out.push('}');
            }
            match args {
                [arg] => write_function_arg(arg, out),
                _ => {
                    out.push_str("\\left( ");
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        write(a, out);
                    }
                    out.push_str(" \\right)");
                }
            }
        }
    }
}

fn write_group(inner: &Expr, bracket: Bracket, sizing: Sizing, out: &mut String) {
    match sizing {
        Sizing::Plain => {
            out.push_str(bracket.open());
            out.push(' ');
            write(inner, out);
            out.push(' ');
            out.push_str(bracket.close());
        }
        Sizing::Auto => {
            out.push_str("\\left");
            out.push_str(bracket.open());
            out.push(' ');
            write(inner, out);
            out.push_str(" \\right");
            out.push_str(bracket.close());
        }
        Sizing::Fixed(n) => {
            let cmd = SIZE_COMMANDS[n as usize % SIZE_COMMANDS.len()];
            out.push('\\');
            out.push_str(cmd);
            out.push_str(bracket.open());
            out.push(' ');
            write(inner, out);
            out.push_str(" \\");
            out.push_str(cmd);
            out.push_str(bracket.close());
        }
    }
}

fn write_big_op(b: &BigOp, out: &mut String) {
    out.push('\\');
    out.push_str(b.kind.command());
    match (b.kind, &b.var, &b.lower) {
        (BigOpKind::Sum | BigOpKind::Prod, Some(var), Some(lower)) => {
            out.push_str("_{");
            write_atom(var, out);
            out.push('=');
            write(lower, out);
            out.push('}');
        }
        (BigOpKind::Sum | BigOpKind::Prod, Some(var), None) => {
            out.push_str("_{");
            write_atom(var, out);
            out.push('}');
        }
        (_, _, Some(lower)) => {
            out.push_str("_{");
            write(lower, out);
            out.push('}');
        }
        _ => {}
    }
    if let Some(upper) = &b.upper {
        out.push_str("^{");
        write(upper, out);
        out.push('}');
    }
    out.push(' ');
    write(&b.body, out);
    if b.kind.is_integral() {
        if let Some(var) = &b.var {
            out.push_str(" \\, d");
            write_atom(var, out);
        }
    }
}

fn write(e: &Expr, out: &mut String) {
    match e {
        Expr::Number(n) => out.push_str(n),
        Expr::Symbol(a) => write_atom(a, out),
        Expr::Constant(c) => out.push_str(match c {
            Constant::Pi => "\\pi",
            Constant::E => "e",
            Constant::HBar => "\\hbar",
            Constant::H => "h",
        }),
        Expr::Neg { operand, layout } => {
            write_layout(*layout, out);
            out.push('-');
            write(operand, out);
        }
        Expr::BinOp { op: BinOpKind::Pow, lhs, rhs, .. } => match lhs.as_ref() {
            Expr::Function { name, args } if is_named_function(name) => write_function(name, args, Some(rhs), out),
            base => {
                write(base, out);
                out.push_str("^{");
                write(rhs, out);
                out.push('}');
            }
        },
        Expr::BinOp { op: BinOpKind::ImplicitMul, lhs, rhs, .. } => {
            write(lhs, out);
            out.push(' ');
            write(rhs, out);
        }
        Expr::BinOp { op, lhs, rhs, layout } => {
            write(lhs, out);
            out.push(' ');
            write_layout(*layout, out);
            out.push_str(match op {
                BinOpKind::Add => "+",
                BinOpKind::Sub => "-",
                BinOpKind::Mul => "\\cdot",
                BinOpKind::Div => "/",
                BinOpKind::ImplicitMul | BinOpKind::Pow => unreachable!("handled above"),
            });
            out.push(' ');
            write(rhs, out);
        }
        Expr::Relation { op, lhs, rhs, layout } => {
            write(lhs, out);
            out.push(' ');
            write_layout(*layout, out);
            out.push_str(op.latex());
            out.push(' ');
            write(rhs, out);
        }
        Expr::Fraction { num, den } => {
            out.push_str("\\frac{");
            write(num, out);
            out.push_str("}{");
            write(den, out);
            out.push('}');
        }
        Expr::Function { name, args } => write_function(name, args, None, out),
        Expr::BigOp(b) => write_big_op(b, out),
        Expr::Partial { order, wrt, operand } => {
            out.push_str("\\frac{\\partial");
            if *order > 1 {
                out.push_str(&format!("^{{{order}}}"));
            }
            out.push_str("}{\\partial ");
            write_atom(wrt, out);
            if *order > 1 {
                out.push_str(&format!("^{{{order}}}"));
            }
            out.push_str("} ");
            write(operand, out);
        }
        Expr::Group { inner, bracket, sizing } => write_group(inner, *bracket, *sizing, out),
        Expr::Opaque(raw) => out.push_str(raw),
        Expr::Rows { env, rows } => {
            if let Some(env) = env {
                out.push_str(&format!("\\begin{{{env}}} "));
            }
            for (i, r) in rows.iter().enumerate() {
                if i > 0 {
                    out.push_str(" \\\\ ");
                }
                write(r, out);
            }
            if let Some(env) = env {
                out.push_str(&format!(" \\end{{{env}}}"));
            }
        }
        Expr::Annotated { leading, inner, trailing } => {
            for a in leading {
                if let Annotation::Command(raw) = a {
                    out.push_str(raw);
                    out.push(' ');
                }
            }
            write(inner, out);
            for a in trailing {
                match a {
                    Annotation::Punct(c) => out.push(*c),
                    Annotation::Command(raw) => {
                        out.push(' ');
                        out.push_str(raw);
                    }
                }
            }
        }
    }
}

//! Math expression tree, its LaTeX lexer, parser and emitter.

mod emit;
mod lexer;
mod parser;

use std::collections::BTreeSet;
use std::fmt;

pub use emit::{canonicalize, emit};
pub use lexer::{is_spacing_command, tokenize, LexError, Token, TokenKind};
pub use parser::{parse, parse_math, ParseOutcome, Unparseable, ROW_ENVIRONMENTS};

/// Greek letter command names, lowercase first. `pi` is listed for
/// opaque-byte matching; a bare `\pi` parses to [`Constant::Pi`].
pub const GREEK: &[&str] = &[
    "alpha",
    "beta",
    "gamma",
    "delta",
    "epsilon",
    "varepsilon",
    "zeta",
    "eta",
    "theta",
    "vartheta",
    "iota",
    "kappa",
    "varkappa",
    "lambda",
    "mu",
    "nu",
    "xi",
    "pi",
    "varpi",
    "rho",
    "varrho",
    "sigma",
    "varsigma",
    "tau",
    "upsilon",
    "phi",
    "varphi",
    "chi",
    "psi",
    "omega",
    "Gamma",
    "Delta",
    "Theta",
    "Lambda",
    "Xi",
    "Pi",
    "Sigma",
    "Upsilon",
    "Phi",
    "Psi",
    "Omega",
];

pub fn is_greek_name(name: &str) -> bool {
    GREEK.contains(&name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Accent {
    Hat,
    Bar,
    Tilde,
}

impl Accent {
    pub fn command(self) -> &'static str {
        match self {
            Accent::Hat => "hat",
            Accent::Bar => "bar",
            Accent::Tilde => "tilde",
        }
    }

    pub fn from_command(name: &str) -> Option<Self> {
        match name {
            "hat" => Some(Accent::Hat),
            "bar" => Some(Accent::Bar),
            "tilde" => Some(Accent::Tilde),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Font {
    Cal,
    Bold,
    Roman,
    Blackboard,
}

impl Font {
    pub fn command(self) -> &'static str {
        match self {
            Font::Cal => "mathcal",
            Font::Bold => "mathbf",
            Font::Roman => "mathrm",
            Font::Blackboard => "mathbb",
        }
    }

    pub fn from_command(name: &str) -> Option<Self> {
        match name {
            "mathcal" => Some(Font::Cal),
            "mathbf" => Some(Font::Bold),
            "mathrm" => Some(Font::Roman),
            "mathbb" => Some(Font::Blackboard),
            _ => None,
        }
    }
}

/// A named variable: a Latin letter or a Greek command name, with an
/// optional font, subscript and accent. `y_i` and `\hat{y_i}` are atoms,
/// never indexing operations.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub name: String,
    pub font: Option<Font>,
    pub sub: Option<Box<Expr>>,
    pub accent: Option<Accent>,
}

impl Atom {
    pub fn new(name: impl Into<String>) -> Self {
        Atom { name: name.into(), font: None, sub: None, accent: None }
    }

    pub fn with_sub(mut self, sub: Expr) -> Self {
        self.sub = Some(Box::new(sub));
        self
    }

    pub fn with_accent(mut self, accent: Accent) -> Self {
        self.accent = Some(accent);
        self
    }

    pub fn is_greek(&self) -> bool {
        is_greek_name(&self.name)
    }

    /// Identity of the symbol: its canonical LaTeX spelling.
    pub fn key(&self) -> String {
        emit::emit_atom(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constant {
    Pi,
    E,
    HBar,
    /// Planck constant `h`.
    H,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOpKind {
    Add,
    Sub,
    Mul,
    ImplicitMul,
    Div,
    Pow,
}

impl BinOpKind {
    pub fn is_mul_family(self) -> bool {
        matches!(self, BinOpKind::Mul | BinOpKind::ImplicitMul | BinOpKind::Div)
    }

    pub fn is_additive(self) -> bool {
        matches!(self, BinOpKind::Add | BinOpKind::Sub)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelOp {
    Eq,
    Neq,
    Lt,
    Gt,
    Le,
    Ge,
    Approx,
    Equiv,
}

impl RelOp {
    pub fn latex(self) -> &'static str {
        match self {
            RelOp::Eq => "=",
            RelOp::Neq => "\\neq",
            RelOp::Lt => "<",
            RelOp::Gt => ">",
            RelOp::Le => "\\leq",
            RelOp::Ge => "\\geq",
            RelOp::Approx => "\\approx",
            RelOp::Equiv => "\\equiv",
        }
    }
}

/// Line-break (`\\`) and alignment (`&`) markers that precede an operator
/// inside multi-line environments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct Layout {
    pub newline: bool,
    pub align: bool,
}

impl Layout {
    pub const NONE: Layout = Layout { newline: false, align: false };

    pub fn is_none(self) -> bool {
        !self.newline && !self.align
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BigOpKind {
    Sum,
    Prod,
    Integral,
    ContourIntegral,
}

impl BigOpKind {
    pub fn command(self) -> &'static str {
        match self {
            BigOpKind::Sum => "sum",
            BigOpKind::Prod => "prod",
            BigOpKind::Integral => "int",
            BigOpKind::ContourIntegral => "oint",
        }
    }

    pub fn is_integral(self) -> bool {
        matches!(self, BigOpKind::Integral | BigOpKind::ContourIntegral)
    }
}

/// A sum, product or integral. For integrals `var` is the differential
/// variable and is required; for sums and products it is the index.
#[derive(Debug, Clone, PartialEq)]
pub struct BigOp {
    pub kind: BigOpKind,
    pub var: Option<Atom>,
    pub lower: Option<Expr>,
    pub upper: Option<Expr>,
    pub body: Expr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bracket {
    Paren,
    Square,
    Brace,
    Vert,
}

impl Bracket {
    pub fn open(self) -> &'static str {
        match self {
            Bracket::Paren => "(",
            Bracket::Square => "[",
            Bracket::Brace => "\\{",
            Bracket::Vert => "|",
        }
    }

    pub fn close(self) -> &'static str {
        match self {
            Bracket::Paren => ")",
            Bracket::Square => "]",
            Bracket::Brace => "\\}",
            Bracket::Vert => "|",
        }
    }
}

/// How a bracket pair is sized in the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sizing {
    /// Bare `(`…`)`.
    Plain,
    /// `\left(`…`\right)`.
    Auto,
    /// `\big`, `\Big`, `\bigg`, `\Bigg` (0..=3).
    Fixed(u8),
}

pub const SIZE_COMMANDS: [&str; 4] = ["big", "Big", "bigg", "Bigg"];

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Decimal literal stored exactly as written.
    Number(String),
    Symbol(Atom),
    Constant(Constant),
    Neg {
        operand: Box<Expr>,
        layout: Layout,
    },
    BinOp {
        op: BinOpKind,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
        layout: Layout,
    },
    Relation {
        op: RelOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
        layout: Layout,
    },
    Fraction {
        num: Box<Expr>,
        den: Box<Expr>,
    },
    Function {
        name: String,
        args: Vec<Expr>,
    },
    BigOp(Box<BigOp>),
    Partial {
        order: u32,
        wrt: Atom,
        operand: Box<Expr>,
    },
    Group {
        inner: Box<Expr>,
        bracket: Bracket,
        sizing: Sizing,
    },
    /// Unparsed source preserved byte for byte.
    Opaque(String),
    /// `\\`-separated rows; `env` names a nested `split`/`aligned`.
    Rows {
        env: Option<String>,
        rows: Vec<Expr>,
    },
    /// Labels, tags and sentence punctuation around one row.
    Annotated {
        leading: Vec<Annotation>,
        inner: Box<Expr>,
        trailing: Vec<Annotation>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Annotation {
    /// `,` `.` or `;` closing a displayed sentence.
    Punct(char),
    /// `\label{..}`, `\tag{..}`, `\nonumber`, `\notag`, verbatim.
    Command(String),
}

/// Variant tag used by the complexity metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Number,
    Symbol,
    Greek,
    Constant,
    Neg,
    BinOp,
    Relation,
    Fraction,
    Function,
    BigOp,
    Partial,
    Group,
    Opaque,
    Rows,
    Annotated,
}

// `add`, `mul` and `neg` build trees; they are not arithmetic.
#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn num(text: impl Into<String>) -> Expr {
        Expr::Number(text.into())
    }

    pub fn sym(name: impl Into<String>) -> Expr {
        Expr::Symbol(Atom::new(name))
    }

    pub fn bin(op: BinOpKind, lhs: Expr, rhs: Expr) -> Expr {
        Expr::BinOp { op, lhs: Box::new(lhs), rhs: Box::new(rhs), layout: Layout::NONE }
    }

    pub fn add(lhs: Expr, rhs: Expr) -> Expr {
        Expr::bin(BinOpKind::Add, lhs, rhs)
    }

    pub fn mul(lhs: Expr, rhs: Expr) -> Expr {
        Expr::bin(BinOpKind::Mul, lhs, rhs)
    }

    pub fn imul(lhs: Expr, rhs: Expr) -> Expr {
        Expr::bin(BinOpKind::ImplicitMul, lhs, rhs)
    }

    pub fn pow(base: Expr, exp: Expr) -> Expr {
        Expr::bin(BinOpKind::Pow, base, exp)
    }

    pub fn neg(operand: Expr) -> Expr {
        Expr::Neg { operand: Box::new(operand), layout: Layout::NONE }
    }

    pub fn frac(num: Expr, den: Expr) -> Expr {
        Expr::Fraction { num: Box::new(num), den: Box::new(den) }
    }

    pub fn func(name: impl Into<String>, arg: Expr) -> Expr {
        Expr::Function { name: name.into(), args: vec![arg] }
    }

    pub fn group(inner: Expr) -> Expr {
        Expr::Group { inner: Box::new(inner), bracket: Bracket::Paren, sizing: Sizing::Auto }
    }

    pub fn big_op(kind: BigOpKind, var: Option<Atom>, lower: Option<Expr>, upper: Option<Expr>, body: Expr) -> Expr {
        Expr::BigOp(Box::new(BigOp { kind, var, lower, upper, body }))
    }

    pub fn kind(&self) -> NodeKind {
        match self {
            Expr::Number(_) => NodeKind::Number,
            Expr::Symbol(a) if a.is_greek() => NodeKind::Greek,
            Expr::Symbol(_) => NodeKind::Symbol,
            Expr::Constant(_) => NodeKind::Constant,
            Expr::Neg { .. } => NodeKind::Neg,
            Expr::BinOp { .. } => NodeKind::BinOp,
            Expr::Relation { .. } => NodeKind::Relation,
            Expr::Fraction { .. } => NodeKind::Fraction,
            Expr::Function { .. } => NodeKind::Function,
            Expr::BigOp(_) => NodeKind::BigOp,
            Expr::Partial { .. } => NodeKind::Partial,
            Expr::Group { .. } => NodeKind::Group,
            Expr::Opaque(_) => NodeKind::Opaque,
            Expr::Rows { .. } => NodeKind::Rows,
            Expr::Annotated { .. } => NodeKind::Annotated,
        }
    }

    /// Direct sub-expressions, excluding atoms held by binders and
    /// derivatives (see [`Expr::visit`] for a walk that includes them).
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Number(_) | Expr::Constant(_) | Expr::Opaque(_) => vec![],
            Expr::Symbol(a) => a.sub.as_deref().into_iter().collect(),
            Expr::Neg { operand, .. } => vec![operand],
            Expr::BinOp { lhs, rhs, .. } | Expr::Relation { lhs, rhs, .. } => vec![lhs, rhs],
            Expr::Fraction { num, den } => vec![num, den],
            Expr::Function { args, .. } => args.iter().collect(),
            Expr::BigOp(b) => {
                let mut out: Vec<&Expr> = Vec::new();
                out.extend(b.lower.as_ref());
                out.extend(b.upper.as_ref());
                out.push(&b.body);
                out
            }
            Expr::Partial { operand, .. } => vec![operand],
            Expr::Group { inner, .. } | Expr::Annotated { inner, .. } => vec![inner],
            Expr::Rows { rows, .. } => rows.iter().collect(),
        }
    }

    /// Pre-order walk over every node, including binder and derivative
    /// atoms presented as `Symbol` nodes.
    pub fn visit(&self, f: &mut dyn FnMut(&Expr, usize)) {
        self.visit_at(1, f)
    }

    fn visit_at(&self, depth: usize, f: &mut dyn FnMut(&Expr, usize)) {
        f(self, depth);
        match self {
            Expr::BigOp(b) => {
                if let Some(v) = &b.var {
                    Expr::Symbol(v.clone()).visit_at(depth + 1, f);
                }
            }
            Expr::Partial { wrt, .. } => Expr::Symbol(wrt.clone()).visit_at(depth + 1, f),
            _ => {}
        }
        for c in self.children() {
            c.visit_at(depth + 1, f);
        }
    }

    /// Equation-level parts: rows, relation sides and punctuation are
    /// structure, and everything below them is a term.
    pub fn terms(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        self.collect_terms(&mut out);
        out
    }

    fn collect_terms<'a>(&'a self, out: &mut Vec<&'a Expr>) {
        match self {
            Expr::Rows { rows, .. } => rows.iter().for_each(|r| r.collect_terms(out)),
            Expr::Relation { lhs, rhs, .. } => {
                lhs.collect_terms(out);
                rhs.collect_terms(out);
            }
            Expr::Annotated { inner, .. } => inner.collect_terms(out),
            other => out.push(other),
        }
    }

    /// Rebuilds the equation with every term replaced by `f(term)`.
    pub fn map_terms(&self, f: &mut dyn FnMut(&Expr) -> Expr) -> Expr {
        match self {
            Expr::Rows { env, rows } => {
                Expr::Rows { env: env.clone(), rows: rows.iter().map(|r| r.map_terms(f)).collect() }
            }
            Expr::Relation { op, lhs, rhs, layout } => {
                let lhs = lhs.map_terms(f);
                let rhs = rhs.map_terms(f);
                Expr::Relation { op: *op, lhs: Box::new(lhs), rhs: Box::new(rhs), layout: *layout }
            }
            Expr::Annotated { leading, inner, trailing } => Expr::Annotated {
                leading: leading.clone(),
                inner: Box::new(inner.map_terms(f)),
                trailing: trailing.clone(),
            },
            other => f(other),
        }
    }

    pub fn contains(&self, pred: &dyn Fn(&Expr) -> bool) -> bool {
        let mut found = false;
        self.visit(&mut |e, _| found |= pred(e));
        found
    }

    pub fn is_literal_zero(&self) -> bool {
        matches!(self, Expr::Number(n) if n.parse::<f64>().map(|v| v == 0.0).unwrap_or(false))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&emit(self))
    }
}

/// Names occurring free in `e`. Binder variables are excluded inside the
/// body they scope; opaque nodes contribute every command name and letter
/// found in their raw bytes.
pub fn free_symbols(e: &Expr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_free(e, &mut Vec::new(), true, &mut out);
    out
}

/// Like [`free_symbols`] but ignoring opaque nodes: only symbols that are
/// real atoms of the tree.
pub fn free_atoms(e: &Expr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_free(e, &mut Vec::new(), false, &mut out);
    out
}

fn collect_free(e: &Expr, bound: &mut Vec<String>, opaque: bool, out: &mut BTreeSet<String>) {
    match e {
        Expr::Symbol(a) => {
            let key = a.key();
            if !bound.contains(&key) {
                out.insert(key);
            }
        }
        Expr::Partial { wrt, operand, .. } => {
            let key = wrt.key();
            if !bound.contains(&key) {
                out.insert(key);
            }
            collect_free(operand, bound, opaque, out);
        }
        Expr::BigOp(b) => {
            for bound_expr in [&b.lower, &b.upper].into_iter().flatten() {
                collect_free(bound_expr, bound, opaque, out);
            }
            match &b.var {
                Some(v) => {
                    bound.push(v.key());
                    collect_free(&b.body, bound, opaque, out);
                    bound.pop();
                }
                None => collect_free(&b.body, bound, opaque, out),
            }
        }
        Expr::Opaque(raw) if opaque => {
            for name in opaque_identifiers(raw) {
                if !bound.contains(&name) {
                    out.insert(name);
                }
            }
        }
        // Subscripts are part of the atom's identity and are not scanned.
        other => {
            for c in other.children() {
                collect_free(c, bound, opaque, out);
            }
        }
    }
}

/// Command names (`\name`) and standalone ASCII letters in opaque bytes.
pub fn opaque_identifiers(raw: &str) -> Vec<String> {
    let bytes = raw.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'\\' {
            let start = i + 1;
            let mut j = start;
            while j < bytes.len() && bytes[j].is_ascii_alphabetic() {
                j += 1;
            }
            if j > start {
                let name = &raw[start..j];
                out.push(if is_greek_name(name) { format!("\\{name}") } else { name.to_string() });
                i = j;
            } else {
                i += 2;
            }
        } else {
            if bytes[i].is_ascii_alphabetic() {
                out.push((bytes[i] as char).to_string());
            }
            i += 1;
        }
    }
    out
}

/// Every atom key and every base name anywhere in `e`, bound or free,
/// including inside subscripts. Fresh names must avoid all of these.
pub fn all_names(e: &Expr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    e.visit(&mut |node, _| match node {
        Expr::Symbol(a) => {
            out.insert(a.key());
            out.insert(a.name.clone());
        }
        Expr::Opaque(raw) => {
            for name in opaque_identifiers(raw) {
                out.insert(name.trim_start_matches('\\').to_string());
                out.insert(name);
            }
        }
        _ => {}
    });
    out
}

/// Renames free occurrences of the atom `old` (by key) to `new`.
/// Binders shadowing `old` stop the rename inside their body.
pub fn rename_free(e: &Expr, old: &str, new: &Atom) -> Expr {
    match e {
        Expr::Symbol(a) if a.key() == old => Expr::Symbol(new.clone()),
        Expr::Symbol(_) | Expr::Number(_) | Expr::Constant(_) | Expr::Opaque(_) => e.clone(),
        Expr::Partial { order, wrt, operand } => Expr::Partial {
            order: *order,
            wrt: if wrt.key() == old { new.clone() } else { wrt.clone() },
            operand: Box::new(rename_free(operand, old, new)),
        },
        Expr::BigOp(b) => {
            let shadowed = b.var.as_ref().is_some_and(|v| v.key() == old);
            Expr::BigOp(Box::new(BigOp {
                kind: b.kind,
                var: b.var.clone(),
                lower: b.lower.as_ref().map(|x| rename_free(x, old, new)),
                upper: b.upper.as_ref().map(|x| rename_free(x, old, new)),
                body: if shadowed { b.body.clone() } else { rename_free(&b.body, old, new) },
            }))
        }
        Expr::Neg { operand, layout } => {
            Expr::Neg { operand: Box::new(rename_free(operand, old, new)), layout: *layout }
        }
        Expr::BinOp { op, lhs, rhs, layout } => Expr::BinOp {
            op: *op,
            lhs: Box::new(rename_free(lhs, old, new)),
            rhs: Box::new(rename_free(rhs, old, new)),
            layout: *layout,
        },
        Expr::Relation { op, lhs, rhs, layout } => Expr::Relation {
            op: *op,
            lhs: Box::new(rename_free(lhs, old, new)),
            rhs: Box::new(rename_free(rhs, old, new)),
            layout: *layout,
        },
        Expr::Fraction { num, den } => Expr::frac(rename_free(num, old, new), rename_free(den, old, new)),
        Expr::Function { name, args } => {
            Expr::Function { name: name.clone(), args: args.iter().map(|a| rename_free(a, old, new)).collect() }
        }
        Expr::Group { inner, bracket, sizing } => {
            Expr::Group { inner: Box::new(rename_free(inner, old, new)), bracket: *bracket, sizing: *sizing }
        }
        Expr::Rows { env, rows } => {
            Expr::Rows { env: env.clone(), rows: rows.iter().map(|r| rename_free(r, old, new)).collect() }
        }
        Expr::Annotated { leading, inner, trailing } => Expr::Annotated {
            leading: leading.clone(),
            inner: Box::new(rename_free(inner, old, new)),
            trailing: trailing.clone(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(src: &str) -> Expr {
        parse_math(src).expect("parses")
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn free_symbols_of_sum() {
        assert_eq!(free_symbols(&p("x + y")), set(&["x", "y"]));
        assert_eq!(free_symbols(&p("\\sum_{k=1}^{n} k")), set(&["n"]));
        assert_eq!(free_symbols(&p("\\sum_{k=1}^{n} k + k")), set(&["k", "n"]));
    }

    #[test]
    fn integral_binds_differential() {
        assert_eq!(free_symbols(&p("\\int_{0}^{a} x \\tau \\, d\\tau")), set(&["a", "x"]));
    }

    #[test]
    fn opaque_over_approximates() {
        let names = free_symbols(&p("\\mycmd{a}{\\beta}"));
        assert!(names.contains("a"));
        assert!(names.contains("\\beta"));
        assert!(names.contains("mycmd"));
        assert!(free_atoms(&p("\\mycmd{a}{b}")).is_empty());
    }

    #[test]
    fn subscripted_atoms_are_single_symbols() {
        assert_eq!(free_symbols(&p("y_i \\hat{y_i}")), set(&["\\hat{y_{i}}", "y_{i}"]));
    }

    #[test]
    fn rename_respects_shadowing() {
        let e = p("k + \\sum_{k=1}^{k} k");
        let out = rename_free(&e, "k", &Atom::new("psi"));
        assert_eq!(emit(&out), "\\psi + \\sum_{k=1}^{\\psi} k");
    }

    #[test]
    fn terms_descend_through_structure() {
        let e = p("a = b + c");
        assert_eq!(e.terms().len(), 2);
    }
}

//! Recursive-descent parser for the LaTeX math subset.
//!
//! Precedence, loosest first: relations, `+`/`-`, unary minus, products
//! (`\cdot`, `/`, juxtaposition), powers. Scripts bind to the atom right
//! before them. Big operators and `\frac{\partial}{\partial x}` take the
//! rest of the product they start as their body. Unknown commands and
//! their brace arguments become [`Expr::Opaque`] leaves.

use std::fmt;

use super::lexer::{is_spacing_command, tokenize, Token, TokenKind};
use super::{
    is_greek_name, Accent, Annotation, Atom, BigOpKind, BinOpKind, Bracket, Constant, Expr, Font, Layout, RelOp,
    Sizing, SIZE_COMMANDS,
};

const MAX_DEPTH: usize = 200;

/// Environments nested inside a math segment that hold rows.
pub const ROW_ENVIRONMENTS: &[&str] = &["split", "aligned", "gathered", "alignedat"];

const FUNCTIONS: &[&str] = &[
    "sin", "cos", "tan", "cot", "sec", "csc", "sinh", "cosh", "tanh", "arcsin", "arccos", "arctan", "ln", "log", "exp",
];

const ANNOTATIONS: &[&str] = &["label", "tag", "nonumber", "notag"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unparseable {
    pub reason: String,
    pub offset: usize,
}

impl fmt::Display for Unparseable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at offset {}", self.reason, self.offset)
    }
}

impl std::error::Error for Unparseable {}

/// A parsed expression, or the reason the segment must be left untouched.
pub type ParseOutcome = Result<Expr, Unparseable>;

/// Tokenizes and parses the content of one math segment.
pub fn parse_math(inner: &str) -> ParseOutcome {
    let tokens = tokenize(inner).map_err(|e| match e {
        super::LexError::IllegalByte(offset) => Unparseable { reason: "illegal control byte".into(), offset },
    })?;
    parse(&tokens)
}

pub fn parse(tokens: &[Token<'_>]) -> ParseOutcome {
    let end = tokens.last().map(|t| t.offset + t.text.len()).unwrap_or(0);
    let mut p = Parser { toks: tokens.to_vec(), pos: 0, end, depth: 0, integral_depth: 0, vert_depth: 0 };
    let e = p.parse_rows()?;
    p.skip_trivia();
    if p.pos < p.toks.len() {
        return Err(p.error("unexpected token"));
    }
    Ok(e)
}

struct Parser<'a> {
    toks: Vec<Token<'a>>,
    pos: usize,
    end: usize,
    depth: usize,
    integral_depth: usize,
    vert_depth: usize,
}

fn is_relation_cmd(name: &str) -> Option<RelOp> {
    match name {
        "neq" | "ne" => Some(RelOp::Neq),
        "leq" | "le" => Some(RelOp::Le),
        "geq" | "ge" => Some(RelOp::Ge),
        "approx" => Some(RelOp::Approx),
        "equiv" => Some(RelOp::Equiv),
        _ => None,
    }
}

fn relop_of(kind: &TokenKind) -> Option<RelOp> {
    match kind {
        TokenKind::Op('=') => Some(RelOp::Eq),
        TokenKind::Op('<') => Some(RelOp::Lt),
        TokenKind::Op('>') => Some(RelOp::Gt),
        TokenKind::Cmd(name) => is_relation_cmd(name),
        _ => None,
    }
}

fn is_operator(kind: &TokenKind) -> bool {
    matches!(kind, TokenKind::Op('+') | TokenKind::Op('-')) || relop_of(kind).is_some()
}

/// `\Bigg`, `\Biggl`, `\Biggr`, ... → (size index, suffix).
fn size_command(name: &str) -> Option<(u8, Option<char>)> {
    for (i, base) in SIZE_COMMANDS.iter().enumerate().rev() {
        if let Some(rest) = name.strip_prefix(base) {
            return match rest {
                "" => Some((i as u8, None)),
                "l" => Some((i as u8, Some('l'))),
                "r" => Some((i as u8, Some('r'))),
                _ => None,
            };
        }
    }
    None
}

fn open_bracket(kind: &TokenKind) -> Option<Bracket> {
    match kind {
        TokenKind::Op('(') => Some(Bracket::Paren),
        TokenKind::Op('[') => Some(Bracket::Square),
        TokenKind::Op('|') => Some(Bracket::Vert),
        TokenKind::Cmd(c) if c == "{" => Some(Bracket::Brace),
        _ => None,
    }
}

fn close_bracket(kind: &TokenKind) -> Option<Bracket> {
    match kind {
        TokenKind::Op(')') => Some(Bracket::Paren),
        TokenKind::Op(']') => Some(Bracket::Square),
        TokenKind::Op('|') => Some(Bracket::Vert),
        TokenKind::Cmd(c) if c == "}" => Some(Bracket::Brace),
        _ => None,
    }
}

fn into_atom(e: Expr) -> Option<Atom> {
    match e {
        Expr::Symbol(a) => Some(a),
        Expr::Constant(Constant::E) => Some(Atom::new("e")),
        Expr::Constant(Constant::H) => Some(Atom::new("h")),
        Expr::Constant(Constant::Pi) => Some(Atom::new("pi")),
        _ => None,
    }
}

impl<'a> Parser<'a> {
    fn error(&self, reason: &str) -> Unparseable {
        let offset = self.toks.get(self.pos).map(|t| t.offset).unwrap_or(self.end);
        Unparseable { reason: reason.to_string(), offset }
    }

    fn skip_trivia(&mut self) {
        while self.pos < self.toks.len() && self.toks[self.pos].is_trivia() {
            self.pos += 1;
        }
    }

    /// Index of the `n`th non-trivia token at or after `from`.
    fn nth_from(&self, from: usize, n: usize) -> Option<usize> {
        let mut seen = 0;
        let mut i = from;
        while i < self.toks.len() {
            if !self.toks[i].is_trivia() {
                if seen == n {
                    return Some(i);
                }
                seen += 1;
            }
            i += 1;
        }
        None
    }

    fn peek(&mut self) -> Option<&TokenKind> {
        self.skip_trivia();
        self.toks.get(self.pos).map(|t| &t.kind)
    }

    fn peek_at(&self, n: usize) -> Option<&TokenKind> {
        self.nth_from(self.pos, n).map(|i| &self.toks[i].kind)
    }

    fn peek_cmd(&mut self) -> Option<&str> {
        match self.peek() {
            Some(TokenKind::Cmd(name)) => Some(name.as_str()),
            _ => None,
        }
    }

    fn bump(&mut self) -> Token<'a> {
        self.skip_trivia();
        let t = self.toks[self.pos].clone();
        self.pos += 1;
        t
    }

    fn expect(&mut self, kind: &TokenKind, what: &str) -> Result<(), Unparseable> {
        if self.peek() == Some(kind) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&format!("expected {what}")))
        }
    }

    fn enter(&mut self) -> Result<(), Unparseable> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.error("nesting too deep"));
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    /// Runs `f` with juxtaposition state reset, as inside any bracket pair.
    fn isolated<T>(&mut self, f: impl FnOnce(&mut Self) -> Result<T, Unparseable>) -> Result<T, Unparseable> {
        let saved = (self.integral_depth, self.vert_depth);
        self.integral_depth = 0;
        self.vert_depth = 0;
        let out = f(self);
        (self.integral_depth, self.vert_depth) = saved;
        out
    }

    fn raw(&self, from: usize, to: usize) -> String {
        self.toks[from..to].iter().map(|t| t.text).collect()
    }

    // ---- rows and layout -------------------------------------------------

    /// A `\\` followed (after an optional `&`) by a binary operator
    /// continues the current expression instead of starting a new row.
    fn row_break_continues(&self, at: usize) -> bool {
        let mut i = match self.nth_from(at + 1, 0) {
            Some(i) => i,
            None => return false,
        };
        if self.toks[i].kind == TokenKind::Amp {
            i = match self.nth_from(i + 1, 0) {
                Some(i) => i,
                None => return false,
            };
        }
        is_operator(&self.toks[i].kind)
    }

    /// Consumes `\\` and/or `&` markers when they precede an operator.
    fn take_layout(&mut self) -> Layout {
        let mut layout = Layout::NONE;
        self.skip_trivia();
        let start = self.pos;
        if self.peek() == Some(&TokenKind::RowBreak) && self.row_break_continues(self.pos) {
            self.bump();
            layout.newline = true;
        }
        if self.peek() == Some(&TokenKind::Amp) {
            if matches!(self.peek_at(1), Some(k) if is_operator(k)) {
                self.bump();
                layout.align = true;
            } else if layout.newline {
                self.pos = start;
                return Layout::NONE;
            }
        }
        layout
    }

    fn parse_rows(&mut self) -> Result<Expr, Unparseable> {
        let mut rows = vec![self.parse_row()?];
        loop {
            self.skip_trivia();
            if self.peek() == Some(&TokenKind::RowBreak) && !self.row_break_continues(self.pos) {
                self.bump();
                self.skip_row_spacing();
                rows.push(self.parse_row()?);
            } else {
                break;
            }
        }
        Ok(if rows.len() == 1 { rows.pop().expect("one row") } else { Expr::Rows { env: None, rows } })
    }

    /// `\\[2pt]` spacing after a row break.
    fn skip_row_spacing(&mut self) {
        if self.toks.get(self.pos).map(|t| &t.kind) == Some(&TokenKind::Op('[')) {
            let mut i = self.pos;
            while i < self.toks.len() && self.toks[i].kind != TokenKind::Op(']') {
                i += 1;
            }
            if i < self.toks.len() {
                self.pos = i + 1;
            }
        }
    }

    fn at_row_end(&self, from: usize) -> bool {
        match self.nth_from(from, 0).map(|i| (i, &self.toks[i].kind)) {
            None => true,
            Some((i, TokenKind::RowBreak)) => !self.row_break_continues(i),
            Some((_, TokenKind::Cmd(c))) => c == "end" || ANNOTATIONS.contains(&c.as_str()),
            Some((_, TokenKind::RBrace)) => true,
            _ => false,
        }
    }

    fn parse_annotation(&mut self) -> Result<Annotation, Unparseable> {
        self.skip_trivia();
        let start = self.pos;
        let name = match self.bump().kind {
            TokenKind::Cmd(name) => name,
            _ => unreachable!("caller checked"),
        };
        if name == "label" || name == "tag" {
            self.skip_trivia();
            if self.toks.get(self.pos).map(|t| &t.kind) != Some(&TokenKind::LBrace) {
                return Err(self.error("expected annotation argument"));
            }
            self.skip_balanced_braces()?;
        }
        Ok(Annotation::Command(self.raw(start, self.pos)))
    }

    fn peek_annotation(&mut self) -> bool {
        matches!(self.peek_cmd(), Some(c) if ANNOTATIONS.contains(&c))
    }

    fn parse_row(&mut self) -> Result<Expr, Unparseable> {
        let mut leading = Vec::new();
        while self.peek_annotation() {
            leading.push(self.parse_annotation()?);
        }
        if self.at_row_end(self.pos) {
            return Err(self.error("empty row"));
        }
        let inner = self.parse_relation()?;
        let mut trailing = Vec::new();
        loop {
            if self.peek_annotation() {
                trailing.push(self.parse_annotation()?);
                continue;
            }
            match self.peek() {
                Some(TokenKind::Op(c @ (',' | '.' | ';'))) => {
                    let c = *c;
                    let next = self.pos + 1;
                    if self.at_row_end(next) {
                        self.bump();
                        trailing.push(Annotation::Punct(c));
                        continue;
                    }
                    break;
                }
                _ => break,
            }
        }
        if leading.is_empty() && trailing.is_empty() {
            Ok(inner)
        } else {
            Ok(Expr::Annotated { leading, inner: Box::new(inner), trailing })
        }
    }

    // ---- operators -------------------------------------------------------

    fn parse_relation(&mut self) -> Result<Expr, Unparseable> {
        let mut lhs = self.parse_additive()?;
        loop {
            let save = self.pos;
            let layout = self.take_layout();
            let op = self.peek().and_then(relop_of);
            match op {
                Some(op) => {
                    self.bump();
                    let rhs = self.parse_additive()?;
                    lhs = Expr::Relation { op, lhs: Box::new(lhs), rhs: Box::new(rhs), layout };
                }
                None => {
                    self.pos = save;
                    return Ok(lhs);
                }
            }
        }
    }

    fn parse_additive(&mut self) -> Result<Expr, Unparseable> {
        let mut lhs = self.parse_unary()?;
        loop {
            let save = self.pos;
            let layout = self.take_layout();
            let op = match self.peek() {
                Some(TokenKind::Op('+')) => BinOpKind::Add,
                Some(TokenKind::Op('-')) => BinOpKind::Sub,
                _ => {
                    self.pos = save;
                    return Ok(lhs);
                }
            };
            self.bump();
            let rhs = self.parse_unary()?;
            lhs = Expr::BinOp { op, lhs: Box::new(lhs), rhs: Box::new(rhs), layout };
        }
    }

    fn parse_unary(&mut self) -> Result<Expr, Unparseable> {
        self.enter()?;
        let save = self.pos;
        let layout = self.take_layout();
        let out = match self.peek() {
            Some(TokenKind::Op('-')) => {
                self.bump();
                let operand = self.parse_unary()?;
                Ok(Expr::Neg { operand: Box::new(operand), layout })
            }
            Some(TokenKind::Op('+')) => {
                self.bump();
                self.parse_unary()
            }
            _ => {
                self.pos = save;
                self.parse_mul()
            }
        };
        self.leave();
        out
    }

    fn explicit_mul(&mut self) -> Option<BinOpKind> {
        match self.peek() {
            Some(TokenKind::Op('*')) => Some(BinOpKind::Mul),
            Some(TokenKind::Op('/')) => Some(BinOpKind::Div),
            Some(TokenKind::Cmd(c)) if c == "cdot" || c == "times" => Some(BinOpKind::Mul),
            Some(TokenKind::Cmd(c)) if c == "div" => Some(BinOpKind::Div),
            _ => None,
        }
    }

    fn parse_mul(&mut self) -> Result<Expr, Unparseable> {
        if !self.starts_atom() {
            return Err(self.error("expected an operand"));
        }
        let mut lhs = self.parse_power()?;
        loop {
            if let Some(op) = self.explicit_mul() {
                self.bump();
                let rhs = if self.peek() == Some(&TokenKind::Op('-')) {
                    self.bump();
                    Expr::neg(self.parse_power()?)
                } else if self.starts_atom() {
                    self.parse_power()?
                } else {
                    return Err(self.error("expected an operand"));
                };
                lhs = Expr::bin(op, lhs, rhs);
            } else if self.starts_atom() && !self.at_differential() {
                let rhs = self.parse_power()?;
                lhs = Expr::imul(lhs, rhs);
            } else {
                return Ok(lhs);
            }
        }
    }

    /// `d` followed by a variable inside an integral body.
    fn at_differential(&mut self) -> bool {
        if self.integral_depth == 0 || self.peek() != Some(&TokenKind::Letter('d')) {
            return false;
        }
        match self.peek_at(1) {
            Some(TokenKind::Letter(_)) => true,
            Some(TokenKind::Cmd(c)) => {
                is_greek_name(c) || Accent::from_command(c).is_some() || Font::from_command(c).is_some()
            }
            _ => false,
        }
    }

    fn starts_atom(&mut self) -> bool {
        let vert_open = self.vert_depth == 0;
        match self.peek() {
            Some(TokenKind::Letter(_)) | Some(TokenKind::Number(_)) | Some(TokenKind::LBrace) => true,
            Some(TokenKind::Op('(')) | Some(TokenKind::Op('[')) => true,
            Some(TokenKind::Op('|')) => vert_open,
            Some(TokenKind::Cmd(c)) => {
                let c = c.as_str();
                if let Some((_, suffix)) = size_command(c) {
                    return match suffix {
                        Some('l') => true,
                        Some(_) => false,
                        None => match self.peek_at(1) {
                            Some(TokenKind::Op('|')) => vert_open,
                            Some(k) => open_bracket(k).is_some(),
                            None => false,
                        },
                    };
                }
                !(matches!(c, "cdot" | "times" | "div" | "right" | "end" | "}" | "" | "\\")
                    || is_relation_cmd(c).is_some()
                    || ANNOTATIONS.contains(&c)
                    || is_spacing_command(c))
            }
            _ => false,
        }
    }

    // ---- atoms and scripts -----------------------------------------------

    fn parse_power(&mut self) -> Result<Expr, Unparseable> {
        self.enter()?;
        let base = self.parse_primary()?;
        let out = self.parse_scripts(base);
        self.leave();
        out
    }

    fn parse_scripts(&mut self, base: Expr) -> Result<Expr, Unparseable> {
        let mut base = base;
        let mut sup: Option<Expr> = None;
        loop {
            match self.peek() {
                Some(TokenKind::Sup) => {
                    if sup.is_some() {
                        return Err(self.error("double superscript"));
                    }
                    self.bump();
                    sup = Some(self.script_arg()?);
                }
                Some(TokenKind::Sub) => {
                    let mut atom = match into_atom(base.clone()) {
                        Some(a) if a.sub.is_none() => a,
                        _ => return Err(self.error("subscript on a non-symbol")),
                    };
                    self.bump();
                    atom.sub = Some(Box::new(self.script_arg()?));
                    base = Expr::Symbol(atom);
                }
                _ => break,
            }
        }
        Ok(match sup {
            Some(exp) if base == Expr::Constant(Constant::E) => Expr::func("exp", exp),
            Some(exp) => Expr::pow(base, exp),
            None => base,
        })
    }

    /// Argument of `^`, `_` or `\frac`: a brace group or a single token.
    fn script_arg(&mut self) -> Result<Expr, Unparseable> {
        let cmd_atom = matches!(self.peek(), Some(TokenKind::Cmd(_))) && self.starts_atom();
        match self.peek() {
            Some(TokenKind::LBrace) => {
                self.bump();
                if self.peek() == Some(&TokenKind::RBrace) {
                    return Err(self.error("empty group"));
                }
                let e = self.isolated(|p| p.parse_relation())?;
                self.expect(&TokenKind::RBrace, "`}`")?;
                Ok(e)
            }
            Some(TokenKind::Number(n)) if n.len() > 1 => {
                self.split_leading_digit();
                let t = self.bump();
                Ok(Expr::Number(t.text.to_string()))
            }
            Some(TokenKind::Number(_)) => Ok(Expr::Number(self.bump().text.to_string())),
            Some(TokenKind::Letter(_)) => self.parse_primary(),
            Some(TokenKind::Cmd(_)) if cmd_atom => self.parse_primary(),
            _ => Err(self.error("dangling script")),
        }
    }

    /// `x^23` means `x^{2} 3`: splits the number token after its first digit.
    fn split_leading_digit(&mut self) {
        self.skip_trivia();
        let t = self.toks[self.pos].clone();
        let head = Token { kind: TokenKind::Number(t.text[..1].to_string()), text: &t.text[..1], offset: t.offset };
        let rest = tokenize(&t.text[1..]).expect("digits re-tokenize");
        let rest = rest.into_iter().map(|r| Token { offset: r.offset + t.offset + 1, ..r });
        self.toks.splice(self.pos..=self.pos, std::iter::once(head).chain(rest));
    }

    fn parse_primary(&mut self) -> Result<Expr, Unparseable> {
        self.skip_trivia();
        let start = self.pos;
        let tok = match self.toks.get(self.pos) {
            Some(t) => t.clone(),
            None => return Err(self.error("unexpected end of math")),
        };
        match &tok.kind {
            TokenKind::Letter(c) => {
                self.bump();
                Ok(match c {
                    'e' => Expr::Constant(Constant::E),
                    'h' => Expr::Constant(Constant::H),
                    c => Expr::sym(c.to_string()),
                })
            }
            TokenKind::Number(n) => {
                self.bump();
                Ok(Expr::Number(n.clone()))
            }
            TokenKind::LBrace => {
                self.bump();
                if self.peek() == Some(&TokenKind::RBrace) {
                    return Err(self.error("empty group"));
                }
                let e = self.isolated(|p| p.parse_relation())?;
                self.expect(&TokenKind::RBrace, "`}`")?;
                Ok(e)
            }
            TokenKind::Op('(') => self.parse_group(Bracket::Paren, Sizing::Plain),
            TokenKind::Op('[') => self.parse_group(Bracket::Square, Sizing::Plain),
            TokenKind::Op('|') => self.parse_group(Bracket::Vert, Sizing::Plain),
            TokenKind::Cmd(name) => self.parse_command(name.clone(), start),
            _ => Err(self.error("unexpected token")),
        }
    }

    fn parse_group(&mut self, bracket: Bracket, sizing: Sizing) -> Result<Expr, Unparseable> {
        // Opening token(s) are consumed here.
        match sizing {
            Sizing::Plain => {
                self.bump();
            }
            Sizing::Auto | Sizing::Fixed(_) => {
                self.bump();
                self.bump();
            }
        }
        let inner = self.isolated(|p| {
            if sizing == Sizing::Plain && bracket == Bracket::Vert {
                p.vert_depth = 1;
            }
            p.parse_relation()
        })?;
        match sizing {
            Sizing::Plain => {
                let ok = matches!(self.peek(), Some(k) if close_bracket(k) == Some(bracket));
                if !ok {
                    return Err(self.error("unbalanced bracket"));
                }
                self.bump();
            }
            Sizing::Auto => {
                if self.peek_cmd() != Some("right") {
                    return Err(self.error("expected `\\right`"));
                }
                self.bump();
                let ok = matches!(self.peek(), Some(k) if close_bracket(k) == Some(bracket));
                if !ok {
                    return Err(self.error("mismatched `\\right` delimiter"));
                }
                self.bump();
            }
            Sizing::Fixed(n) => {
                let closes = matches!(self.peek_cmd().and_then(size_command), Some((m, s)) if m == n && s != Some('l'));
                if !closes {
                    return Err(self.error("expected sized closing delimiter"));
                }
                self.bump();
                let ok = matches!(self.peek(), Some(k) if close_bracket(k) == Some(bracket));
                if !ok {
                    return Err(self.error("mismatched sized delimiter"));
                }
                self.bump();
            }
        }
        Ok(Expr::Group { inner: Box::new(inner), bracket, sizing })
    }

    fn parse_command(&mut self, name: String, start: usize) -> Result<Expr, Unparseable> {
        let n = name.as_str();
        if let Some((size, _)) = size_command(n) {
            return match self.peek_at(1).and_then(open_bracket) {
                Some(bracket) => self.parse_group(bracket, Sizing::Fixed(size)),
                None => Err(self.error("sized delimiter without bracket")),
            };
        }
        if n == "pi" {
            self.bump();
            return Ok(Expr::Constant(Constant::Pi));
        }
        if n == "hbar" {
            self.bump();
            return Ok(Expr::Constant(Constant::HBar));
        }
        if is_greek_name(n) {
            self.bump();
            return Ok(Expr::Symbol(Atom::new(n)));
        }
        if n == "{" {
            return self.parse_group(Bracket::Brace, Sizing::Plain);
        }
        if n == "left" {
            return match self.peek_at(1).and_then(open_bracket) {
                Some(bracket) => self.parse_group(bracket, Sizing::Auto),
                None => Err(self.error("unsupported `\\left` delimiter")),
            };
        }
        if let Some(accent) = Accent::from_command(n) {
            return self.parse_accent(accent, start);
        }
        if let Some(font) = Font::from_command(n) {
            return self.parse_font(font, start);
        }
        match n {
            "frac" | "dfrac" | "tfrac" => return self.parse_fraction(),
            "sqrt" => {
                if self.toks.get(self.pos + 1).map(|t| &t.kind) == Some(&TokenKind::Op('[')) {
                    return self.parse_opaque(start);
                }
                self.bump();
                let arg = self.script_arg()?;
                return Ok(Expr::func("sqrt", arg));
            }
            "sum" => return self.parse_big_op(BigOpKind::Sum),
            "prod" => return self.parse_big_op(BigOpKind::Prod),
            "int" => return self.parse_big_op(BigOpKind::Integral),
            "oint" => return self.parse_big_op(BigOpKind::ContourIntegral),
            "begin" => return self.parse_environment(start),
            "" => return Err(self.error("dangling backslash")),
            "right" | "end" | "}" => return Err(self.error("unexpected closing command")),
            _ => {}
        }
        if FUNCTIONS.contains(&n) {
            return self.parse_function(name);
        }
        self.parse_opaque(start)
    }

    fn parse_accent(&mut self, accent: Accent, start: usize) -> Result<Expr, Unparseable> {
        self.bump();
        let inner = match self.peek() {
            Some(TokenKind::LBrace) => {
                self.bump();
                let e = self.parse_power()?;
                self.expect(&TokenKind::RBrace, "`}` after accent")?;
                e
            }
            Some(TokenKind::Letter(_)) | Some(TokenKind::Cmd(_)) => self.parse_primary()?,
            _ => return Err(self.error("accent without argument")),
        };
        match into_atom(inner) {
            Some(mut atom) if atom.accent.is_none() => {
                atom.accent = Some(accent);
                Ok(Expr::Symbol(atom))
            }
            _ => {
                self.pos = start;
                self.parse_opaque(start)
            }
        }
    }

    fn parse_font(&mut self, font: Font, start: usize) -> Result<Expr, Unparseable> {
        self.bump();
        let i = self.pos;
        let single = self.toks.get(i).map(|t| &t.kind) == Some(&TokenKind::LBrace)
            && matches!(self.toks.get(i + 1).map(|t| &t.kind), Some(TokenKind::Letter(_)))
            && self.toks.get(i + 2).map(|t| &t.kind) == Some(&TokenKind::RBrace);
        if !single {
            self.pos = start;
            return self.parse_opaque(start);
        }
        let letter = match &self.toks[i + 1].kind {
            TokenKind::Letter(c) => *c,
            _ => unreachable!(),
        };
        self.pos = i + 3;
        let mut atom = Atom::new(letter.to_string());
        atom.font = Some(font);
        Ok(Expr::Symbol(atom))
    }

    fn parse_function(&mut self, name: String) -> Result<Expr, Unparseable> {
        self.bump();
        let power = if self.peek() == Some(&TokenKind::Sup) {
            self.bump();
            Some(self.script_arg()?)
        } else {
            None
        };
        if self.peek() == Some(&TokenKind::Sub) {
            return Err(self.error("function subscripts are not supported"));
        }
        if !self.starts_atom() {
            return Err(self.error("function without argument"));
        }
        let arg = match self.parse_power()? {
            Expr::Group { inner, bracket: Bracket::Paren, .. } => *inner,
            other => other,
        };
        let f = Expr::func(name, arg);
        Ok(match power {
            Some(p) => Expr::pow(f, p),
            None => f,
        })
    }

    fn parse_fraction(&mut self) -> Result<Expr, Unparseable> {
        self.bump();
        let partial_numerator = self.peek() == Some(&TokenKind::LBrace)
            && matches!(self.peek_at(1), Some(TokenKind::Cmd(c)) if c == "partial");
        if partial_numerator {
            return self.parse_partial();
        }
        let num = self.script_arg()?;
        let den = self.script_arg()?;
        Ok(Expr::frac(num, den))
    }

    fn partial_order(&mut self) -> Result<u32, Unparseable> {
        if self.peek() != Some(&TokenKind::Sup) {
            return Ok(1);
        }
        self.bump();
        match self.script_arg()? {
            Expr::Number(n) => {
                n.parse::<u32>().ok().filter(|o| *o >= 1).ok_or_else(|| self.error("bad derivative order"))
            }
            _ => Err(self.error("bad derivative order")),
        }
    }

    /// `\frac{\partial^n}{\partial x^n} f` or `\frac{\partial^n f}{\partial x^n}`.
    fn parse_partial(&mut self) -> Result<Expr, Unparseable> {
        self.bump(); // {
        self.bump(); // \partial
        let order = self.partial_order()?;
        let inline_operand =
            if self.peek() == Some(&TokenKind::RBrace) { None } else { Some(self.isolated(|p| p.parse_mul())?) };
        self.expect(&TokenKind::RBrace, "`}` after numerator")?;
        self.expect(&TokenKind::LBrace, "`{` for denominator")?;
        match self.peek() {
            Some(TokenKind::Cmd(c)) if c == "partial" => {
                self.bump();
            }
            _ => return Err(self.error("expected `\\partial` in denominator")),
        }
        let wrt_expr = self.isolated(|p| p.parse_power())?;
        self.expect(&TokenKind::RBrace, "`}` after denominator")?;
        let (wrt, den_order) = match wrt_expr {
            Expr::BinOp { op: BinOpKind::Pow, lhs, rhs, .. } => match *rhs {
                Expr::Number(n) => (into_atom(*lhs), n.parse::<u32>().ok()),
                _ => (None, None),
            },
            other => (into_atom(other), Some(1)),
        };
        let wrt = wrt.ok_or_else(|| self.error("derivative with respect to a non-symbol"))?;
        if den_order != Some(order) {
            return Err(self.error("mismatched derivative orders"));
        }
        let operand = match inline_operand {
            Some(op) => op,
            None => self.parse_body()?,
        };
        Ok(Expr::Partial { order, wrt, operand: Box::new(operand) })
    }

    /// Body of a big operator or derivative: the rest of the product.
    fn parse_body(&mut self) -> Result<Expr, Unparseable> {
        if self.peek() == Some(&TokenKind::Op('-')) {
            self.bump();
            return Ok(Expr::neg(self.parse_mul()?));
        }
        if !self.starts_atom() || self.at_differential() {
            return Err(self.error("missing operand"));
        }
        self.parse_mul()
    }

    fn parse_big_op(&mut self, kind: BigOpKind) -> Result<Expr, Unparseable> {
        self.bump();
        let mut lower: Option<Expr> = None;
        let mut upper: Option<Expr> = None;
        loop {
            match self.peek() {
                Some(TokenKind::Sub) if lower.is_none() => {
                    self.bump();
                    lower = Some(self.script_arg()?);
                }
                Some(TokenKind::Sup) if upper.is_none() => {
                    self.bump();
                    upper = Some(self.script_arg()?);
                }
                Some(TokenKind::Sub) | Some(TokenKind::Sup) => return Err(self.error("double script")),
                _ => break,
            }
        }
        if kind.is_integral() {
            self.integral_depth += 1;
            let body = self.parse_body();
            self.integral_depth -= 1;
            let body = body?;
            if !self.at_differential_here() {
                return Err(self.error("integral without differential"));
            }
            self.bump(); // d
            let var = self.parse_power()?;
            let var = into_atom(var).ok_or_else(|| self.error("bad differential"))?;
            return Ok(Expr::big_op(kind, Some(var), lower, upper, body));
        }
        let (var, lower) = match lower {
            None => (None, None),
            Some(Expr::Relation { op: RelOp::Eq, lhs, rhs, .. }) => match into_atom(*lhs) {
                Some(a) => (Some(a), Some(*rhs)),
                None => return Err(self.error("unsupported summation range")),
            },
            Some(other) => match into_atom(other) {
                Some(a) => (Some(a), None),
                None => return Err(self.error("unsupported summation range")),
            },
        };
        if var.is_none() && upper.is_some() {
            return Err(self.error("bounded sum without index"));
        }
        let body = self.parse_body()?;
        Ok(Expr::big_op(kind, var, lower, upper, body))
    }

    fn at_differential_here(&mut self) -> bool {
        self.integral_depth += 1;
        let here = self.at_differential();
        self.integral_depth -= 1;
        here
    }

    fn environment_name(&mut self) -> Result<String, Unparseable> {
        self.expect(&TokenKind::LBrace, "environment name")?;
        let mut name = String::new();
        while let Some(t) = self.toks.get(self.pos) {
            match &t.kind {
                TokenKind::Letter(c) => name.push(*c),
                TokenKind::Op('*') => name.push('*'),
                TokenKind::RBrace => break,
                _ => return Err(self.error("bad environment name")),
            }
            self.pos += 1;
        }
        self.expect(&TokenKind::RBrace, "`}`")?;
        Ok(name)
    }

    fn parse_environment(&mut self, start: usize) -> Result<Expr, Unparseable> {
        self.bump();
        let name = self.environment_name()?;
        if ROW_ENVIRONMENTS.contains(&name.as_str()) {
            let rows = self.isolated(|p| p.parse_rows())?;
            if self.peek_cmd() != Some("end") {
                return Err(self.error("expected `\\end`"));
            }
            self.bump();
            if self.environment_name()? != name {
                return Err(self.error("mismatched `\\end`"));
            }
            let rows = match rows {
                Expr::Rows { env: None, rows } => rows,
                single => vec![single],
            };
            return Ok(Expr::Rows { env: Some(name), rows });
        }
        // Any other environment is kept verbatim up to its matching end.
        let mut nest = 1;
        while self.pos < self.toks.len() {
            let is_begin = matches!(&self.toks[self.pos].kind, TokenKind::Cmd(c) if c == "begin");
            let is_end = matches!(&self.toks[self.pos].kind, TokenKind::Cmd(c) if c == "end");
            if is_begin || is_end {
                self.pos += 1;
                self.skip_trivia();
                let inner = self.environment_name()?;
                if inner == name {
                    nest += if is_begin { 1 } else { -1 };
                    if nest == 0 {
                        return Ok(Expr::Opaque(self.raw(start, self.pos)));
                    }
                }
            } else {
                self.pos += 1;
            }
        }
        Err(self.error("unterminated environment"))
    }

    fn skip_balanced_braces(&mut self) -> Result<(), Unparseable> {
        let mut depth = 0usize;
        while let Some(t) = self.toks.get(self.pos) {
            match t.kind {
                TokenKind::LBrace => depth += 1,
                TokenKind::RBrace => {
                    if depth == 0 {
                        return Err(self.error("unbalanced braces"));
                    }
                    depth -= 1;
                    if depth == 0 {
                        self.pos += 1;
                        return Ok(());
                    }
                }
                _ => {}
            }
            self.pos += 1;
        }
        Err(self.error("unbalanced braces"))
    }

    /// An unknown command with its arguments, kept byte for byte.
    fn parse_opaque(&mut self, start: usize) -> Result<Expr, Unparseable> {
        self.pos = start + 1;
        if self.toks.get(self.pos).map(|t| &t.kind) == Some(&TokenKind::Op('[')) {
            let mut depth = 0usize;
            while let Some(t) = self.toks.get(self.pos) {
                match t.kind {
                    TokenKind::LBrace => depth += 1,
                    TokenKind::RBrace => depth = depth.saturating_sub(1),
                    TokenKind::Op(']') if depth == 0 => break,
                    _ => {}
                }
                self.pos += 1;
            }
            if self.pos >= self.toks.len() {
                return Err(self.error("unterminated optional argument"));
            }
            self.pos += 1;
        }
        loop {
            match self.nth_from(self.pos, 0).map(|i| (i, self.toks[i].kind.clone())) {
                Some((i, TokenKind::LBrace)) => {
                    self.pos = i;
                    self.skip_balanced_braces()?;
                }
                Some((i, TokenKind::Sub)) => {
                    self.pos = i + 1;
                    match self.nth_from(self.pos, 0).map(|j| (j, self.toks[j].kind.clone())) {
                        Some((j, TokenKind::LBrace)) => {
                            self.pos = j;
                            self.skip_balanced_braces()?;
                        }
                        Some((j, TokenKind::Letter(_) | TokenKind::Number(_) | TokenKind::Cmd(_))) => self.pos = j + 1,
                        _ => return Err(self.error("dangling subscript")),
                    }
                }
                _ => break,
            }
        }
        Ok(Expr::Opaque(self.raw(start, self.pos)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{emit, BigOp};

    fn p(src: &str) -> Expr {
        parse_math(src).unwrap_or_else(|e| panic!("{src}: {e}"))
    }

    #[test]
    fn single_symbol() {
        assert_eq!(p("x"), Expr::sym("x"));
    }

    #[test]
    fn unit_sum() {
        let expected = Expr::big_op(
            BigOpKind::Sum,
            Some(Atom::new("k")),
            Some(Expr::num("1")),
            Some(Expr::num("1")),
            Expr::sym("x"),
        );
        assert_eq!(p("\\sum_{k=1}^{1} x"), expected);
    }

    #[test]
    fn sum_body_stops_at_plus() {
        match p("\\sum_{k=1}^{n} k + k") {
            Expr::BinOp { op: BinOpKind::Add, lhs, .. } => {
                assert!(matches!(*lhs, Expr::BigOp(ref b) if b.body == Expr::sym("k")))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn precedence() {
        assert_eq!(emit(&p("-a b + c")), "-a b + c");
        assert!(matches!(p("-a b"), Expr::Neg { .. }));
        assert!(matches!(p("a^{2} b"), Expr::BinOp { op: BinOpKind::ImplicitMul, .. }));
        assert!(matches!(p("x^23"), Expr::BinOp { op: BinOpKind::ImplicitMul, .. }));
    }

    #[test]
    fn implicit_mul_is_left_associative() {
        let e = p("m c^2");
        assert_eq!(e, Expr::imul(Expr::sym("m"), Expr::pow(Expr::sym("c"), Expr::num("2"))));
        match p("a b c") {
            Expr::BinOp { lhs, rhs, .. } => {
                assert_eq!(*rhs, Expr::sym("c"));
                assert_eq!(*lhs, Expr::imul(Expr::sym("a"), Expr::sym("b")));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn exponentials_and_constants() {
        assert_eq!(p("e^{x}"), Expr::func("exp", Expr::sym("x")));
        assert_eq!(p("\\exp x"), Expr::func("exp", Expr::sym("x")));
        assert_eq!(p("\\hbar"), Expr::Constant(Constant::HBar));
        assert_eq!(p("h"), Expr::Constant(Constant::H));
        assert_eq!(p("h_0"), Expr::Symbol(Atom::new("h").with_sub(Expr::num("0"))));
    }

    #[test]
    fn integrals_need_differentials() {
        match p("\\int_{0}^{1} E \\, d\\tau") {
            Expr::BigOp(b) => {
                let BigOp { kind, var, body, .. } = *b;
                assert_eq!(kind, BigOpKind::Integral);
                assert_eq!(var, Some(Atom::new("tau")));
                assert_eq!(body, Expr::sym("E"));
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_math("\\int x").is_err());
    }

    #[test]
    fn partial_forms() {
        let op_form = p("\\frac{\\partial}{\\partial \\theta} \\theta");
        assert!(matches!(op_form, Expr::Partial { order: 1, .. }));
        let inline = p("\\frac{\\partial^2 f}{\\partial x_k^2}");
        match inline {
            Expr::Partial { order, wrt, .. } => {
                assert_eq!(order, 2);
                assert_eq!(wrt.key(), "x_{k}");
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_math("\\frac{\\partial^2}{\\partial x} f").is_err());
    }

    #[test]
    fn opaque_commands_keep_bytes() {
        let e = p("\\mycmd{a}{b}");
        assert_eq!(e, Expr::Opaque("\\mycmd{a}{b}".into()));
        assert!(emit(&p("x + \\mycmd{a}{b}")).contains("\\mycmd{a}{b}"));
        assert_eq!(p("\\text{for all $x$}"), Expr::Opaque("\\text{for all $x$}".into()));
        assert_eq!(p("\\lim_{x \\to 0}"), Expr::Opaque("\\lim_{x \\to 0}".into()));
    }

    #[test]
    fn malformed_inputs_are_unparseable() {
        for src in ["{x", "x}", "x^", "x_", "\\frac{a}", "\\left( x", "a +", "", "\\sum_{k=1}^{n}", "x,y"] {
            assert!(parse_math(src).is_err(), "{src}");
        }
    }

    #[test]
    fn rows_and_layout() {
        let e = p("a &= b \\\\ c &= d");
        match e {
            Expr::Rows { env: None, rows } => assert_eq!(rows.len(), 2),
            other => panic!("{other:?}"),
        }
        let cont = p("a &= b \\\\ &= c");
        assert!(matches!(cont, Expr::Relation { layout: Layout { newline: true, align: true }, .. }));
        assert_eq!(emit(&cont), "a &= b \\\\ &= c");
    }

    #[test]
    fn annotations_are_preserved() {
        let e = p("\\label{eq:1} E = m c^2 \\nonumber,");
        assert_eq!(emit(&e), "\\label{eq:1} E = m c^{2} \\nonumber,");
    }

    #[test]
    fn function_arguments() {
        assert_eq!(p("\\sin(x)"), Expr::func("sin", Expr::sym("x")));
        assert_eq!(p("\\sin^2 x"), Expr::pow(Expr::func("sin", Expr::sym("x")), Expr::num("2")));
        let e = p("\\log f_i(\\theta)");
        assert!(matches!(e, Expr::BinOp { op: BinOpKind::ImplicitMul, .. }));
    }

    #[test]
    fn vertical_bars() {
        assert!(matches!(p("|x|"), Expr::Group { bracket: Bracket::Vert, .. }));
        assert!(matches!(p("|a| |b|"), Expr::BinOp { op: BinOpKind::ImplicitMul, .. }));
    }
}

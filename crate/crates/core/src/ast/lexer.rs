use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    /// ASCII letter.
    Letter(char),
    /// Digits with at most one decimal point, exactly as written.
    Number(String),
    /// `\name`, or `\` plus one non-letter character (`\,`, `\{`).
    Cmd(String),
    LBrace,
    RBrace,
    Sup,
    Sub,
    Amp,
    /// `\\`
    RowBreak,
    /// Any other printable character: `+ - = ( ) [ ] | , .` and so on.
    Op(char),
    Space,
    /// `%` to end of line.
    Comment,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token<'a> {
    pub kind: TokenKind,
    pub text: &'a str,
    pub offset: usize,
}

impl Token<'_> {
    pub fn is_trivia(&self) -> bool {
        match &self.kind {
            TokenKind::Space | TokenKind::Comment => true,
            TokenKind::Cmd(name) => is_spacing_command(name),
            _ => false,
        }
    }
}

/// Commands with no mathematical content, skipped by the parser.
pub fn is_spacing_command(name: &str) -> bool {
    matches!(
        name,
        "," | ";" | ":" | "!" | " " | "quad" | "qquad" | "limits" | "nolimits" | "displaystyle" | "textstyle"
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("illegal control byte at offset {0}")]
    IllegalByte(usize),
}

/// Splits one math segment into tokens that tile the input contiguously.
pub fn tokenize(inner: &str) -> Result<Vec<Token<'_>>, LexError> {
    let bytes = inner.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let start = i;
        let b = bytes[i];
        let kind = match b {
            b'\\' => {
                i += 1;
                if i >= bytes.len() {
                    TokenKind::Cmd(String::new())
                } else if bytes[i] == b'\\' {
                    i += 1;
                    TokenKind::RowBreak
                } else if bytes[i].is_ascii_alphabetic() {
                    while i < bytes.len() && bytes[i].is_ascii_alphabetic() {
                        i += 1;
                    }
                    TokenKind::Cmd(inner[start + 1..i].to_string())
                } else {
                    let ch = inner[i..].chars().next().expect("char boundary");
                    if (ch as u32) < 0x20 && !ch.is_whitespace() {
                        return Err(LexError::IllegalByte(i));
                    }
                    i += ch.len_utf8();
                    TokenKind::Cmd(ch.to_string())
                }
            }
            b'{' => {
                i += 1;
                TokenKind::LBrace
            }
            b'}' => {
                i += 1;
                TokenKind::RBrace
            }
            b'^' => {
                i += 1;
                TokenKind::Sup
            }
            b'_' => {
                i += 1;
                TokenKind::Sub
            }
            b'&' => {
                i += 1;
                TokenKind::Amp
            }
            b'%' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
                TokenKind::Comment
            }
            b' ' | b'\t' | b'\n' | b'\r' => {
                while i < bytes.len() && matches!(bytes[i], b' ' | b'\t' | b'\n' | b'\r') {
                    i += 1;
                }
                TokenKind::Space
            }
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                TokenKind::Number(inner[start..i].to_string())
            }
            b if b.is_ascii_alphabetic() => {
                i += 1;
                TokenKind::Letter(b as char)
            }
            b if b < 0x20 || b == 0x7f => return Err(LexError::IllegalByte(i)),
            _ => {
                let ch = inner[i..].chars().next().expect("char boundary");
                i += ch.len_utf8();
                TokenKind::Op(ch)
            }
        };
        out.push(Token { kind, text: &inner[start..i], offset: start });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenKind::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn simple_sum() {
        assert_eq!(kinds("x+1"), vec![Letter('x'), Op('+'), Number("1".into())]);
    }

    #[test]
    fn fraction_command() {
        assert_eq!(
            kinds("\\frac{a}{b}"),
            vec![Cmd("frac".into()), LBrace, Letter('a'), RBrace, LBrace, Letter('b'), RBrace]
        );
    }

    #[test]
    fn contour_integral_subscript() {
        assert_eq!(kinds("\\oint_{\\Omega}"), vec![Cmd("oint".into()), Sub, LBrace, Cmd("Omega".into()), RBrace]);
    }

    #[test]
    fn decimals_and_row_breaks() {
        assert_eq!(kinds("1.25\\\\&"), vec![Number("1.25".into()), RowBreak, Amp]);
        assert_eq!(kinds("1."), vec![Number("1".into()), Op('.')]);
    }

    #[test]
    fn tokens_tile_input() {
        let src = "a \\, b % note\n\\{x\\}";
        let joined: String = tokenize(src).unwrap().iter().map(|t| t.text).collect();
        assert_eq!(joined, src);
    }

    #[test]
    fn control_bytes_rejected() {
        assert_eq!(tokenize("x\u{1}y"), Err(LexError::IllegalByte(1)));
    }
}

use std::fmt;

use super::{ParseError, SourcePos};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    /// Digits with an optional fractional part, kept verbatim.
    Num(String),
    Punct(char),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Num(s) => write!(f, "number `{s}`"),
            Tok::Punct(c) => write!(f, "`{c}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: SourcePos,
}

const PUNCT: &[char] = &['{', '}', '(', ')', '[', ']', ':', ';', ',', '=', '*'];

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut col) = (1u32, 1u32);

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }

    while let Some(&c) = chars.peek() {
        let pos = SourcePos { line, column: col };
        if c.is_whitespace() {
            bump!();
        } else if c == '/' {
            bump!();
            if chars.peek() == Some(&'/') {
                while chars.peek().is_some_and(|&c| c != '\n') {
                    bump!();
                }
            } else {
                return Err(ParseError::new(pos, "`//` comment", "`/`"));
            }
        } else if c.is_ascii_alphabetic() {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    s.push(c);
                    bump!();
                } else {
                    break;
                }
            }
            out.push(Token { tok: Tok::Ident(s), pos });
        } else if c.is_ascii_digit() {
            let mut s = String::new();
            while chars.peek().is_some_and(char::is_ascii_digit) {
                s.push(bump!().unwrap());
            }
            if chars.peek() == Some(&'.') {
                s.push(bump!().unwrap());
                let frac_pos = SourcePos { line, column: col };
                if !chars.peek().is_some_and(char::is_ascii_digit) {
                    let found = chars.peek().map_or("end of input".to_owned(), |c| format!("`{c}`"));
                    return Err(ParseError::new(frac_pos, "digit after `.`", found));
                }
                while chars.peek().is_some_and(char::is_ascii_digit) {
                    s.push(bump!().unwrap());
                }
            }
            out.push(Token { tok: Tok::Num(s), pos });
        } else if PUNCT.contains(&c) {
            bump!();
            out.push(Token { tok: Tok::Punct(c), pos });
        } else {
            return Err(ParseError::new(pos, "token", format!("`{c}`")));
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: SourcePos { line, column: col },
    });
    Ok(out)
}

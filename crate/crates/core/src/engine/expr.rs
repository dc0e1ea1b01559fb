//! Arithmetic expressions for derived-attribute computers, e.g.
//! `Direction * Location` or `(Location + Altitude) / 2`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{RtScalar, ScalarTag};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("unexpected `{0}` at offset {1}")]
    Unexpected(String, usize),
    #[error("unexpected end of expression")]
    UnexpectedEnd,
    #[error("`{0}` is not an input of this derivation")]
    UnknownName(String),
    #[error("operator `{0}` is not defined on strings")]
    StringOperator(char),
    #[error("cannot mix strings and numbers")]
    MixedTypes,
    #[error("expression yields {found} but the attribute is {expected}")]
    ResultType { expected: ScalarTag, found: ScalarTag },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Int(i64),
    Name(String),
    Neg(Box<Expr>),
    Bin(char, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Name(String),
    Op(char),
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (at, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                i += 1;
            }
            out.push((Tok::Num(chars[start..i].iter().map(|(_, c)| c).collect()), at));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            out.push((Tok::Name(chars[start..i].iter().map(|(_, c)| c).collect()), at));
        } else if "+-*/()".contains(c) {
            out.push((Tok::Op(c), at));
            i += 1;
        } else {
            return Err(ExprError::Unexpected(c.to_string(), at));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek_op(&self) -> Option<char> {
        match self.toks.get(self.pos) {
            Some((Tok::Op(c), _)) => Some(*c),
            _ => None,
        }
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.product()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.product()?));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.peek_op() == Some('-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let (tok, at) = self.toks.get(self.pos).cloned().ok_or(ExprError::UnexpectedEnd)?;
        self.pos += 1;
        match tok {
            Tok::Num(text) => {
                if let Ok(i) = text.parse::<i64>() {
                    Ok(Expr::Int(i))
                } else {
                    text.parse::<f64>().map(Expr::Num).map_err(|_| ExprError::Unexpected(text, at))
                }
            }
            Tok::Name(n) => Ok(Expr::Name(n)),
            Tok::Op('(') => {
                let e = self.sum()?;
                match self.toks.get(self.pos) {
                    Some((Tok::Op(')'), _)) => {
                        self.pos += 1;
                        Ok(e)
                    }
                    Some((t, at)) => Err(ExprError::Unexpected(tok_text(t), *at)),
                    None => Err(ExprError::UnexpectedEnd),
                }
            }
            t => Err(ExprError::Unexpected(tok_text(&t), at)),
        }
    }
}

fn tok_text(t: &Tok) -> String {
    match t {
        Tok::Num(s) | Tok::Name(s) => s.clone(),
        Tok::Op(c) => c.to_string(),
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ExprError> {
        let mut p = Parser { toks: lex(src)?, pos: 0 };
        let e = p.sum()?;
        match p.toks.get(p.pos) {
            None => Ok(e),
            Some((t, at)) => Err(ExprError::Unexpected(tok_text(t), *at)),
        }
    }

    /// The default computation: the sum of all inputs (concatenation for
    /// strings).
    pub fn sum_of(inputs: &[String]) -> Expr {
        let mut it = inputs.iter().map(|n| Expr::Name(n.clone()));
        let first = it.next().unwrap_or(Expr::Int(0));
        it.fold(first, |acc, e| Expr::Bin('+', Box::new(acc), Box::new(e)))
    }

    /// Static result type given the input types, after checking names.
    pub fn check(&self, types: &BTreeMap<String, ScalarTag>) -> Result<ScalarTag, ExprError> {
        use ScalarTag::*;
        match self {
            Expr::Int(_) => Ok(Int),
            Expr::Num(_) => Ok(Real),
            Expr::Name(n) => types.get(n).copied().ok_or_else(|| ExprError::UnknownName(n.clone())),
            Expr::Neg(e) => match e.check(types)? {
                Str => Err(ExprError::StringOperator('-')),
                t => Ok(t),
            },
            Expr::Bin(op, a, b) => match (a.check(types)?, b.check(types)?) {
                (Str, Str) if *op == '+' => Ok(Str),
                (Str, Str) => Err(ExprError::StringOperator(*op)),
                (Str, _) | (_, Str) => Err(ExprError::MixedTypes),
                (_, _) if *op == '/' => Ok(Real),
                (Int, Int) => Ok(Int),
                _ => Ok(Real),
            },
        }
    }

    /// Like [`Expr::check`] but also requires the result to fit `target`.
    /// Numeric results convert between integer and real.
    pub fn check_for(&self, types: &BTreeMap<String, ScalarTag>, target: ScalarTag) -> Result<(), ExprError> {
        let found = self.check(types)?;
        if (found == ScalarTag::Str) != (target == ScalarTag::Str) {
            return Err(ExprError::ResultType { expected: target, found });
        }
        Ok(())
    }

    /// Evaluates against checked inputs. Integer arithmetic that overflows
    /// falls back to reals.
    pub fn eval(&self, env: &BTreeMap<&str, &RtScalar>) -> Result<RtScalar, ExprError> {
        Ok(match self {
            Expr::Int(i) => RtScalar::Int(*i),
            Expr::Num(v) => RtScalar::Real(*v),
            Expr::Name(n) => (*env.get(n.as_str()).ok_or_else(|| ExprError::UnknownName(n.clone()))?).clone(),
            Expr::Neg(e) => match e.eval(env)? {
                RtScalar::Int(i) => i.checked_neg().map_or(RtScalar::Real(-(i as f64)), RtScalar::Int),
                RtScalar::Real(v) => RtScalar::Real(-v),
                RtScalar::Str(_) => return Err(ExprError::StringOperator('-')),
            },
            Expr::Bin(op, a, b) => match (a.eval(env)?, b.eval(env)?) {
                (RtScalar::Str(x), RtScalar::Str(y)) if *op == '+' => RtScalar::Str(x + &y),
                (RtScalar::Str(_), RtScalar::Str(_)) => return Err(ExprError::StringOperator(*op)),
                (RtScalar::Int(x), RtScalar::Int(y)) if *op != '/' => {
                    let r = match op {
                        '+' => x.checked_add(y),
                        '-' => x.checked_sub(y),
                        _ => x.checked_mul(y),
                    };
                    r.map_or_else(|| RtScalar::Real(real_op(*op, x as f64, y as f64)), RtScalar::Int)
                }
                (x, y) => match (x.as_f64(), y.as_f64()) {
                    (Some(x), Some(y)) => RtScalar::Real(real_op(*op, x, y)),
                    _ => return Err(ExprError::MixedTypes),
                },
            },
        })
    }
}

fn real_op(op: char, x: f64, y: f64) -> f64 {
    match op {
        '+' => x + y,
        '-' => x - y,
        '*' => x * y,
        _ => x / y,
    }
}

/// Converts a numeric result to the attribute's tag. Reals round to the
/// nearest integer (saturating; NaN becomes 0).
pub fn coerce(v: RtScalar, target: ScalarTag) -> RtScalar {
    match (v, target) {
        (RtScalar::Real(x), ScalarTag::Int) => RtScalar::Int(x.round() as i64),
        (RtScalar::Int(i), ScalarTag::Real) => RtScalar::Real(i as f64),
        (v, _) => v,
    }
}

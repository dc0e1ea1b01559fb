use super::lexer::{tokenize, Tok, Token};
use super::{ClassPositions, ParseError, SourceMap, SourcePos};
use crate::schema::{
    AttrKind, AttrSpec, ClassSpec, MethodKind, MethodSpec, Multiplicity, Schema, ValueType, DEFAULT_SLOT_CAPACITY,
    DEFAULT_STRING_LEN,
};
use crate::time::DurationMs;

pub fn parse(src: &str) -> Result<Schema, ParseError> {
    parse_with_map(src).map(|(schema, _)| schema)
}

pub fn parse_with_map(src: &str) -> Result<(Schema, SourceMap), ParseError> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, at: 0 };
    let mut schema = Schema::default();
    let mut map = SourceMap::default();
    while !p.at_eof() {
        let (cls, pos) = p.classdef()?;
        schema.classes.push(cls);
        map.classes.push(pos);
    }
    Ok((schema, map))
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.at]
    }

    fn at_eof(&self) -> bool {
        self.peek().tok == Tok::Eof
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if t.tok != Tok::Eof {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, expected: impl Into<String>) -> Result<T, ParseError> {
        let t = self.peek();
        Err(ParseError::new(t.pos, expected, t.tok.to_string()))
    }

    fn is_word(&self, word: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == word)
    }

    fn is_punct(&self, c: char) -> bool {
        self.peek().tok == Tok::Punct(c)
    }

    fn keyword(&mut self, word: &str) -> Result<SourcePos, ParseError> {
        if self.is_word(word) {
            Ok(self.advance().pos)
        } else {
            self.fail(format!("`{word}`"))
        }
    }

    fn punct(&mut self, c: char) -> Result<(), ParseError> {
        if self.is_punct(c) {
            self.advance();
            Ok(())
        } else {
            self.fail(format!("`{c}`"))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                self.advance();
                Ok(s)
            }
            _ => self.fail(what),
        }
    }

    fn int(&mut self, what: &str) -> Result<u32, ParseError> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Num(s) if !s.contains('.') => match s.parse::<u32>() {
                Ok(v) => {
                    self.advance();
                    Ok(v)
                }
                Err(_) => Err(ParseError::new(t.pos, format!("{what} that fits in 32 bits"), t.tok.to_string())),
            },
            _ => self.fail(what),
        }
    }

    fn number(&mut self, what: &str) -> Result<f64, ParseError> {
        match &self.peek().tok {
            Tok::Num(s) => {
                let v: f64 = s.parse().expect("lexer only yields decimal digits");
                self.advance();
                Ok(v)
            }
            _ => self.fail(what),
        }
    }

    fn duration(&mut self) -> Result<DurationMs, ParseError> {
        let num = self.peek().clone();
        let Tok::Num(text) = &num.tok else {
            return self.fail("duration");
        };
        self.advance();
        let unit = self.peek().clone();
        let scale = match &unit.tok {
            Tok::Ident(u) if u == "ms" => 1,
            Tok::Ident(u) if u == "s" => 1000,
            _ => return self.fail("duration unit `ms` or `s`"),
        };
        self.advance();
        duration_millis(text, scale)
            .map(DurationMs::from_millis)
            .ok_or_else(|| ParseError::new(num.pos, "a whole number of milliseconds", format!("`{text}{}`", tok_text(&unit.tok))))
    }

    fn classdef(&mut self) -> Result<(ClassSpec, ClassPositions), ParseError> {
        let pos = self.keyword("realtime")?;
        self.keyword("class")?;
        let name = self.ident("class name")?;
        let mut cls = ClassSpec::new(name);
        let mut positions = ClassPositions {
            pos,
            ..ClassPositions::default()
        };
        cls.slot_capacity = if self.is_word("slots") {
            self.advance();
            self.int("slot count")?
        } else {
            DEFAULT_SLOT_CAPACITY
        };
        self.punct('{')?;
        loop {
            if self.is_punct('}') {
                self.advance();
                break;
            }
            let start = self.peek().clone();
            let Tok::Ident(word) = &start.tok else {
                return self.fail("member declaration or `}`");
            };
            match word.as_str() {
                "key" => {
                    if cls.key.is_some() {
                        return Err(ParseError::new(start.pos, "a single key declaration", "a second `key`"));
                    }
                    self.advance();
                    let name = self.ident("attribute name")?;
                    self.punct(':')?;
                    let value_type = self.basetype()?;
                    self.punct(';')?;
                    cls.key = Some(name.clone());
                    cls.attrs.push(AttrSpec {
                        name,
                        kind: AttrKind::Classical,
                        value_type,
                        multiplicity: Multiplicity::One,
                    });
                    positions.attrs.push(start.pos);
                }
                "classical" => {
                    self.advance();
                    let name = self.ident("attribute name")?;
                    self.punct(':')?;
                    let value_type = self.basetype()?;
                    let multiplicity = self.multiplicity()?;
                    self.punct(';')?;
                    cls.attrs.push(AttrSpec {
                        name,
                        kind: AttrKind::Classical,
                        value_type,
                        multiplicity,
                    });
                    positions.attrs.push(start.pos);
                }
                "sensor" => {
                    self.advance();
                    let name = self.ident("attribute name")?;
                    self.punct(':')?;
                    let value_type = self.rttype()?;
                    let multiplicity = self.multiplicity()?;
                    self.punct('{')?;
                    self.keyword("vd")?;
                    self.punct('=')?;
                    let vd = self.duration()?;
                    self.punct(';')?;
                    self.keyword("mde")?;
                    self.punct('=')?;
                    let mde = self.number("maximum data error")?;
                    self.punct(';')?;
                    self.punct('}')?;
                    cls.attrs.push(AttrSpec {
                        name,
                        kind: AttrKind::Sensor { vd, mde },
                        value_type,
                        multiplicity,
                    });
                    positions.attrs.push(start.pos);
                }
                "derived" => {
                    self.advance();
                    let name = self.ident("attribute name")?;
                    self.punct(':')?;
                    let value_type = self.rttype()?;
                    let multiplicity = self.multiplicity()?;
                    self.punct('{')?;
                    self.keyword("vd")?;
                    self.punct('=')?;
                    let vd = self.duration()?;
                    self.punct(';')?;
                    self.keyword("from")?;
                    let inputs = self.ident_list()?;
                    self.punct(';')?;
                    let rvi = if self.is_word("rvi") {
                        self.advance();
                        self.punct('=')?;
                        let rvi = self.duration()?;
                        self.punct(';')?;
                        Some(rvi)
                    } else {
                        None
                    };
                    self.punct('}')?;
                    cls.attrs.push(AttrSpec {
                        name,
                        kind: AttrKind::Derived { vd, inputs, rvi },
                        value_type,
                        multiplicity,
                    });
                    positions.attrs.push(start.pos);
                }
                "periodic" => {
                    self.advance();
                    let name = self.ident("method name")?;
                    self.keyword("updates")?;
                    let target = self.ident("sensor attribute name")?;
                    self.keyword("period")?;
                    let period = self.duration()?;
                    self.keyword("deadline")?;
                    let deadline = self.duration()?;
                    self.punct(';')?;
                    cls.methods.push(MethodSpec {
                        name,
                        kind: MethodKind::Periodic { target, period },
                        deadline,
                    });
                    positions.methods.push(start.pos);
                }
                "sporadic" => {
                    self.advance();
                    let name = self.ident("method name")?;
                    self.keyword("computes")?;
                    let target = self.ident("derived attribute name")?;
                    self.keyword("deadline")?;
                    let deadline = self.duration()?;
                    self.punct(';')?;
                    cls.methods.push(MethodSpec {
                        name,
                        kind: MethodKind::Sporadic { target },
                        deadline,
                    });
                    positions.methods.push(start.pos);
                }
                "aperiodic" => {
                    self.advance();
                    let name = self.ident("method name")?;
                    let reads = if self.is_word("reads") {
                        self.advance();
                        self.ident_list()?
                    } else {
                        Vec::new()
                    };
                    let writes = if self.is_word("writes") {
                        self.advance();
                        self.ident_list()?
                    } else {
                        Vec::new()
                    };
                    self.keyword("deadline")?;
                    let deadline = self.duration()?;
                    self.punct(';')?;
                    cls.methods.push(MethodSpec {
                        name,
                        kind: MethodKind::Aperiodic { reads, writes },
                        deadline,
                    });
                    positions.methods.push(start.pos);
                }
                _ => return self.fail("member declaration or `}`"),
            }
        }
        Ok((cls, positions))
    }

    fn ident_list(&mut self) -> Result<Vec<String>, ParseError> {
        let mut out = vec![self.ident("attribute name")?];
        while self.is_punct(',') {
            self.advance();
            out.push(self.ident("attribute name")?);
        }
        Ok(out)
    }

    fn string_len(&mut self) -> Result<u32, ParseError> {
        if self.is_punct('(') {
            self.advance();
            let n = self.int("string length")?;
            self.punct(')')?;
            Ok(n)
        } else {
            Ok(DEFAULT_STRING_LEN)
        }
    }

    fn basetype(&mut self) -> Result<ValueType, ParseError> {
        if self.is_word("integer") {
            self.advance();
            Ok(ValueType::Int)
        } else if self.is_word("real") {
            self.advance();
            Ok(ValueType::Real)
        } else if self.is_word("string") {
            self.advance();
            Ok(ValueType::Str(self.string_len()?))
        } else {
            self.fail("`integer`, `real` or `string`")
        }
    }

    fn rttype(&mut self) -> Result<ValueType, ParseError> {
        if self.is_word("rtinteger") {
            self.advance();
            Ok(ValueType::Int)
        } else if self.is_word("rtreal") {
            self.advance();
            Ok(ValueType::Real)
        } else if self.is_word("rtstring") {
            self.advance();
            Ok(ValueType::Str(self.string_len()?))
        } else {
            self.fail("`rtinteger`, `rtreal` or `rtstring`")
        }
    }

    fn multiplicity(&mut self) -> Result<Multiplicity, ParseError> {
        if !self.is_punct('[') {
            return Ok(Multiplicity::One);
        }
        self.advance();
        let m = if self.is_punct('*') {
            self.advance();
            Multiplicity::Unbounded
        } else {
            Multiplicity::Bounded(self.int("multiplicity bound or `*`")?)
        };
        self.punct(']')?;
        Ok(m)
    }
}

fn tok_text(t: &Tok) -> String {
    match t {
        Tok::Ident(s) | Tok::Num(s) => s.clone(),
        Tok::Punct(c) => c.to_string(),
        Tok::Eof => String::new(),
    }
}

/// Exact decimal-to-millisecond conversion; `None` for sub-millisecond
/// fractions or overflow.
fn duration_millis(text: &str, scale: u64) -> Option<u64> {
    let (whole, frac) = text.split_once('.').unwrap_or((text, ""));
    let whole: u64 = whole.parse().ok()?;
    let frac = frac.trim_end_matches('0');
    let digits = if scale == 1000 { 3 } else { 0 };
    if frac.len() > digits {
        return None;
    }
    let frac_ms = if frac.is_empty() {
        0
    } else {
        frac.parse::<u64>().ok()? * 10u64.pow((digits - frac.len()) as u32)
    };
    whole.checked_mul(scale)?.checked_add(frac_ms)
}

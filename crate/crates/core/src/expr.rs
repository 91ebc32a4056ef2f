//! Arithmetic mini-language for atom locations, weights, densities and integrands.
//!
//! The language is deliberately closed: `+ - * / ^`, `exp`, `ln`, `abs`,
//! `min`, `max`, numeric literals and the variables `n` (series index) and
//! `xi1..xid` (jump coordinates). `^` is right-associative and binds tighter
//! than unary minus, so `-n^2` parses as `-(n^2)`.

use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("unexpected character `{ch}` at byte {pos}")]
    UnexpectedChar { ch: char, pos: usize },
    #[error("unexpected end of expression")]
    UnexpectedEnd,
    #[error("expected {expected} at byte {pos}")]
    Expected { expected: &'static str, pos: usize },
    #[error("unknown identifier `{0}` (allowed: n, xi1..xid, exp, ln, abs, min, max)")]
    UnknownIdent(String),
    #[error("malformed number at byte {0}")]
    BadNumber(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    /// Series index, ranges over 1, 2, 3, ...
    N,
    /// Jump coordinate `xi{k}`, 1-based.
    Xi(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Exp(Box<Expr>),
    Ln(Box<Expr>),
    Abs(Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
}

impl Expr {
    /// Evaluate with series index `n` and coordinates `xi` (0-based slice for
    /// the 1-based variables). Out-of-range coordinates evaluate to NaN so the
    /// failure is visible to callers that check finiteness.
    pub fn eval(&self, n: f64, xi: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(Var::N) => n,
            Expr::Var(Var::Xi(k)) => xi.get(k - 1).copied().unwrap_or(f64::NAN),
            Expr::Neg(a) => -a.eval(n, xi),
            Expr::Add(a, b) => a.eval(n, xi) + b.eval(n, xi),
            Expr::Sub(a, b) => a.eval(n, xi) - b.eval(n, xi),
            Expr::Mul(a, b) => a.eval(n, xi) * b.eval(n, xi),
            Expr::Div(a, b) => a.eval(n, xi) / b.eval(n, xi),
            Expr::Pow(a, b) => a.eval(n, xi).powf(b.eval(n, xi)),
            Expr::Exp(a) => a.eval(n, xi).exp(),
            Expr::Ln(a) => a.eval(n, xi).ln(),
            Expr::Abs(a) => a.eval(n, xi).abs(),
            Expr::Min(a, b) => a.eval(n, xi).min(b.eval(n, xi)),
            Expr::Max(a, b) => a.eval(n, xi).max(b.eval(n, xi)),
        }
    }

    /// Largest `xi` index referenced, or 0 if none.
    pub fn max_xi_index(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Var(Var::N) => 0,
            Expr::Var(Var::Xi(k)) => *k,
            Expr::Neg(a) | Expr::Exp(a) | Expr::Ln(a) | Expr::Abs(a) => a.max_xi_index(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b)
            | Expr::Min(a, b)
            | Expr::Max(a, b) => a.max_xi_index().max(b.max_xi_index()),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, parent: u8) -> fmt::Result {
        let prec = self.precedence();
        let parens = prec < parent;
        if parens {
            write!(f, "(")?;
        }
        match self {
            Expr::Num(v) => {
                if *v < 0.0 {
                    write!(f, "({v})")?;
                } else {
                    write!(f, "{v}")?;
                }
            }
            Expr::Var(Var::N) => write!(f, "n")?,
            Expr::Var(Var::Xi(k)) => write!(f, "xi{k}")?,
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.fmt_prec(f, 4)?;
            }
            Expr::Add(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, "+")?;
                b.fmt_prec(f, 2)?;
            }
            Expr::Sub(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, "-")?;
                b.fmt_prec(f, 2)?;
            }
            Expr::Mul(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "*")?;
                b.fmt_prec(f, 3)?;
            }
            Expr::Div(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "/")?;
                b.fmt_prec(f, 3)?;
            }
            Expr::Pow(a, b) => {
                a.fmt_prec(f, 5)?;
                write!(f, "^")?;
                b.fmt_prec(f, 4)?;
            }
            Expr::Exp(a) => {
                write!(f, "exp(")?;
                a.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
            Expr::Ln(a) => {
                write!(f, "ln(")?;
                a.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
            Expr::Abs(a) => {
                write!(f, "abs(")?;
                a.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
            Expr::Min(a, b) => {
                write!(f, "min(")?;
                a.fmt_prec(f, 0)?;
                write!(f, ",")?;
                b.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
            Expr::Max(a, b) => {
                write!(f, "max(")?;
                a.fmt_prec(f, 0)?;
                write!(f, ",")?;
                b.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
        }
        if parens {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        let mut p = Parser {
            src: s.as_bytes(),
            pos: 0,
        };
        let e = p.parse_sum()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(ParseError::UnexpectedChar {
                ch: s[p.pos..].chars().next().unwrap_or('?'),
                pos: p.pos,
            });
        }
        Ok(e)
    }
}

/// An expression together with its original source text. The source string is
/// kept verbatim so spec files round-trip unchanged; expressions built
/// programmatically render a canonical form instead.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprDef {
    src: String,
    ast: Expr,
}

impl ExprDef {
    pub fn parse(src: &str) -> Result<Self, ParseError> {
        Ok(ExprDef {
            src: src.to_string(),
            ast: src.parse()?,
        })
    }

    pub fn from_ast(ast: Expr) -> Self {
        ExprDef {
            src: ast.to_string(),
            ast,
        }
    }

    pub fn src(&self) -> &str {
        &self.src
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    pub fn eval(&self, n: f64, xi: &[f64]) -> f64 {
        self.ast.eval(n, xi)
    }

    pub fn max_xi_index(&self) -> usize {
        self.ast.max_xi_index()
    }

    /// `self * other`, used for reweighted measures; renders canonically.
    pub fn times(&self, other: &Expr) -> ExprDef {
        ExprDef::from_ast(Expr::Mul(
            Box::new(self.ast.clone()),
            Box::new(other.clone()),
        ))
    }
}

impl fmt::Display for ExprDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.src)
    }
}

impl Serialize for ExprDef {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.src)
    }
}

impl<'de> Deserialize<'de> for ExprDef {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let src = String::deserialize(d)?;
        ExprDef::parse(&src).map_err(D::Error::custom)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, ch: u8, what: &'static str) -> Result<(), ParseError> {
        if self.peek() == Some(ch) {
            self.pos += 1;
            Ok(())
        } else {
            Err(ParseError::Expected {
                expected: what,
                pos: self.pos,
            })
        }
    }

    fn parse_sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_product()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.parse_product()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.parse_product()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.parse_unary()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.parse_unary()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.parse_unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Expr, ParseError> {
        let base = self.parse_atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            // right-associative; allow a unary minus in the exponent
            let exp = self.parse_unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(ParseError::UnexpectedEnd),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.parse_sum()?;
                self.expect(b')', "`)`")?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.parse_number(),
            Some(c) if c.is_ascii_alphabetic() => self.parse_ident(),
            Some(c) => Err(ParseError::UnexpectedChar {
                ch: c as char,
                pos: self.pos,
            }),
        }
    }

    fn parse_number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            if c.is_ascii_digit() || c == b'.' {
                self.pos += 1;
            } else if (c == b'e' || c == b'E')
                && self.pos > start
                && self
                    .src
                    .get(self.pos + 1)
                    .map(|&d| d.is_ascii_digit() || d == b'+' || d == b'-')
                    .unwrap_or(false)
            {
                self.pos += 2;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                break;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| ParseError::BadNumber(start))
    }

    fn parse_ident(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match name {
            "n" => Ok(Expr::Var(Var::N)),
            "exp" => Ok(Expr::Exp(Box::new(self.parse_paren_arg()?))),
            "ln" => Ok(Expr::Ln(Box::new(self.parse_paren_arg()?))),
            "abs" => Ok(Expr::Abs(Box::new(self.parse_paren_arg()?))),
            "min" => {
                let (a, b) = self.parse_two_args()?;
                Ok(Expr::Min(Box::new(a), Box::new(b)))
            }
            "max" => {
                let (a, b) = self.parse_two_args()?;
                Ok(Expr::Max(Box::new(a), Box::new(b)))
            }
            _ => {
                if let Some(idx) = name.strip_prefix("xi") {
                    if let Ok(k) = idx.parse::<usize>() {
                        if k >= 1 {
                            return Ok(Expr::Var(Var::Xi(k)));
                        }
                    }
                }
                Err(ParseError::UnknownIdent(name.to_string()))
            }
        }
    }

    fn parse_paren_arg(&mut self) -> Result<Expr, ParseError> {
        self.expect(b'(', "`(`")?;
        let inner = self.parse_sum()?;
        self.expect(b')', "`)`")?;
        Ok(inner)
    }

    fn parse_two_args(&mut self) -> Result<(Expr, Expr), ParseError> {
        self.expect(b'(', "`(`")?;
        let a = self.parse_sum()?;
        self.expect(b',', "`,`")?;
        let b = self.parse_sum()?;
        self.expect(b')', "`)`")?;
        Ok((a, b))
    }
}

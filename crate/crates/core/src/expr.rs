//! Arithmetic expressions in `x`, `y`, `t` for initial and target states.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          right-associative, binds tighter than '-'
//! primary := number | 'pi' | 'x' | 'y' | 't' | func '(' expr ')' | '(' expr ')'
//! func    := 'sin' | 'cos' | 'exp'
//! ```

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at offset {offset}: {message}{}", expected.as_ref().map(|e| format!(" (expected {e})")).unwrap_or_default())]
pub struct ParseError {
    /// Byte offset into the input; equals the input length at end of input.
    pub offset: usize,
    pub message: String,
    pub expected: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    tok: Tok,
    tok_start: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> std::result::Result<Self, ParseError> {
        let mut p = Parser {
            src,
            pos: 0,
            tok: Tok::End,
            tok_start: 0,
        };
        p.advance()?;
        Ok(p)
    }

    fn err(&self, message: impl Into<String>, expected: Option<&str>) -> ParseError {
        ParseError {
            offset: self.tok_start,
            message: message.into(),
            expected: expected.map(str::to_owned),
        }
    }

    fn advance(&mut self) -> std::result::Result<(), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_start = self.pos;
        if self.pos >= bytes.len() {
            self.tok = Tok::End;
            return Ok(());
        }
        let c = bytes[self.pos];
        if c.is_ascii_digit() || c == b'.' {
            let start = self.pos;
            let digits = |p: &mut usize| {
                let s = *p;
                while *p < bytes.len() && bytes[*p].is_ascii_digit() {
                    *p += 1;
                }
                *p - s
            };
            let mut n = digits(&mut self.pos);
            if self.pos < bytes.len() && bytes[self.pos] == b'.' {
                self.pos += 1;
                n += digits(&mut self.pos);
            }
            if n == 0 {
                return Err(ParseError {
                    offset: start,
                    message: "malformed number".into(),
                    expected: Some("digit".into()),
                });
            }
            if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
                let mut p = self.pos + 1;
                if p < bytes.len() && (bytes[p] == b'+' || bytes[p] == b'-') {
                    p += 1;
                }
                if digits(&mut p) == 0 {
                    return Err(ParseError {
                        offset: p,
                        message: "malformed exponent".into(),
                        expected: Some("digit".into()),
                    });
                }
                self.pos = p;
            }
            let text = &self.src[start..self.pos];
            let v = f64::from_str(text).map_err(|_| ParseError {
                offset: start,
                message: format!("malformed number `{text}`"),
                expected: None,
            })?;
            self.tok = Tok::Num(v);
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = self.pos;
            while self.pos < bytes.len()
                && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_')
            {
                self.pos += 1;
            }
            self.tok = Tok::Ident(self.src[start..self.pos].to_owned());
        } else if b"+-*/^()".contains(&c) {
            self.pos += 1;
            self.tok = Tok::Sym(c as char);
        } else {
            let ch = self.src[self.pos..].chars().next().unwrap_or('?');
            return Err(ParseError {
                offset: self.pos,
                message: format!("unexpected character `{ch}`"),
                expected: None,
            });
        }
        Ok(())
    }

    fn eat(&mut self, sym: char) -> std::result::Result<bool, ParseError> {
        if self.tok == Tok::Sym(sym) {
            self.advance()?;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn expr(&mut self) -> std::result::Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+')? {
                BinOp::Add
            } else if self.eat('-')? {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> std::result::Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*')? {
                BinOp::Mul
            } else if self.eat('/')? {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> std::result::Result<Expr, ParseError> {
        if self.eat('-')? {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> std::result::Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.eat('^')? {
            Ok(Expr::Bin(
                BinOp::Pow,
                Box::new(base),
                Box::new(self.unary()?),
            ))
        } else {
            Ok(base)
        }
    }

    fn primary(&mut self) -> std::result::Result<Expr, ParseError> {
        const EXPECT: &str = "expression";
        match self.tok.clone() {
            Tok::Num(v) => {
                self.advance()?;
                Ok(Expr::Num(v))
            }
            Tok::Sym('(') => {
                self.advance()?;
                let e = self.expr()?;
                if !self.eat(')')? {
                    return Err(self.err("unclosed parenthesis", Some("`)`")));
                }
                Ok(e)
            }
            Tok::Ident(name) => {
                let func = match name.as_str() {
                    "x" => Some(Err(Expr::Var(Var::X))),
                    "y" => Some(Err(Expr::Var(Var::Y))),
                    "t" => Some(Err(Expr::Var(Var::T))),
                    "pi" => Some(Err(Expr::Pi)),
                    "sin" => Some(Ok(Func::Sin)),
                    "cos" => Some(Ok(Func::Cos)),
                    "exp" => Some(Ok(Func::Exp)),
                    _ => None,
                };
                match func {
                    None => Err(self.err(
                        format!("unknown identifier `{name}`"),
                        Some("one of x, y, t, pi, sin, cos, exp"),
                    )),
                    Some(Err(leaf)) => {
                        self.advance()?;
                        Ok(leaf)
                    }
                    Some(Ok(f)) => {
                        self.advance()?;
                        if !self.eat('(')? {
                            return Err(self.err(format!("`{name}` must be called"), Some("`(`")));
                        }
                        let arg = self.expr()?;
                        if !self.eat(')')? {
                            return Err(self.err("unclosed call", Some("`)`")));
                        }
                        Ok(Expr::Call(f, Box::new(arg)))
                    }
                }
            }
            Tok::End => Err(self.err("unexpected end of input", Some(EXPECT))),
            Tok::Sym(c) => Err(self.err(format!("unexpected `{c}`"), Some(EXPECT))),
        }
    }
}

pub fn parse(text: &str) -> std::result::Result<Expr, ParseError> {
    let mut p = Parser::new(text)?;
    let e = p.expr()?;
    if p.tok != Tok::End {
        return Err(p.err("trailing input", Some("operator or end of input")));
    }
    Ok(e)
}

impl FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        parse(s)
    }
}

impl Expr {
    /// Evaluates at `(x, y, t)`; `y` must be supplied if the expression uses it.
    pub fn evaluate<T: Real>(&self, x: T, y: Option<T>, t: T) -> Result<T> {
        Ok(match self {
            Expr::Num(v) => T::lit(*v),
            Expr::Pi => T::PI(),
            Expr::Var(Var::X) => x,
            Expr::Var(Var::Y) => y.ok_or(Error::MissingVariable("y"))?,
            Expr::Var(Var::T) => t,
            Expr::Neg(e) => -e.evaluate(x, y, t)?,
            Expr::Bin(op, l, r) => {
                let (a, b) = (l.evaluate(x, y, t)?, r.evaluate(x, y, t)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(f, e) => {
                let v = e.evaluate(x, y, t)?;
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                }
            }
        })
    }

    pub fn uses(&self, var: Var) -> bool {
        match self {
            Expr::Var(v) => *v == var,
            Expr::Num(_) | Expr::Pi => false,
            Expr::Neg(e) | Expr::Call(_, e) => e.uses(var),
            Expr::Bin(_, l, r) => l.uses(var) || r.uses(var),
        }
    }
}

/// Fully parenthesized form that reparses to an equivalent tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if *v < 0.0 => write!(f, "(-{:?})", -v),
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Pi => f.write_str("pi"),
            Expr::Var(Var::X) => f.write_str("x"),
            Expr::Var(Var::Y) => f.write_str("y"),
            Expr::Var(Var::T) => f.write_str("t"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, l, r) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({l} {s} {r})")
            }
            Expr::Call(func, e) => {
                let name = match func {
                    Func::Sin => "sin",
                    Func::Cos => "cos",
                    Func::Exp => "exp",
                };
                write!(f, "{name}({e})")
            }
        }
    }
}

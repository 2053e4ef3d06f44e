//! Delay expressions such as `1/(4*2*J(C1,C2))`.
//!
//! Grammar:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | atom
//! atom    := number | 'J' '(' label ',' label ')' | '(' sum ')'
//! ```
//!
//! Subtrees without a coupling reference are folded to numbers as soon as
//! they are parsed or built.

use std::fmt;

use crate::error::{Error, Result};
use crate::spin::SpinSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }

    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }

    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div => a / b,
        }
    }
}

/// A duration in seconds, possibly depending on scalar couplings.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// `J(a, b)` in Hz.
    Coupling(String, String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn seconds(t: f64) -> Self {
        Expr::Num(t)
    }

    /// `1/(k·J(a,b))`.
    pub fn inverse_coupling(k: f64, a: &str, b: &str) -> Self {
        Expr::Bin(
            BinOp::Div,
            Box::new(Expr::Num(1.0)),
            Box::new(Expr::Bin(
                BinOp::Mul,
                Box::new(Expr::Num(k)),
                Box::new(Expr::Coupling(a.into(), b.into())),
            )),
        )
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::Coupling(..) => false,
            Expr::Neg(e) => e.is_constant(),
            Expr::Bin(_, l, r) => l.is_constant() && r.is_constant(),
        }
    }

    pub fn labels(&self) -> Vec<&str> {
        match self {
            Expr::Num(_) => vec![],
            Expr::Coupling(a, b) => vec![a, b],
            Expr::Neg(e) => e.labels(),
            Expr::Bin(_, l, r) => {
                let mut v = l.labels();
                v.extend(r.labels());
                v
            }
        }
    }

    /// Value without a spin system; `None` if the expression references a coupling.
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            Expr::Coupling(..) => None,
            Expr::Neg(e) => e.constant_value().map(|v| -v),
            Expr::Bin(op, l, r) => Some(op.apply(l.constant_value()?, r.constant_value()?)),
        }
    }

    pub fn evaluate(&self, sys: &SpinSystem) -> Result<f64> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Coupling(a, b) => sys.coupling(a, b),
            Expr::Neg(e) => Ok(-e.evaluate(sys)?),
            Expr::Bin(op, l, r) => {
                let (x, y) = (l.evaluate(sys)?, r.evaluate(sys)?);
                if *op == BinOp::Div && y == 0.0 {
                    return Err(match r.labels().as_slice() {
                        [a, b, ..] => Error::ZeroCoupling(a.to_string(), b.to_string()),
                        _ => Error::NonPositiveDelay(f64::INFINITY),
                    });
                }
                Ok(op.apply(x, y))
            }
        }
    }

    fn folded(self) -> Self {
        match self.constant_value() {
            Some(v) => Expr::Num(v),
            None => self,
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(op, ..) => op.precedence(),
            Expr::Neg(_) => 3,
            Expr::Num(v) if v.is_sign_negative() => 3,
            _ => 4,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let child = |f: &mut fmt::Formatter<'_>, e: &Expr, paren: bool| {
            if paren {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Coupling(a, b) => write!(f, "J({a},{b})"),
            Expr::Neg(e) => {
                f.write_str("-")?;
                child(f, e, e.precedence() < 3)
            }
            Expr::Bin(op, l, r) => {
                child(f, l, l.precedence() < op.precedence())?;
                write!(f, "{}", op.symbol())?;
                child(f, r, r.precedence() <= op.precedence())
            }
        }
    }
}

/// Recursive-descent parser over one line fragment.
pub(crate) struct ExprParser {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column0: usize,
}

impl ExprParser {
    /// `column0` is the 1-based column of `src`'s first character.
    pub(crate) fn new(src: &str, line: usize, column0: usize) -> Self {
        ExprParser {
            chars: src.chars().collect(),
            pos: 0,
            line,
            column0,
        }
    }

    pub(crate) fn parse(mut self) -> Result<Expr> {
        let e = self.sum()?;
        self.skip_ws();
        if self.pos < self.chars.len() {
            return Err(self.error(format!(
                "unexpected `{}` in expression",
                self.chars[self.pos]
            )));
        }
        Ok(e)
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Syntax {
            line: self.line,
            column: self.column0 + self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`")))
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        while let Some(c @ ('+' | '-')) = self.peek() {
            self.pos += 1;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.product()?)).folded();
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(c @ ('*' | '/')) = self.peek() {
            self.pos += 1;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?)).folded();
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some('-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)).folded());
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(')')?;
                Ok(e)
            }
            Some('J') => {
                self.pos += 1;
                self.expect('(')?;
                let a = self.label()?;
                self.expect(',')?;
                let b = self.label()?;
                self.expect(')')?;
                Ok(Expr::Coupling(a, b))
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) => Err(self.error(format!("unexpected `{c}` in expression"))),
            None => Err(self.error("expression ended unexpectedly")),
        }
    }

    fn label(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len()
            && (self.chars[self.pos].is_ascii_alphanumeric() || self.chars[self.pos] == '_')
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a spin label"));
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let mut prev = ' ';
        while let Some(&c) = self.chars.get(self.pos) {
            let exp_sign = (c == '+' || c == '-') && (prev == 'e' || prev == 'E');
            if !(c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || exp_sign) {
                break;
            }
            prev = c;
            self.pos += 1;
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| Error::Syntax {
                line: self.line,
                column: self.column0 + start,
                message: format!("invalid number `{text}`"),
            })
    }
}

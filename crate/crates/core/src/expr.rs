//! Weight expressions in the parameter `lambda` for custom finite families.
//!
//! Grammar: sums and products of numbers, `lambda` (alias `l`), parentheses,
//! integer powers `^`, and the functions `exp`, `log`, `sqrt`. Expressions
//! built from rationals with the four operations and integer powers also have
//! an exact rational-function form.

use std::fmt;

use crate::error::{Error, Result};
use crate::exact::{RatFunc, Q};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(Q),
    Lambda,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser { s: src.as_bytes(), i: 0 };
        let e = p.sum()?;
        p.ws();
        if p.i != p.s.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        use Expr::*;
        match self {
            Num(c) => crate::exact::q_to_f64(c),
            Lambda => lambda,
            Neg(a) => -a.eval(lambda),
            Add(a, b) => a.eval(lambda) + b.eval(lambda),
            Sub(a, b) => a.eval(lambda) - b.eval(lambda),
            Mul(a, b) => a.eval(lambda) * b.eval(lambda),
            Div(a, b) => a.eval(lambda) / b.eval(lambda),
            Pow(a, k) => a.eval(lambda).powi(*k),
            Call(Func::Exp, a) => a.eval(lambda).exp(),
            Call(Func::Log, a) => a.eval(lambda).ln(),
            Call(Func::Sqrt, a) => a.eval(lambda).sqrt(),
        }
    }

    /// Exact form, when the expression is rational in λ.
    pub fn to_ratfunc(&self) -> Option<RatFunc> {
        use Expr::*;
        Some(match self {
            Num(c) => RatFunc::constant(c.clone()),
            Lambda => RatFunc::x(),
            Neg(a) => -&a.to_ratfunc()?,
            Add(a, b) => &a.to_ratfunc()? + &b.to_ratfunc()?,
            Sub(a, b) => &a.to_ratfunc()? - &b.to_ratfunc()?,
            Mul(a, b) => &a.to_ratfunc()? * &b.to_ratfunc()?,
            Div(a, b) => a.to_ratfunc()?.div(&b.to_ratfunc()?)?,
            Pow(a, k) => {
                let base = a.to_ratfunc()?;
                if *k >= 0 {
                    base.pow(*k as u32)
                } else {
                    base.recip()?.pow(k.unsigned_abs())
                }
            }
            Call(..) => return None,
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Expr::*;
        match self {
            Num(c) if c.is_integer() => write!(f, "{}", c.numer()),
            Num(c) => write!(f, "({}/{})", c.numer(), c.denom()),
            Lambda => write!(f, "lambda"),
            Neg(a) => write!(f, "(-{a})"),
            Add(a, b) => write!(f, "({a} + {b})"),
            Sub(a, b) => write!(f, "({a} - {b})"),
            Mul(a, b) => write!(f, "({a} * {b})"),
            Div(a, b) => write!(f, "({a} / {b})"),
            Pow(a, k) => write!(f, "({a}^{k})"),
            Call(func, a) => {
                let name = match func {
                    Func::Exp => "exp",
                    Func::Log => "log",
                    Func::Sqrt => "sqrt",
                };
                write!(f, "{name}({a})")
            }
        }
    }
}

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Config(format!("{msg} at offset {} in weight expression", self.i))
    }

    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.ws();
        if self.s.get(self.i) == Some(&c) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.product()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.product()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        let base = self.atom()?;
        if self.eat(b'^') {
            let neg = self.eat(b'-');
            self.ws();
            let start = self.i;
            while self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
                self.i += 1;
            }
            let k: i32 = std::str::from_utf8(&self.s[start..self.i])
                .ok()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| self.err("expected an integer exponent"))?;
            return Ok(Expr::Pow(Box::new(base), if neg { -k } else { k }));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        self.ws();
        if self.eat(b'(') {
            let e = self.sum()?;
            if !self.eat(b')') {
                return Err(self.err("expected ')'"));
            }
            return Ok(e);
        }
        let start = self.i;
        match self.s.get(self.i) {
            Some(c) if c.is_ascii_digit() || *c == b'.' => {
                while self.i < self.s.len() && (self.s[self.i].is_ascii_digit() || self.s[self.i] == b'.') {
                    self.i += 1;
                }
                let text = std::str::from_utf8(&self.s[start..self.i]).unwrap();
                parse_decimal(text).map(Expr::Num).ok_or_else(|| self.err("malformed number"))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                while self.i < self.s.len() && self.s[self.i].is_ascii_alphanumeric() {
                    self.i += 1;
                }
                let word = std::str::from_utf8(&self.s[start..self.i]).unwrap();
                let func = match word {
                    "lambda" | "l" => return Ok(Expr::Lambda),
                    "exp" => Func::Exp,
                    "log" | "ln" => Func::Log,
                    "sqrt" => Func::Sqrt,
                    _ => return Err(self.err(&format!("unknown identifier '{word}'"))),
                };
                if !self.eat(b'(') {
                    return Err(self.err("expected '(' after function name"));
                }
                let arg = self.sum()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(Expr::Call(func, Box::new(arg)))
            }
            _ => Err(self.err("expected a number, 'lambda', or '('")),
        }
    }
}

/// Decimal literal as an exact rational (`0.3` is 3/10, not the nearest double).
fn parse_decimal(text: &str) -> Option<Q> {
    let (int, frac) = text.split_once('.').unwrap_or((text, ""));
    if int.is_empty() && frac.is_empty() || frac.contains('.') {
        return None;
    }
    let digits = format!("{int}{frac}");
    let n: num_bigint::BigInt = digits.parse().ok()?;
    let d = num_bigint::BigInt::from(10u32).pow(frac.len() as u32);
    Some(Q::new(n, d))
}

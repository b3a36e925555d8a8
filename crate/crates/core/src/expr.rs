//! Scalar expressions in the single variable `t`.
//!
//! Problem definitions (coefficients, boundary functions, the exponent `F`
//! of the analytic family) are given as text, parsed into an [`Expr`] tree,
//! evaluated in `f64`, and differentiated symbolically.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?        // right-associative
//! primary := number | 't' | 'pi' | 'e' | func '(' expr ')' | '(' expr ')'
//! func    := sin | cos | exp | ln | sqrt
//! ```

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};
use core::str::FromStr;

use crate::poly::Poly;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// The independent variable `t`.
    Var,
    Pi,
    E,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("parse error at byte {offset}: {message} (expected {expected})")]
pub struct ParseDiagnostic {
    pub offset: usize,
    pub message: String,
    pub expected: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    LogOfNonPositive,
    SqrtOfNegative,
    DivisionByZero,
    FractionalPowerOfNegative,
    NonFinite,
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainKind::LogOfNonPositive => "logarithm of a non-positive value",
            DomainKind::SqrtOfNegative => "square root of a negative value",
            DomainKind::DivisionByZero => "division by zero",
            DomainKind::FractionalPowerOfNegative => "fractional power of a negative base",
            DomainKind::NonFinite => "non-finite result",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("{kind} at t = {t}")]
pub struct EvalError {
    pub kind: DomainKind,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiffError {
    #[error("cannot differentiate `{0}`: exponent depends on t")]
    VariableExponent(String),
}

impl Expr {
    pub fn num(x: f64) -> Self {
        Expr::Num(x)
    }

    pub fn var() -> Self {
        Expr::Var
    }

    pub fn call(func: Func, arg: Expr) -> Self {
        match arg {
            Expr::Num(x) => match apply_func(func, x) {
                Ok(v) if v.is_finite() => Expr::Num(v),
                _ => Expr::Call(func, Box::new(Expr::Num(x))),
            },
            arg => Expr::Call(func, Box::new(arg)),
        }
    }

    pub fn exp(arg: Expr) -> Self {
        Self::call(Func::Exp, arg)
    }

    pub fn ln(arg: Expr) -> Self {
        Self::call(Func::Ln, arg)
    }

    pub fn sin(arg: Expr) -> Self {
        Self::call(Func::Sin, arg)
    }

    pub fn cos(arg: Expr) -> Self {
        Self::call(Func::Cos, arg)
    }

    pub fn sqrt(arg: Expr) -> Self {
        Self::call(Func::Sqrt, arg)
    }

    pub fn pow(self, exponent: Expr) -> Self {
        match (&self, &exponent) {
            (_, Expr::Num(g)) if *g == 0.0 => Expr::Num(1.0),
            (_, Expr::Num(g)) if *g == 1.0 => self,
            (Expr::Num(b), Expr::Num(g)) => match pow_checked(*b, *g) {
                Ok(v) if v.is_finite() => Expr::Num(v),
                _ => Expr::Binary(BinOp::Pow, Box::new(self), Box::new(exponent)),
            },
            _ => Expr::Binary(BinOp::Pow, Box::new(self), Box::new(exponent)),
        }
    }

    /// True when `t` occurs somewhere in the tree.
    pub fn contains_var(&self) -> bool {
        match self {
            Expr::Var => true,
            Expr::Num(_) | Expr::Pi | Expr::E => false,
            Expr::Neg(u) | Expr::Call(_, u) => u.contains_var(),
            Expr::Binary(_, l, r) => l.contains_var() || r.contains_var(),
        }
    }

    /// Evaluate at `t`.
    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        let v = self.eval_inner(t)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError {
                kind: DomainKind::NonFinite,
                t,
            })
        }
    }

    fn eval_inner(&self, t: f64) -> Result<f64, EvalError> {
        let fail = |kind| EvalError { kind, t };
        Ok(match self {
            Expr::Num(x) => *x,
            Expr::Var => t,
            Expr::Pi => core::f64::consts::PI,
            Expr::E => core::f64::consts::E,
            Expr::Neg(u) => -u.eval_inner(t)?,
            Expr::Binary(op, l, r) => {
                let a = l.eval_inner(t)?;
                let b = r.eval_inner(t)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(fail(DomainKind::DivisionByZero));
                        }
                        a / b
                    }
                    BinOp::Pow => pow_checked(a, b).map_err(fail)?,
                }
            }
            Expr::Call(func, u) => apply_func(*func, u.eval_inner(t)?).map_err(fail)?,
        })
    }

    /// Replace every occurrence of `t` by `inner`.
    pub fn compose(&self, inner: &Expr) -> Expr {
        match self {
            Expr::Var => inner.clone(),
            Expr::Num(_) | Expr::Pi | Expr::E => self.clone(),
            Expr::Neg(u) => -u.compose(inner),
            Expr::Binary(op, l, r) => build(*op, l.compose(inner), r.compose(inner)),
            Expr::Call(func, u) => Expr::call(*func, u.compose(inner)),
        }
    }

    /// `self` evaluated at `t + offset`.
    pub fn shifted(&self, offset: f64) -> Expr {
        self.compose(&(Expr::Var + Expr::Num(offset)))
    }

    /// Collapse every `t`-free subtree that evaluates cleanly into a number.
    pub fn folded(&self) -> Expr {
        if !self.contains_var() {
            if let Ok(v) = self.eval(0.0) {
                return Expr::Num(v);
            }
        }
        match self {
            Expr::Neg(u) => -u.folded(),
            Expr::Binary(op, l, r) => build(*op, l.folded(), r.folded()),
            Expr::Call(func, u) => Expr::call(*func, u.folded()),
            _ => self.clone(),
        }
    }

    /// Exact symbolic derivative with respect to `t`.
    ///
    /// `u^g` is supported only when `g` does not depend on `t`.
    pub fn differentiate(&self) -> Result<Expr, DiffError> {
        Ok(match self {
            Expr::Num(_) | Expr::Pi | Expr::E => Expr::Num(0.0),
            Expr::Var => Expr::Num(1.0),
            Expr::Neg(u) => -u.differentiate()?,
            Expr::Binary(op, u, v) => {
                let (u, v) = (u.as_ref(), v.as_ref());
                match op {
                    BinOp::Add => u.differentiate()? + v.differentiate()?,
                    BinOp::Sub => u.differentiate()? - v.differentiate()?,
                    BinOp::Mul => u.differentiate()? * v.clone() + u.clone() * v.differentiate()?,
                    BinOp::Div => {
                        let du = u.differentiate()?;
                        let dv = v.differentiate()?;
                        if matches!(dv, Expr::Num(z) if z == 0.0) {
                            du / v.clone()
                        } else {
                            (du * v.clone() - u.clone() * dv) / v.clone().pow(Expr::Num(2.0))
                        }
                    }
                    BinOp::Pow => {
                        if v.contains_var() {
                            return Err(DiffError::VariableExponent(self.to_string()));
                        }
                        let g = v.folded();
                        let lowered = (g.clone() - Expr::Num(1.0)).folded();
                        g * u.clone().pow(lowered) * u.differentiate()?
                    }
                }
            }
            Expr::Call(func, u) => {
                let du = u.differentiate()?;
                let u = u.as_ref().clone();
                match func {
                    Func::Sin => Expr::cos(u) * du,
                    Func::Cos => -(Expr::sin(u) * du),
                    Func::Exp => Expr::exp(u) * du,
                    Func::Ln => du / u,
                    Func::Sqrt => du / (Expr::Num(2.0) * Expr::sqrt(u)),
                }
            }
        })
    }

    /// Power-basis form when the expression is a polynomial in `t`
    /// (sums, products, constant divisors and non-negative integer powers).
    pub fn to_poly(&self) -> Option<Poly> {
        if !self.contains_var() {
            return self.eval(0.0).ok().map(Poly::constant);
        }
        match self {
            Expr::Var => Some(Poly::new(alloc::vec![0.0, 1.0])),
            Expr::Neg(u) => Some(-&u.to_poly()?),
            Expr::Binary(op, l, r) => match op {
                BinOp::Add => Some(&l.to_poly()? + &r.to_poly()?),
                BinOp::Sub => Some(&l.to_poly()? - &r.to_poly()?),
                BinOp::Mul => Some(&l.to_poly()? * &r.to_poly()?),
                BinOp::Div => {
                    if r.contains_var() {
                        return None;
                    }
                    let d = r.eval(0.0).ok()?;
                    if d == 0.0 {
                        return None;
                    }
                    Some(l.to_poly()?.scale(1.0 / d))
                }
                BinOp::Pow => {
                    if r.contains_var() {
                        return None;
                    }
                    let g = r.eval(0.0).ok()?;
                    if g < 0.0 || libm::trunc(g) != g || g > 64.0 {
                        return None;
                    }
                    let base = l.to_poly()?;
                    let mut out = Poly::constant(1.0);
                    for _ in 0..g as usize {
                        out = &out * &base;
                    }
                    Some(out)
                }
            },
            Expr::Call(..) | Expr::Num(_) | Expr::Pi | Expr::E => None,
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, ..) => op.precedence(),
            Expr::Neg(_) => 3,
            Expr::Num(x) if x.is_sign_negative() => 3,
            _ => 5,
        }
    }
}

fn pow_checked(base: f64, exponent: f64) -> Result<f64, DomainKind> {
    if libm::trunc(exponent) == exponent {
        if base == 0.0 && exponent < 0.0 {
            return Err(DomainKind::DivisionByZero);
        }
        return Ok(libm::pow(base, exponent));
    }
    if base > 0.0 {
        Ok(libm::exp(exponent * libm::log(base)))
    } else if base == 0.0 {
        if exponent > 0.0 {
            Ok(0.0)
        } else {
            Err(DomainKind::DivisionByZero)
        }
    } else {
        Err(DomainKind::FractionalPowerOfNegative)
    }
}

fn apply_func(func: Func, x: f64) -> Result<f64, DomainKind> {
    Ok(match func {
        Func::Sin => libm::sin(x),
        Func::Cos => libm::cos(x),
        Func::Exp => libm::exp(x),
        Func::Ln => {
            if x <= 0.0 {
                return Err(DomainKind::LogOfNonPositive);
            }
            libm::log(x)
        }
        Func::Sqrt => {
            if x < 0.0 {
                return Err(DomainKind::SqrtOfNegative);
            }
            libm::sqrt(x)
        }
    })
}

fn is_num(e: &Expr, x: f64) -> bool {
    matches!(e, Expr::Num(v) if *v == x)
}

/// Binary node with constant folding of numeric operands and neutral
/// elements.
fn build(op: BinOp, l: Expr, r: Expr) -> Expr {
    match op {
        BinOp::Add => l + r,
        BinOp::Sub => l - r,
        BinOp::Mul => l * r,
        BinOp::Div => l / r,
        BinOp::Pow => l.pow(r),
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        match (self, rhs) {
            (Expr::Num(a), Expr::Num(b)) => Expr::Num(a + b),
            (l, r) if is_num(&r, 0.0) => l,
            (l, r) if is_num(&l, 0.0) => r,
            (l, r) => Expr::Binary(BinOp::Add, Box::new(l), Box::new(r)),
        }
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        match (self, rhs) {
            (Expr::Num(a), Expr::Num(b)) => Expr::Num(a - b),
            (l, r) if is_num(&r, 0.0) => l,
            (l, r) if is_num(&l, 0.0) => -r,
            (l, r) => Expr::Binary(BinOp::Sub, Box::new(l), Box::new(r)),
        }
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        match (self, rhs) {
            (Expr::Num(a), Expr::Num(b)) => Expr::Num(a * b),
            (l, r) if is_num(&l, 0.0) || is_num(&r, 0.0) => Expr::Num(0.0),
            (l, r) if is_num(&r, 1.0) => l,
            (l, r) if is_num(&l, 1.0) => r,
            (l, r) if is_num(&r, -1.0) => -l,
            (l, r) if is_num(&l, -1.0) => -r,
            (l, r) => Expr::Binary(BinOp::Mul, Box::new(l), Box::new(r)),
        }
    }
}

impl Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        match (self, rhs) {
            (Expr::Num(a), Expr::Num(b)) if b != 0.0 => Expr::Num(a / b),
            (l, r) if is_num(&l, 0.0) && !is_num(&r, 0.0) => Expr::Num(0.0),
            (l, r) if is_num(&r, 1.0) => l,
            (l, r) => Expr::Binary(BinOp::Div, Box::new(l), Box::new(r)),
        }
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self {
            Expr::Num(x) => Expr::Num(-x),
            Expr::Neg(u) => *u,
            e => Expr::Neg(Box::new(e)),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
            if parens {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Num(x) if x.is_sign_negative() => write!(f, "-{}", -x),
            Expr::Num(x) => write!(f, "{x}"),
            Expr::Var => f.write_str("t"),
            Expr::Pi => f.write_str("pi"),
            Expr::E => f.write_str("e"),
            Expr::Neg(u) => {
                f.write_str("-")?;
                child(f, u, u.precedence() < 3)
            }
            Expr::Binary(op, l, r) => {
                let p = op.precedence();
                let (lp, rp) = (l.precedence(), r.precedence());
                let (left_parens, right_parens) = match op {
                    BinOp::Add | BinOp::Mul => (lp < p, rp <= p),
                    BinOp::Sub | BinOp::Div => (lp < p, rp <= p),
                    BinOp::Pow => (lp <= p, rp < 3),
                };
                child(f, l, left_parens)?;
                write!(f, " {} ", op.symbol())?;
                child(f, r, right_parens)
            }
            Expr::Call(func, u) => write!(f, "{}({u})", func.name()),
        }
    }
}

impl FromStr for Expr {
    type Err = ParseDiagnostic;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

/// Parse an expression in `t`.
pub fn parse(text: &str) -> Result<Expr, ParseDiagnostic> {
    let mut p = Parser { src: text, pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < text.len() {
        return Err(p.error("unexpected trailing input", "an operator or end of input"));
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq)]
enum Token<'a> {
    Number(f64),
    Ident(&'a str),
    Sym(char),
    End,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

const OPERAND: &str = "a number, `t`, `pi`, `e`, a function call, `(` or `-`";

impl<'a> Parser<'a> {
    fn error(&self, message: impl Into<String>, expected: &str) -> ParseDiagnostic {
        ParseDiagnostic {
            offset: self.pos.min(self.src.len()),
            message: message.into(),
            expected: expected.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    /// Next token and the byte offset just past it, without consuming.
    fn peek(&mut self) -> Result<(Token<'a>, usize), ParseDiagnostic> {
        self.skip_ws();
        let bytes = self.src.as_bytes();
        let start = self.pos;
        let Some(&c) = bytes.get(start) else {
            return Ok((Token::End, start));
        };
        if c.is_ascii_digit() || c == b'.' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut k = end + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    end = k;
                }
            }
            let lexeme = &self.src[start..end];
            return match lexeme.parse::<f64>() {
                Ok(v) => Ok((Token::Number(v), end)),
                Err(_) => Err(self.error(format!("malformed number `{lexeme}`"), "a number")),
            };
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            return Ok((Token::Ident(&self.src[start..end]), end));
        }
        let ch = self.src[start..].chars().next().unwrap_or('\0');
        Ok((Token::Sym(ch), start + ch.len_utf8()))
    }

    fn eat_sym(&mut self, sym: char) -> Result<bool, ParseDiagnostic> {
        let (tok, end) = self.peek()?;
        if tok == Token::Sym(sym) {
            self.pos = end;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseDiagnostic> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat_sym('+')? {
                BinOp::Add
            } else if self.eat_sym('-')? {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseDiagnostic> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat_sym('*')? {
                BinOp::Mul
            } else if self.eat_sym('/')? {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseDiagnostic> {
        if self.eat_sym('-')? {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseDiagnostic> {
        let base = self.primary()?;
        if self.eat_sym('^')? {
            let exponent = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseDiagnostic> {
        let (tok, end) = self.peek()?;
        match tok {
            Token::Number(v) => {
                self.pos = end;
                Ok(Expr::Num(v))
            }
            Token::Ident(name) => {
                let ident_start = self.pos;
                self.pos = end;
                match name {
                    "t" => Ok(Expr::Var),
                    "pi" => Ok(Expr::Pi),
                    "e" => Ok(Expr::E),
                    _ => {
                        let Some(func) = Func::from_name(name) else {
                            self.pos = ident_start;
                            return Err(self.error(
                                format!("unknown identifier `{name}`"),
                                "`t`, `pi`, `e`, or one of sin, cos, exp, ln, sqrt",
                            ));
                        };
                        if !self.eat_sym('(')? {
                            return Err(self.error(format!("`{name}` must be called"), "`(`"));
                        }
                        let arg = self.expr()?;
                        if !self.eat_sym(')')? {
                            return Err(self.error("unclosed function call", "`)`"));
                        }
                        Ok(Expr::Call(func, Box::new(arg)))
                    }
                }
            }
            Token::Sym('(') => {
                self.pos = end;
                let inner = self.expr()?;
                if !self.eat_sym(')')? {
                    return Err(self.error("unclosed parenthesis", "`)`"));
                }
                Ok(inner)
            }
            Token::End => Err(self.error("unexpected end of input", OPERAND)),
            Token::Sym(c) => Err(self.error(format!("unexpected `{c}`"), OPERAND)),
        }
    }
}

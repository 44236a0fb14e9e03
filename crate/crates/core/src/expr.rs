//! Coefficient-function expressions: parsing, printing, evaluation and exact
//! symbolic differentiation.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := primary ("^" unary)?          // right-associative
//! primary := number | ident | ident "(" expr ")" | "(" expr ")"
//! ```
//!
//! Identifiers are `x`, the function names `exp ln sqrt sin cos abs`, or
//! names from the constant table supplied to [`parse`]. Constants are
//! substituted at parse time and constant-only subtrees are folded.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{DomainKind, Error, EvalError, ParseError, ParseErrorKind, Result};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
    Abs,
}

impl Func {
    pub const ALL: [Func; 6] = [Func::Exp, Func::Ln, Func::Sqrt, Func::Sin, Func::Cos, Func::Abs];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply<T: Real>(self, v: T, x: T) -> std::result::Result<T, EvalError> {
        let out = match self {
            Func::Exp => v.exp(),
            Func::Ln => {
                if v <= T::zero() {
                    return Err(EvalError::domain(DomainKind::LogOfNonPositive, x.as_f64()));
                }
                v.ln()
            }
            Func::Sqrt => {
                if v < T::zero() {
                    return Err(EvalError::domain(DomainKind::SqrtOfNegative, x.as_f64()));
                }
                v.sqrt()
            }
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Abs => v.abs(),
        };
        Ok(out)
    }
}

/// Immutable expression tree in the single variable `x`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr<T> {
    Const(T),
    Var,
    Neg(Arc<Expr<T>>),
    Binary(BinOp, Arc<Expr<T>>, Arc<Expr<T>>),
    Call(Func, Arc<Expr<T>>),
}

/// Name → value table for constants bound at parse time.
pub type Constants<T> = BTreeMap<String, T>;

impl<T: Real> Expr<T> {
    pub fn constant(v: T) -> Self {
        Expr::Const(v)
    }

    pub fn lit(v: f64) -> Self {
        Expr::Const(T::lit(v))
    }

    pub fn x() -> Self {
        Expr::Var
    }

    pub fn as_const(&self) -> Option<T> {
        match self {
            Expr::Const(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Expr::Const(_))
    }

    /// Builds a binary node, folding it when both operands are constants
    /// and the result is finite.
    pub fn binary(op: BinOp, lhs: Expr<T>, rhs: Expr<T>) -> Self {
        if lhs.is_const() && rhs.is_const() {
            let folded = Expr::Binary(op, Arc::new(lhs.clone()), Arc::new(rhs.clone()));
            if let Ok(v) = folded.eval(T::zero()) {
                return Expr::Const(v);
            }
        }
        Expr::Binary(op, Arc::new(lhs), Arc::new(rhs))
    }

    pub fn call(f: Func, arg: Expr<T>) -> Self {
        if let Some(v) = arg.as_const() {
            if let Ok(r) = f.apply(v, T::zero()) {
                if r.is_finite() {
                    return Expr::Const(r);
                }
            }
        }
        Expr::Call(f, Arc::new(arg))
    }

    pub fn negate(arg: Expr<T>) -> Self {
        match arg {
            Expr::Const(v) => Expr::Const(-v),
            other => Expr::Neg(Arc::new(other)),
        }
    }

    pub fn pow(self, rhs: Expr<T>) -> Self {
        Expr::binary(BinOp::Pow, self, rhs)
    }

    pub fn powf(self, p: f64) -> Self {
        self.pow(Expr::lit(p))
    }

    pub fn exp(self) -> Self {
        Expr::call(Func::Exp, self)
    }

    pub fn ln(self) -> Self {
        Expr::call(Func::Ln, self)
    }

    pub fn sqrt(self) -> Self {
        Expr::call(Func::Sqrt, self)
    }

    pub fn sin(self) -> Self {
        Expr::call(Func::Sin, self)
    }

    pub fn cos(self) -> Self {
        Expr::call(Func::Cos, self)
    }

    pub fn abs(self) -> Self {
        Expr::call(Func::Abs, self)
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var => 1,
            Expr::Neg(a) | Expr::Call(_, a) => 1 + a.size(),
            Expr::Binary(_, a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var => 1,
            Expr::Neg(a) | Expr::Call(_, a) => 1 + a.depth(),
            Expr::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Evaluates the expression at `x`. Any operation without a finite real
    /// value yields a [`EvalError::Domain`].
    pub fn eval(&self, x: T) -> std::result::Result<T, EvalError> {
        let nonfinite = || EvalError::domain(DomainKind::NonFinite, x.as_f64());
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Var => x,
            Expr::Neg(a) => -a.eval(x)?,
            Expr::Call(f, a) => f.apply(a.eval(x)?, x)?,
            Expr::Binary(op, a, b) => {
                let l = a.eval(x)?;
                let r = b.eval(x)?;
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => {
                        if r == T::zero() {
                            return Err(EvalError::domain(DomainKind::DivisionByZero, x.as_f64()));
                        }
                        l / r
                    }
                    BinOp::Pow => power(l, r, x)?,
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(nonfinite())
        }
    }

    /// Exact symbolic derivative with respect to `x`.
    pub fn differentiate(&self) -> Expr<T> {
        match self {
            Expr::Const(_) => Expr::Const(T::zero()),
            Expr::Var => Expr::Const(T::one()),
            Expr::Neg(a) => neg(a.differentiate()),
            Expr::Binary(op, a, b) => {
                let (u, v) = (a.as_ref(), b.as_ref());
                match op {
                    BinOp::Add => add(u.differentiate(), v.differentiate()),
                    BinOp::Sub => sub(u.differentiate(), v.differentiate()),
                    BinOp::Mul => add(mul(u.differentiate(), v.clone()), mul(u.clone(), v.differentiate())),
                    BinOp::Div => div(
                        sub(mul(u.differentiate(), v.clone()), mul(u.clone(), v.differentiate())),
                        Expr::binary(BinOp::Pow, v.clone(), Expr::lit(2.0)),
                    ),
                    BinOp::Pow => differentiate_pow(u, v),
                }
            }
            Expr::Call(f, a) => {
                let inner = a.as_ref();
                let du = inner.differentiate();
                let outer = match f {
                    Func::Exp => self.clone(),
                    Func::Ln => div(Expr::lit(1.0), inner.clone()),
                    Func::Sqrt => div(Expr::lit(0.5), self.clone()),
                    Func::Sin => Expr::call(Func::Cos, inner.clone()),
                    Func::Cos => neg(Expr::call(Func::Sin, inner.clone())),
                    // u/|u|: undefined (division by zero) at u = 0
                    Func::Abs => div(inner.clone(), self.clone()),
                };
                mul(outer, du)
            }
        }
    }
}

fn power<T: Real>(base: T, exponent: T, x: T) -> std::result::Result<T, EvalError> {
    if base == T::zero() && exponent < T::zero() {
        return Err(EvalError::domain(DomainKind::ZeroToNegativePower, x.as_f64()));
    }
    let is_integer = exponent == exponent.trunc();
    if base < T::zero() && !is_integer {
        return Err(EvalError::domain(DomainKind::NegativeBaseFractionalPower, x.as_f64()));
    }
    if is_integer && exponent.abs() <= T::lit(64.0) {
        let n = exponent.to_i32().unwrap_or(0);
        return Ok(base.powi(n));
    }
    Ok(base.powf(exponent))
}

fn differentiate_pow<T: Real>(u: &Expr<T>, v: &Expr<T>) -> Expr<T> {
    if let Some(c) = v.as_const() {
        if c == T::zero() {
            return Expr::Const(T::zero());
        }
        let reduced = Expr::binary(BinOp::Pow, u.clone(), Expr::Const(c - T::one()));
        return mul(mul(Expr::Const(c), reduced), u.differentiate());
    }
    let whole = Expr::binary(BinOp::Pow, u.clone(), v.clone());
    if let Some(b) = u.as_const() {
        return mul(mul(whole, Expr::call(Func::Ln, Expr::Const(b))), v.differentiate());
    }
    let log_term = mul(v.differentiate(), Expr::call(Func::Ln, u.clone()));
    let ratio_term = div(mul(v.clone(), u.differentiate()), u.clone());
    mul(whole, add(log_term, ratio_term))
}

fn is_value<T: Real>(e: &Expr<T>, v: f64) -> bool {
    e.as_const() == Some(T::lit(v))
}

fn add<T: Real>(a: Expr<T>, b: Expr<T>) -> Expr<T> {
    if is_value(&a, 0.0) {
        return b;
    }
    if is_value(&b, 0.0) {
        return a;
    }
    Expr::binary(BinOp::Add, a, b)
}

fn sub<T: Real>(a: Expr<T>, b: Expr<T>) -> Expr<T> {
    if is_value(&b, 0.0) {
        return a;
    }
    if is_value(&a, 0.0) {
        return neg(b);
    }
    Expr::binary(BinOp::Sub, a, b)
}

fn mul<T: Real>(a: Expr<T>, b: Expr<T>) -> Expr<T> {
    if is_value(&a, 0.0) || is_value(&b, 0.0) {
        return Expr::Const(T::zero());
    }
    if is_value(&a, 1.0) {
        return b;
    }
    if is_value(&b, 1.0) {
        return a;
    }
    Expr::binary(BinOp::Mul, a, b)
}

fn div<T: Real>(a: Expr<T>, b: Expr<T>) -> Expr<T> {
    if is_value(&a, 0.0) {
        return Expr::Const(T::zero());
    }
    if is_value(&b, 1.0) {
        return a;
    }
    Expr::binary(BinOp::Div, a, b)
}

fn neg<T: Real>(a: Expr<T>) -> Expr<T> {
    match a {
        Expr::Neg(inner) => inner.as_ref().clone(),
        other => Expr::negate(other),
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $op:expr) => {
        impl<T: Real> std::ops::$trait for Expr<T> {
            type Output = Expr<T>;
            fn $method(self, rhs: Expr<T>) -> Expr<T> {
                Expr::binary($op, self, rhs)
            }
        }
        impl<T: Real> std::ops::$trait<f64> for Expr<T> {
            type Output = Expr<T>;
            fn $method(self, rhs: f64) -> Expr<T> {
                Expr::binary($op, self, Expr::lit(rhs))
            }
        }
    };
}

impl_binop!(Add, add, BinOp::Add);
impl_binop!(Sub, sub, BinOp::Sub);
impl_binop!(Mul, mul, BinOp::Mul);
impl_binop!(Div, div, BinOp::Div);

impl<T: Real> std::ops::Neg for Expr<T> {
    type Output = Expr<T>;
    fn neg(self) -> Expr<T> {
        Expr::negate(self)
    }
}

// ---------------------------------------------------------------------------
// Printing

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

impl<T: Real> Expr<T> {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Const(_) | Expr::Var | Expr::Call(..) => PREC_ATOM,
            Expr::Neg(_) => PREC_NEG,
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => PREC_ADD,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => PREC_MUL,
            Expr::Binary(BinOp::Pow, ..) => PREC_POW,
        }
    }

    fn write_child(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl<T: Real> fmt::Display for Expr<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) => {
                if v.is_sign_negative() {
                    write!(f, "({v})")
                } else {
                    write!(f, "{v}")
                }
            }
            Expr::Var => f.write_str("x"),
            Expr::Neg(a) => {
                f.write_str("-")?;
                a.write_child(f, PREC_NEG)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Binary(op, a, b) => {
                let (sym, prec) = match op {
                    BinOp::Add => (" + ", PREC_ADD),
                    BinOp::Sub => (" - ", PREC_ADD),
                    BinOp::Mul => ("*", PREC_MUL),
                    BinOp::Div => ("/", PREC_MUL),
                    BinOp::Pow => ("^", PREC_POW),
                };
                if *op == BinOp::Pow {
                    a.write_child(f, PREC_ATOM)?;
                    f.write_str(sym)?;
                    b.write_child(f, PREC_NEG)
                } else {
                    a.write_child(f, prec)?;
                    f.write_str(sym)?;
                    b.write_child(f, prec + 1)
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(s) | Tok::Ident(s) => s.clone(),
            Tok::Plus => "+".into(),
            Tok::Minus => "-".into(),
            Tok::Star => "*".into(),
            Tok::Slash => "/".into(),
            Tok::Caret => "^".into(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::Comma => ",".into(),
            Tok::End => "<end>".into(),
        }
    }
}

fn tokenize(text: &str) -> std::result::Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                out.push((Tok::Num(text[start..i].to_string()), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(ParseError { offset: i, kind: ParseErrorKind::UnexpectedChar(ch) });
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser<'a, T> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    constants: &'a Constants<T>,
}

impl<T: Real> Parser<'_, T> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self) -> ParseError {
        let kind = match self.peek() {
            Tok::End => ParseErrorKind::UnexpectedEnd,
            t => ParseErrorKind::UnexpectedToken(t.describe()),
        };
        ParseError { offset: self.offset(), kind }
    }

    fn expr(&mut self) -> std::result::Result<Expr<T>, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> std::result::Result<Expr<T>, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> std::result::Result<Expr<T>, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            let inner = self.unary()?;
            return Ok(Expr::negate(inner));
        }
        self.power()
    }

    fn power(&mut self) -> std::result::Result<Expr<T>, ParseError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> std::result::Result<Expr<T>, ParseError> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Num(s) => {
                self.bump();
                let v = T::from_str_radix(&s, 10)
                    .map_err(|_| ParseError { offset, kind: ParseErrorKind::InvalidNumber(s.clone()) })?;
                if !v.is_finite() {
                    return Err(ParseError { offset, kind: ParseErrorKind::InvalidNumber(s) });
                }
                Ok(Expr::Const(v))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.unexpected());
                }
                self.bump();
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                if let Some(func) = Func::from_name(&name) {
                    if *self.peek() != Tok::LParen {
                        return Err(ParseError { offset, kind: ParseErrorKind::Arity { name, expected: 1, found: 0 } });
                    }
                    self.bump();
                    if *self.peek() == Tok::RParen {
                        return Err(ParseError { offset, kind: ParseErrorKind::Arity { name, expected: 1, found: 0 } });
                    }
                    let arg = self.expr()?;
                    let mut found = 1;
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        self.expr()?;
                        found += 1;
                    }
                    if found != 1 {
                        return Err(ParseError { offset, kind: ParseErrorKind::Arity { name, expected: 1, found } });
                    }
                    if *self.peek() != Tok::RParen {
                        return Err(self.unexpected());
                    }
                    self.bump();
                    return Ok(Expr::call(func, arg));
                }
                let leaf = if name == "x" {
                    Expr::Var
                } else if let Some(v) = self.constants.get(&name) {
                    Expr::Const(*v)
                } else {
                    return Err(ParseError { offset, kind: ParseErrorKind::UnknownIdentifier(name) });
                };
                if *self.peek() == Tok::LParen {
                    return Err(ParseError { offset, kind: ParseErrorKind::Arity { name, expected: 0, found: 1 } });
                }
                Ok(leaf)
            }
            _ => Err(self.unexpected()),
        }
    }
}

/// Parses `text` with no bound constants.
pub fn parse<T: Real>(text: &str) -> std::result::Result<Expr<T>, ParseError> {
    parse_with(text, &Constants::new())
}

/// Parses `text`, substituting identifiers found in `constants`.
pub fn parse_with<T: Real>(text: &str, constants: &Constants<T>) -> std::result::Result<Expr<T>, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0, constants };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(ParseError { offset: p.offset(), kind: ParseErrorKind::TrailingInput });
    }
    Ok(e)
}

// ---------------------------------------------------------------------------
// Domain

/// Working interval `[lo, hi]` with the base point `x0` used as the lower
/// limit of every indefinite integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain<T> {
    lo: T,
    hi: T,
    x0: T,
}

impl<T: Real> Domain<T> {
    pub fn new(lo: T, hi: T, x0: T) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && x0.is_finite()) {
            return Err(Error::InvalidDomain("bounds must be finite".into()));
        }
        if lo >= hi {
            return Err(Error::InvalidDomain(format!("x_lo = {lo} must be < x_hi = {hi}")));
        }
        if x0 < lo || x0 > hi {
            return Err(Error::InvalidDomain(format!("base point {x0} outside [{lo}, {hi}]")));
        }
        Ok(Domain { lo, hi, x0 })
    }

    /// Interval with the base point at its left end.
    pub fn interval(lo: T, hi: T) -> Result<Self> {
        Self::new(lo, hi, lo)
    }

    pub fn lo(&self) -> T {
        self.lo
    }

    pub fn hi(&self) -> T {
        self.hi
    }

    pub fn x0(&self) -> T {
        self.x0
    }

    pub fn width(&self) -> T {
        self.hi - self.lo
    }

    pub fn contains(&self, x: T) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn with_base(&self, x0: T) -> Result<Self> {
        Self::new(self.lo, self.hi, x0)
    }

    /// `n` uniformly spaced points over `[lo + g, hi - g]`, `g = guard·width`.
    pub fn grid(&self, n: usize, guard: T) -> Vec<T> {
        let g = guard * self.width();
        let (a, b) = (self.lo + g, self.hi - g);
        if n < 2 {
            return vec![(a + b) / T::lit(2.0)];
        }
        let last = T::from_usize_lossy(n - 1);
        (0..n).map(|i| if i == n - 1 { b } else { a + (b - a) * T::from_usize_lossy(i) / last }).collect()
    }
}

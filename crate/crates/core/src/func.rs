//! Evaluable functions carrying an analytic first derivative.
//!
//! Coefficients, generating functions, antiderivatives and assembled
//! solutions all implement [`Function`]. The combinators here apply the
//! sum/product/quotient/chain rules so that derivatives of composed pieces
//! never go through finite differences.

use std::sync::Arc;

use crate::error::{DomainKind, EvalError};
use crate::expr::Expr;
use crate::real::Real;

pub trait Function<T: Real>: Send + Sync {
    fn eval(&self, x: T) -> Result<T, EvalError>;

    /// Value and first derivative at `x`.
    fn eval_d(&self, x: T) -> Result<(T, T), EvalError>;
}

/// Shared handle to a function.
pub type Fun<T> = Arc<dyn Function<T>>;

fn finite<T: Real>(v: T, x: T) -> Result<T, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::domain(DomainKind::NonFinite, x.as_f64()))
    }
}

/// An [`Expr`] paired with its symbolic derivative.
#[derive(Debug, Clone)]
pub struct Symbolic<T> {
    expr: Expr<T>,
    derivative: Expr<T>,
}

impl<T: Real> Symbolic<T> {
    pub fn new(expr: Expr<T>) -> Self {
        let derivative = expr.differentiate();
        Symbolic { expr, derivative }
    }

    pub fn expr(&self) -> &Expr<T> {
        &self.expr
    }

    pub fn derivative(&self) -> &Expr<T> {
        &self.derivative
    }
}

impl<T: Real> Function<T> for Symbolic<T> {
    fn eval(&self, x: T) -> Result<T, EvalError> {
        self.expr.eval(x)
    }

    fn eval_d(&self, x: T) -> Result<(T, T), EvalError> {
        Ok((self.expr.eval(x)?, self.derivative.eval(x)?))
    }
}

/// Closed-form composition of other functions.
enum Node<T: Real> {
    Constant(T),
    Sum(Fun<T>, Fun<T>),
    Difference(Fun<T>, Fun<T>),
    Product(Fun<T>, Fun<T>),
    Quotient(Fun<T>, Fun<T>),
    Affine { scale: T, offset: T, inner: Fun<T> },
    Sqrt(Fun<T>),
    Exp(Fun<T>),
}

struct Composite<T: Real>(Node<T>);

impl<T: Real> Function<T> for Composite<T> {
    fn eval(&self, x: T) -> Result<T, EvalError> {
        let v = match &self.0 {
            Node::Constant(c) => *c,
            Node::Sum(f, g) => f.eval(x)? + g.eval(x)?,
            Node::Difference(f, g) => f.eval(x)? - g.eval(x)?,
            Node::Product(f, g) => f.eval(x)? * g.eval(x)?,
            Node::Quotient(f, g) => {
                let den = g.eval(x)?;
                if den == T::zero() {
                    return Err(EvalError::domain(DomainKind::DivisionByZero, x.as_f64()));
                }
                f.eval(x)? / den
            }
            Node::Affine { scale, offset, inner } => *scale * inner.eval(x)? + *offset,
            Node::Sqrt(f) => {
                let v = f.eval(x)?;
                if v < T::zero() {
                    return Err(EvalError::domain(DomainKind::SqrtOfNegative, x.as_f64()));
                }
                v.sqrt()
            }
            Node::Exp(f) => f.eval(x)?.exp(),
        };
        finite(v, x)
    }

    fn eval_d(&self, x: T) -> Result<(T, T), EvalError> {
        let two = T::lit(2.0);
        let (v, d) = match &self.0 {
            Node::Constant(c) => (*c, T::zero()),
            Node::Sum(f, g) => {
                let (a, da) = f.eval_d(x)?;
                let (b, db) = g.eval_d(x)?;
                (a + b, da + db)
            }
            Node::Difference(f, g) => {
                let (a, da) = f.eval_d(x)?;
                let (b, db) = g.eval_d(x)?;
                (a - b, da - db)
            }
            Node::Product(f, g) => {
                let (a, da) = f.eval_d(x)?;
                let (b, db) = g.eval_d(x)?;
                (a * b, da * b + a * db)
            }
            Node::Quotient(f, g) => {
                let (a, da) = f.eval_d(x)?;
                let (b, db) = g.eval_d(x)?;
                if b == T::zero() {
                    return Err(EvalError::domain(DomainKind::DivisionByZero, x.as_f64()));
                }
                (a / b, (da * b - a * db) / (b * b))
            }
            Node::Affine { scale, offset, inner } => {
                let (a, da) = inner.eval_d(x)?;
                (*scale * a + *offset, *scale * da)
            }
            Node::Sqrt(f) => {
                let (a, da) = f.eval_d(x)?;
                if a < T::zero() {
                    return Err(EvalError::domain(DomainKind::SqrtOfNegative, x.as_f64()));
                }
                let r = a.sqrt();
                if r == T::zero() {
                    if da == T::zero() {
                        (r, T::zero())
                    } else {
                        return Err(EvalError::domain(DomainKind::DivisionByZero, x.as_f64()));
                    }
                } else {
                    (r, da / (two * r))
                }
            }
            Node::Exp(f) => {
                let (a, da) = f.eval_d(x)?;
                let e = a.exp();
                (e, e * da)
            }
        };
        Ok((finite(v, x)?, finite(d, x)?))
    }
}

fn node<T: Real>(n: Node<T>) -> Fun<T> {
    Arc::new(Composite(n))
}

pub fn symbolic<T: Real>(expr: Expr<T>) -> Fun<T> {
    Arc::new(Symbolic::new(expr))
}

pub fn constant<T: Real>(v: T) -> Fun<T> {
    node(Node::Constant(v))
}

pub fn add<T: Real>(f: Fun<T>, g: Fun<T>) -> Fun<T> {
    node(Node::Sum(f, g))
}

pub fn sub<T: Real>(f: Fun<T>, g: Fun<T>) -> Fun<T> {
    node(Node::Difference(f, g))
}

pub fn mul<T: Real>(f: Fun<T>, g: Fun<T>) -> Fun<T> {
    node(Node::Product(f, g))
}

pub fn div<T: Real>(f: Fun<T>, g: Fun<T>) -> Fun<T> {
    node(Node::Quotient(f, g))
}

/// `scale·f + offset`.
pub fn affine<T: Real>(scale: T, offset: T, f: Fun<T>) -> Fun<T> {
    node(Node::Affine { scale, offset, inner: f })
}

pub fn scale<T: Real>(k: T, f: Fun<T>) -> Fun<T> {
    affine(k, T::zero(), f)
}

pub fn neg<T: Real>(f: Fun<T>) -> Fun<T> {
    affine(-T::one(), T::zero(), f)
}

pub fn sqrt<T: Real>(f: Fun<T>) -> Fun<T> {
    node(Node::Sqrt(f))
}

pub fn exp<T: Real>(f: Fun<T>) -> Fun<T> {
    node(Node::Exp(f))
}

pub fn square<T: Real>(f: Fun<T>) -> Fun<T> {
    mul(f.clone(), f)
}

/// Adapts a closure returning `(value, derivative)` into a [`Fun`].
pub fn from_fn<T, F>(f: F) -> Fun<T>
where
    T: Real,
    F: Fn(T) -> Result<(T, T), EvalError> + Send + Sync + 'static,
{
    struct Closure<F>(F);
    impl<T: Real, F> Function<T> for Closure<F>
    where
        F: Fn(T) -> Result<(T, T), EvalError> + Send + Sync,
    {
        fn eval(&self, x: T) -> Result<T, EvalError> {
            Ok((self.0)(x)?.0)
        }
        fn eval_d(&self, x: T) -> Result<(T, T), EvalError> {
            (self.0)(x)
        }
    }
    Arc::new(Closure(f))
}

/// Central difference, used only to cross-check analytic derivatives.
pub fn central_difference<T: Real>(f: &dyn Function<T>, x: T, h: T) -> Result<T, EvalError> {
    Ok((f.eval(x + h)? - f.eval(x - h)?) / (T::lit(2.0) * h))
}

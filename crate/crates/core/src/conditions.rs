//! Integrability conditions and the coefficients they determine.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::calc::{find_poles, Antiderivative, DEFAULT_SCAN_POINTS};
use crate::error::{Error, EvalError, Result};
use crate::expr::{Domain, Expr};
use crate::func::{self, Fun};
use crate::real::{Real, Sign};

/// Number of points in every condition residual grid.
pub const RESIDUAL_GRID: usize = 256;
/// Endpoint guard of residual grids, as a fraction of the domain width.
pub const RESIDUAL_GUARD: f64 = 1e-6;

/// Coefficients of `y' = a + b y + c y²` over a working domain.
#[derive(Clone)]
pub struct CoefficientSet<T: Real> {
    a: Fun<T>,
    b: Option<Fun<T>>,
    c: Fun<T>,
    dom: Domain<T>,
}

impl<T: Real> std::fmt::Debug for CoefficientSet<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoefficientSet").field("dom", &self.dom).field("has_b", &self.b.is_some()).finish()
    }
}

impl<T: Real> CoefficientSet<T> {
    /// Validates that `a`, `b`, `c` evaluate on the residual grid and that
    /// `c` is not identically zero there.
    pub fn new(a: Fun<T>, b: Option<Fun<T>>, c: Fun<T>, dom: Domain<T>) -> Result<Self> {
        let grid = residual_grid(&dom);
        let mut c_nonzero = false;
        for &x in &grid {
            a.eval(x)?;
            if let Some(b) = &b {
                b.eval(x)?;
            }
            c_nonzero |= c.eval(x)? != T::zero();
        }
        if !c_nonzero {
            return Err(Error::InvalidInput("c vanishes on every sampled point".into()));
        }
        Ok(CoefficientSet { a, b, c, dom })
    }

    pub fn from_exprs(a: Expr<T>, b: Option<Expr<T>>, c: Expr<T>, dom: Domain<T>) -> Result<Self> {
        Self::new(func::symbolic(a), b.map(func::symbolic), func::symbolic(c), dom)
    }

    pub fn a(&self) -> &Fun<T> {
        &self.a
    }

    pub fn b(&self) -> Option<&Fun<T>> {
        self.b.as_ref()
    }

    pub fn c(&self) -> &Fun<T> {
        &self.c
    }

    pub fn dom(&self) -> &Domain<T> {
        &self.dom
    }

    pub fn is_reduced(&self) -> bool {
        self.b.is_none()
    }

    /// `(a, b, c)` at `x`, with `b = 0` when absent.
    pub fn values(&self, x: T) -> std::result::Result<(T, T, T), EvalError> {
        let b = match &self.b {
            Some(b) => b.eval(x)?,
            None => T::zero(),
        };
        Ok((self.a.eval(x)?, b, self.c.eval(x)?))
    }

    /// Right-hand side `a + b y + c y²`.
    pub fn rhs(&self, x: T, y: T) -> std::result::Result<T, EvalError> {
        let (a, b, c) = self.values(x)?;
        Ok(a + b * y + c * y * y)
    }

    /// Magnitude scale `|a| + |b y| + |c y²|` used for relative residuals.
    pub fn rhs_scale(&self, x: T, y: T) -> std::result::Result<T, EvalError> {
        let (a, b, c) = self.values(x)?;
        Ok(a.abs() + (b * y).abs() + (c * y * y).abs())
    }
}

/// Solution-generating data: either `f` (entering through `√f`) or the
/// integrand `F` with its additive constant `F₀`.
#[derive(Clone)]
pub enum Generator<T: Real> {
    Discriminant(Fun<T>),
    Integrand { gen: Fun<T>, f0: T },
}

#[derive(Clone)]
pub struct GeneratingSpec<T: Real> {
    pub generator: Generator<T>,
    pub sign: Sign,
}

impl<T: Real> GeneratingSpec<T> {
    pub fn discriminant(f: Fun<T>, sign: Sign) -> Self {
        GeneratingSpec { generator: Generator::Discriminant(f), sign }
    }

    pub fn integrand(gen: Fun<T>, f0: T) -> Self {
        GeneratingSpec { generator: Generator::Integrand { gen, f0 }, sign: Sign::Plus }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport<T> {
    pub max_residual: T,
    pub residual_grid: Vec<(T, T)>,
    pub holds: bool,
    pub tol: T,
}

impl<T: Real> ConditionReport<T> {
    fn from_grid(residual_grid: Vec<(T, T)>, tol: T) -> Self {
        let max_residual = residual_grid.iter().fold(T::zero(), |m, &(_, r)| m.max(r.abs()));
        ConditionReport { holds: max_residual <= tol, max_residual, residual_grid, tol }
    }
}

pub fn residual_grid<T: Real>(dom: &Domain<T>) -> Vec<T> {
    dom.grid(RESIDUAL_GRID, T::lit(RESIDUAL_GUARD))
}

/// Evaluates `r` on the residual grid in parallel; the result keeps grid
/// order so the reduction is deterministic.
fn evaluate_residual<T, F>(dom: &Domain<T>, tol: T, r: F) -> Result<ConditionReport<T>>
where
    T: Real,
    F: Fn(T) -> std::result::Result<T, EvalError> + Sync,
{
    let grid = residual_grid(dom);
    let values: std::result::Result<Vec<(T, T)>, EvalError> = grid.par_iter().map(|&x| r(x).map(|v| (x, v))).collect();
    Ok(ConditionReport::from_grid(values?, tol))
}

/// `(−b ± √f)/(2c)`.
pub fn amc_particular<T: Real>(b: Option<&Fun<T>>, c: &Fun<T>, f: &Fun<T>, sign: Sign) -> Fun<T> {
    let root = func::scale(sign.value(), func::sqrt(f.clone()));
    let top = match b {
        Some(b) => func::sub(root, b.clone()),
        None => root,
    };
    func::div(top, func::scale(T::lit(2.0), c.clone()))
}

/// Residual of `a = d/dx[(−b ± √f)/(2c)] + (b² − f)/(4c)` on the residual grid.
pub fn check_condition_full<T: Real>(
    cs: &CoefficientSet<T>,
    f: &Fun<T>,
    sign: Sign,
    tol: T,
) -> Result<ConditionReport<T>> {
    let yp = amc_particular(cs.b(), cs.c(), f, sign);
    evaluate_residual(cs.dom(), tol, |x| {
        let (a, b, c) = cs.values(x)?;
        let (_, dyp) = yp.eval_d(x)?;
        let fv = f.eval(x)?;
        Ok(a - dyp - (b * b - fv) / (T::lit(4.0) * c))
    })
}

/// `S(x) = ∫_{x0}^x F + F₀`, checked to be free of zeros on the domain.
#[derive(Clone)]
pub struct GeneratingIntegral<T: Real> {
    gen: Fun<T>,
    f0: T,
    s: Fun<T>,
}

impl<T: Real> GeneratingIntegral<T> {
    pub fn new(gen: Fun<T>, f0: T, dom: &Domain<T>, tol: T) -> Result<Self> {
        let integral = Antiderivative::new(gen.clone(), *dom, tol).into_fun();
        let s = func::affine(T::one(), f0, integral);
        let poles = find_poles(s.as_ref(), dom, DEFAULT_SCAN_POINTS)?;
        if let Some(p) = poles.iter().next() {
            return Err(Error::VanishingIntegral { x: p.root.as_f64() });
        }
        for x in [dom.lo(), dom.hi()] {
            if s.eval(x)? == T::zero() {
                return Err(Error::VanishingIntegral { x: x.as_f64() });
            }
        }
        Ok(GeneratingIntegral { gen, f0, s })
    }

    pub fn generator(&self) -> &Fun<T> {
        &self.gen
    }

    pub fn f0(&self) -> T {
        self.f0
    }

    /// `∫F + F₀`.
    pub fn s(&self) -> &Fun<T> {
        &self.s
    }

    /// `b = (F − a)/S − c S`.
    pub fn b(&self, a: &Fun<T>, c: &Fun<T>) -> Fun<T> {
        func::sub(
            func::div(func::sub(self.gen.clone(), a.clone()), self.s.clone()),
            func::mul(c.clone(), self.s.clone()),
        )
    }

    /// `c S + (F − a)/S`, the quantity whose square is `f`.
    pub fn root_f(&self, a: &Fun<T>, c: &Fun<T>) -> Fun<T> {
        func::add(
            func::mul(c.clone(), self.s.clone()),
            func::div(func::sub(self.gen.clone(), a.clone()), self.s.clone()),
        )
    }
}

/// `b = (F − a)/(∫F + F₀) − c·(∫F + F₀)`.
pub fn derive_b<T: Real>(a: &Fun<T>, c: &Fun<T>, gen: &Fun<T>, f0: T, dom: &Domain<T>, tol: T) -> Result<Fun<T>> {
    Ok(GeneratingIntegral::new(gen.clone(), f0, dom, tol)?.b(a, c))
}

/// Full coefficient set `(a, derive_b(a, c, F, F₀), c)`.
pub fn theorem_coefficients<T: Real>(
    a: &Fun<T>,
    c: &Fun<T>,
    gen: &GeneratingIntegral<T>,
    dom: &Domain<T>,
) -> Result<CoefficientSet<T>> {
    CoefficientSet::new(a.clone(), Some(gen.b(a, c)), c.clone(), *dom)
}

/// `f = 4c(F − a) + b²`.
#[allow(non_snake_case)]
pub fn derive_f_from_F<T: Real>(a: &Fun<T>, b: Option<&Fun<T>>, c: &Fun<T>, gen: &Fun<T>) -> Fun<T> {
    let main = func::scale(T::lit(4.0), func::mul(c.clone(), func::sub(gen.clone(), a.clone())));
    match b {
        Some(b) => func::add(main, func::square(b.clone())),
        None => main,
    }
}

/// Residual `b − [(F − a)/S − c S]` for a fully specified coefficient set.
pub fn check_condition_bbb<T: Real>(
    cs: &CoefficientSet<T>,
    gen: &Fun<T>,
    f0: T,
    tol: T,
    quad_tol: T,
) -> Result<ConditionReport<T>> {
    let gi = GeneratingIntegral::new(gen.clone(), f0, cs.dom(), quad_tol)?;
    let derived = gi.b(cs.a(), cs.c());
    evaluate_residual(cs.dom(), tol, |x| {
        let (_, b, _) = cs.values(x)?;
        Ok(b - derived.eval(x)?)
    })
}

/// Residual of `±(√(f/c))' = a + f` on the residual grid.
pub fn check_condition_reduced<T: Real>(
    a: &Fun<T>,
    c: &Fun<T>,
    f: &Fun<T>,
    sign: Sign,
    dom: &Domain<T>,
    tol: T,
) -> Result<ConditionReport<T>> {
    let root = func::sqrt(func::div(f.clone(), c.clone()));
    let s = sign.value::<T>();
    evaluate_residual(dom, tol, |x| {
        let (_, d) = root.eval_d(x)?;
        Ok(s * d - a.eval(x)? - f.eval(x)?)
    })
}

/// Reduced form of a full Riccati equation under `y = e^{B} v`,
/// `B = ∫_{x0}^x b`.
#[derive(Clone)]
pub struct LinearElimination<T: Real> {
    reduced: CoefficientSet<T>,
    exp_b: Fun<T>,
}

impl<T: Real> LinearElimination<T> {
    pub fn reduced(&self) -> &CoefficientSet<T> {
        &self.reduced
    }

    /// `e^{∫b}`.
    pub fn factor(&self) -> &Fun<T> {
        &self.exp_b
    }

    /// Maps a solution `v` of the reduced equation back to `y = e^{∫b} v`.
    pub fn lift(&self, v: Fun<T>) -> Fun<T> {
        func::mul(self.exp_b.clone(), v)
    }
}

/// `(a, b, c) ↦ (a e^{−∫b}, 0, c e^{∫b})`.
pub fn eliminate_linear_term<T: Real>(cs: &CoefficientSet<T>, tol: T) -> Result<LinearElimination<T>> {
    let Some(b) = cs.b() else {
        return Ok(LinearElimination { reduced: cs.clone(), exp_b: func::constant(T::one()) });
    };
    let big_b: Fun<T> = Arc::new(Antiderivative::new(b.clone(), *cs.dom(), tol));
    let exp_b = func::exp(big_b.clone());
    let exp_minus_b = func::exp(func::neg(big_b));
    let reduced = CoefficientSet::new(
        func::mul(cs.a().clone(), exp_minus_b),
        None,
        func::mul(cs.c().clone(), exp_b.clone()),
        *cs.dom(),
    )?;
    Ok(LinearElimination { reduced, exp_b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn s(text: &str) -> Fun<f64> {
        func::symbolic(parse(text).unwrap())
    }

    fn dom(lo: f64, hi: f64) -> Domain<f64> {
        Domain::interval(lo, hi).unwrap()
    }

    #[test]
    fn constant_data_satisfies_full_condition() {
        let cs = CoefficientSet::new(s("-0.25"), None, s("1"), dom(0.0, 1.0)).unwrap();
        for sign in [Sign::Plus, Sign::Minus] {
            let r = check_condition_full(&cs, &s("1"), sign, 1e-12).unwrap();
            assert_eq!(r.max_residual, 0.0);
            assert!(r.holds);
            assert_eq!(r.residual_grid.len(), RESIDUAL_GRID);
        }
    }

    #[test]
    fn violated_full_condition_is_reported() {
        // residual = x − (x/2)' − (0 − x²)/4
        let cs = CoefficientSet::new(s("x"), None, s("1"), dom(0.5, 2.0)).unwrap();
        let r = check_condition_full(&cs, &s("x^2"), Sign::Plus, 1e-9).unwrap();
        assert!(!r.holds);
        for &(x, v) in &r.residual_grid {
            assert!((v - (x - 0.5 + x * x / 4.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn reduced_condition_examples() {
        let d = dom(1.0, 2.0);
        let r = check_condition_reduced(&s("-1"), &s("1"), &s("1"), Sign::Minus, &d, 1e-12).unwrap();
        assert!(r.holds && r.max_residual == 0.0);
        let r = check_condition_reduced(&s("0"), &s("1"), &s("x"), Sign::Plus, &d, 1e-9).unwrap();
        assert!(!r.holds);
        for &(x, v) in &r.residual_grid {
            assert!((v - (0.5 / x.sqrt() - x)).abs() < 1e-13);
        }
    }

    #[test]
    fn derive_b_with_f_equal_a() {
        let d = dom(0.0, 1.0);
        let b = derive_b(&s("0"), &s("1"), &s("0"), 1.0, &d, 1e-10).unwrap();
        for x in [0.0, 0.3, 1.0] {
            assert_eq!(b.eval(x).unwrap(), -1.0);
        }
    }

    #[test]
    fn vanishing_integral_is_rejected() {
        let d = dom(0.0, 2.0);
        // ∫1 − 1 = x − 1 crosses zero at 1
        match derive_b(&s("1"), &s("1"), &s("1"), -1.0, &d, 1e-10) {
            Err(Error::VanishingIntegral { x }) => assert!((x - 1.0).abs() < 1e-9),
            Err(e) => panic!("unexpected error {e}"),
            Ok(_) => panic!("expected an error"),
        }
    }

    #[test]
    fn f_from_capital_f_vanishes_when_f_equals_a() {
        let f = derive_f_from_F(&s("x^2"), None, &s("3"), &s("x^2"));
        assert_eq!(f.eval(0.7).unwrap(), 0.0);
    }

    #[test]
    fn constant_b_elimination() {
        let cs = CoefficientSet::new(s("1"), Some(s("1")), s("1"), dom(0.0, 1.0)).unwrap();
        let e = eliminate_linear_term(&cs, 1e-12).unwrap();
        assert!(e.reduced().is_reduced());
        for x in [0.0, 0.25, 0.8] {
            let (a, b, c) = e.reduced().values(x).unwrap();
            assert!((a - (-x).exp()).abs() < 1e-12);
            assert_eq!(b, 0.0);
            assert!((c - x.exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn identically_zero_c_is_rejected() {
        assert!(CoefficientSet::new(s("1"), None, s("0"), dom(0.0, 1.0)).is_err());
    }
}

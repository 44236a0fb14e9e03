//! Closed-form-by-quadrature general solutions.
//!
//! Every solution has the shape `y = y_p + N/D` with `D = C − ∫_{x0}^x c N`,
//! so `N(x0) = 1` and `D(x0) = C`. The derivative is assembled analytically
//! from the pieces.

use std::sync::Arc;

use crate::calc::{find_poles, Antiderivative, Pole, PoleSet, DEFAULT_SCAN_POINTS, DEFAULT_TOLERANCE};
use crate::conditions::{
    amc_particular, check_condition_full, check_condition_reduced, CoefficientSet, GeneratingIntegral, GeneratingSpec,
    Generator,
};
use crate::error::{Error, EvalError, Result};
use crate::expr::{Domain, Expr};
use crate::func::{self, Fun, Function};
use crate::oracle::POLE_GUARD;
use crate::real::{Real, Sign};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions<T> {
    /// Tolerance of the outermost quadrature; inner levels are tighter.
    pub tol: T,
    /// Pole scan resolution.
    pub grid: usize,
    /// Tolerance of the integrability pre-check.
    pub condition_tol: T,
    /// Assemble even when the pre-check fails.
    pub force: bool,
}

impl<T: Real> Default for SolveOptions<T> {
    fn default() -> Self {
        SolveOptions {
            tol: T::lit(DEFAULT_TOLERANCE),
            grid: DEFAULT_SCAN_POINTS,
            condition_tol: T::lit(1e-8),
            force: false,
        }
    }
}

impl<T: Real> SolveOptions<T> {
    fn inner_tol(&self) -> T {
        self.tol / T::lit(10.0)
    }

    fn innermost_tol(&self) -> T {
        self.tol / T::lit(100.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolutionKind {
    Amc,
    Theorem,
    Reduced,
    ReducedLogForm,
}

/// An assembled general solution `y(x; C)`.
#[derive(Clone)]
pub struct SolutionArtifact<T: Real> {
    kind: SolutionKind,
    particular: Fun<T>,
    numerator: Fun<T>,
    integral: Fun<T>,
    denominator: Fun<T>,
    fluctuation: Fun<T>,
    constant: T,
    sign: Option<Sign>,
    poles: PoleSet<T>,
    dom: Domain<T>,
}

impl<T: Real> std::fmt::Debug for SolutionArtifact<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SolutionArtifact")
            .field("kind", &self.kind)
            .field("constant", &self.constant)
            .field("sign", &self.sign)
            .field("poles", &self.poles)
            .field("dom", &self.dom)
            .finish()
    }
}

/// Sign changes of `D` on the domain, plus zeros that a Newton step from
/// either end places within the pole guard outside it. The latter have no
/// bracket inside the domain but still make `y` too steep to verify there.
fn scan_poles<T: Real>(d: &dyn Function<T>, dom: &Domain<T>, grid: usize) -> Result<PoleSet<T>> {
    let found = find_poles(d, dom, grid)?;
    let mut poles: Vec<Pole<T>> = found.iter().copied().collect();
    let reach = T::lit(POLE_GUARD) * dom.width();
    for (x, outward) in [(dom.lo(), -T::one()), (dom.hi(), T::one())] {
        let (v, dv) = d.eval_d(x)?;
        if v == T::zero() {
            if !poles.iter().any(|p| p.lo <= x && x <= p.hi) {
                poles.push(Pole { lo: x, hi: x, root: x });
            }
            continue;
        }
        let step = -v / dv;
        if step.is_finite() && step * outward > T::zero() && step.abs() <= reach {
            let root = x + step;
            poles.push(Pole { lo: root, hi: root, root });
        }
    }
    Ok(PoleSet::from_poles(poles))
}

struct Parts<T: Real> {
    kind: SolutionKind,
    particular: Fun<T>,
    numerator: Fun<T>,
    integral: Fun<T>,
    constant: T,
    sign: Option<Sign>,
    log_form: bool,
}

fn assemble<T: Real>(p: Parts<T>, dom: &Domain<T>, grid: usize) -> Result<SolutionArtifact<T>> {
    let denominator = func::affine(-T::one(), p.constant, p.integral.clone());
    let fluctuation = if p.log_form {
        log_derivative_term(denominator.clone(), p.numerator.clone())
    } else {
        func::div(p.numerator.clone(), denominator.clone())
    };
    let poles = scan_poles(denominator.as_ref(), dom, grid)?;
    Ok(SolutionArtifact {
        kind: p.kind,
        particular: p.particular,
        numerator: p.numerator,
        integral: p.integral,
        denominator,
        fluctuation,
        constant: p.constant,
        sign: p.sign,
        poles,
        dom: *dom,
    })
}

/// `−d/dx ln D` with `D' = −N` read off `D` itself and `D'' = −N'`.
fn log_derivative_term<T: Real>(denominator: Fun<T>, integrand: Fun<T>) -> Fun<T> {
    func::from_fn(move |x: T| {
        let (d, d1) = denominator.eval_d(x)?;
        if d == T::zero() {
            return Err(EvalError::AtSingularity { x: x.as_f64(), pole: x.as_f64() });
        }
        let (_, n1) = integrand.eval_d(x)?;
        let d2 = -n1;
        Ok((-d1 / d, -(d2 * d - d1 * d1) / (d * d)))
    })
}

impl<T: Real> SolutionArtifact<T> {
    pub fn kind(&self) -> SolutionKind {
        self.kind
    }

    pub fn particular(&self) -> &Fun<T> {
        &self.particular
    }

    pub fn numerator(&self) -> &Fun<T> {
        &self.numerator
    }

    pub fn denominator(&self) -> &Fun<T> {
        &self.denominator
    }

    /// `∫_{x0}^x c N`, so that `D = C − integral`.
    pub fn integral(&self) -> &Fun<T> {
        &self.integral
    }

    pub fn constant(&self) -> T {
        self.constant
    }

    pub fn sign(&self) -> Option<Sign> {
        self.sign
    }

    pub fn poles(&self) -> &PoleSet<T> {
        &self.poles
    }

    pub fn dom(&self) -> &Domain<T> {
        &self.dom
    }

    fn check_pole(&self, x: T) -> std::result::Result<(), EvalError> {
        match self.poles.near(x, T::zero()) {
            Some(p) => Err(EvalError::AtSingularity { x: x.as_f64(), pole: p.root.as_f64() }),
            None => Ok(()),
        }
    }

    /// `true` when `x` lies within `guard` of a pole bracket.
    pub fn in_pole(&self, x: T, guard: T) -> bool {
        self.poles.near(x, guard).is_some()
    }

    pub fn value(&self, x: T) -> std::result::Result<T, EvalError> {
        self.eval(x)
    }

    /// Copy whose denominator integral is scaled by `factor`, keeping `N`.
    /// For `factor ≠ 1` the result is not a solution; used as a negative
    /// control for verification.
    pub fn with_scaled_integral(&self, factor: T, grid: usize) -> Result<Self> {
        assemble(
            Parts {
                kind: self.kind,
                particular: self.particular.clone(),
                numerator: self.numerator.clone(),
                integral: func::scale(factor, self.integral.clone()),
                constant: self.constant,
                sign: self.sign,
                log_form: false,
            },
            &self.dom,
            grid,
        )
    }

    pub fn into_fun(self) -> Fun<T> {
        Arc::new(self)
    }
}

impl<T: Real> Function<T> for SolutionArtifact<T> {
    fn eval(&self, x: T) -> std::result::Result<T, EvalError> {
        self.check_pole(x)?;
        Ok(self.particular.eval(x)? + self.fluctuation.eval(x)?)
    }

    fn eval_d(&self, x: T) -> std::result::Result<(T, T), EvalError> {
        self.check_pole(x)?;
        let (p, dp) = self.particular.eval_d(x)?;
        let (q, dq) = self.fluctuation.eval_d(x)?;
        Ok((p + q, dp + dq))
    }
}

/// General solution for data satisfying the full condition:
/// `y = (−b ± √f)/(2c) + e^{±∫√f} / (C − ∫ c e^{±∫√f})`.
pub fn solve_amc<T: Real>(
    cs: &CoefficientSet<T>,
    f: &Fun<T>,
    sign: Sign,
    constant: T,
    opts: &SolveOptions<T>,
) -> Result<SolutionArtifact<T>> {
    let report = check_condition_full(cs, f, sign, opts.condition_tol)?;
    if !report.holds && !opts.force {
        return Err(Error::ConditionViolated {
            max_residual: report.max_residual.as_f64(),
            tol: opts.condition_tol.as_f64(),
        });
    }
    let dom = cs.dom();
    let root = func::sqrt(f.clone());
    let exponent = Antiderivative::new(root, *dom, opts.inner_tol()).into_fun();
    let numerator = func::exp(func::scale(sign.value(), exponent));
    let integral = Antiderivative::new(func::mul(cs.c().clone(), numerator.clone()), *dom, opts.tol).into_fun();
    assemble(
        Parts {
            kind: SolutionKind::Amc,
            particular: amc_particular(cs.b(), cs.c(), f, sign),
            numerator,
            integral,
            constant,
            sign: Some(sign),
            log_form: false,
        },
        dom,
        opts.grid,
    )
}

/// General solution generated by `F`:
/// `y = S + e^{∫P} / (C₀ − ∫ c e^{∫P})`, `S = ∫F + F₀`, `P = c S + (F − a)/S`.
pub fn solve_theorem_full<T: Real>(
    a: &Fun<T>,
    c: &Fun<T>,
    gen: &Fun<T>,
    f0: T,
    c0: T,
    dom: &Domain<T>,
    opts: &SolveOptions<T>,
) -> Result<SolutionArtifact<T>> {
    let gi = GeneratingIntegral::new(gen.clone(), f0, dom, opts.innermost_tol())?;
    solve_theorem_with(&gi, a, c, c0, dom, opts)
}

/// [`solve_theorem_full`] reusing an existing `S`.
pub fn solve_theorem_with<T: Real>(
    gi: &GeneratingIntegral<T>,
    a: &Fun<T>,
    c: &Fun<T>,
    c0: T,
    dom: &Domain<T>,
    opts: &SolveOptions<T>,
) -> Result<SolutionArtifact<T>> {
    let p = gi.root_f(a, c);
    let exponent = Antiderivative::new(p, *dom, opts.inner_tol()).into_fun();
    let numerator = func::exp(exponent);
    let integral = Antiderivative::new(func::mul(c.clone(), numerator.clone()), *dom, opts.tol).into_fun();
    assemble(
        Parts {
            kind: SolutionKind::Theorem,
            particular: gi.s().clone(),
            numerator,
            integral,
            constant: c0,
            sign: None,
            log_form: false,
        },
        dom,
        opts.grid,
    )
}

/// General solution of the reduced equation `y' = a + c y²` under
/// `±(√(f/c))' = a + f`:
/// `y = ±√(f/c) + e^{±2∫c√(f/c)} / (C − ∫ c e^{±2∫c√(f/c)})`.
pub fn solve_reduced<T: Real>(
    a: &Fun<T>,
    c: &Fun<T>,
    f: &Fun<T>,
    sign: Sign,
    constant: T,
    dom: &Domain<T>,
    opts: &SolveOptions<T>,
) -> Result<SolutionArtifact<T>> {
    let report = check_condition_reduced(a, c, f, sign, dom, opts.condition_tol)?;
    if !report.holds && !opts.force {
        return Err(Error::ConditionViolated {
            max_residual: report.max_residual.as_f64(),
            tol: opts.condition_tol.as_f64(),
        });
    }
    let root = func::sqrt(func::div(f.clone(), c.clone()));
    let exponent = Antiderivative::new(func::mul(c.clone(), root.clone()), *dom, opts.inner_tol()).into_fun();
    let numerator = func::exp(func::scale(T::lit(2.0) * sign.value::<T>(), exponent));
    let integral = Antiderivative::new(func::mul(c.clone(), numerator.clone()), *dom, opts.tol).into_fun();
    assemble(
        Parts {
            kind: SolutionKind::Reduced,
            particular: func::scale(sign.value(), root),
            numerator,
            integral,
            constant,
            sign: Some(sign),
            log_form: false,
        },
        dom,
        opts.grid,
    )
}

/// `c ≡ 1` form `y = ±√f − d/dx ln[C − ∫ e^{±2∫√f}]`, with
/// `a = ±(√f)' − f` implied.
pub fn solve_reduced_log_form<T: Real>(
    f: &Fun<T>,
    sign: Sign,
    constant: T,
    dom: &Domain<T>,
    opts: &SolveOptions<T>,
) -> Result<SolutionArtifact<T>> {
    let root = func::sqrt(f.clone());
    let exponent = Antiderivative::new(root.clone(), *dom, opts.inner_tol()).into_fun();
    let numerator = func::exp(func::scale(T::lit(2.0) * sign.value::<T>(), exponent));
    let integral = Antiderivative::new(numerator.clone(), *dom, opts.tol).into_fun();
    assemble(
        Parts {
            kind: SolutionKind::ReducedLogForm,
            particular: func::scale(sign.value(), root),
            numerator,
            integral,
            constant,
            sign: Some(sign),
            log_form: true,
        },
        dom,
        opts.grid,
    )
}

/// `a` for which the reduced condition holds: `±(√(f/c))' − f`.
pub fn reduced_a<T: Real>(f: &Expr<T>, c: &Expr<T>, sign: Sign) -> Expr<T> {
    let slope = (f.clone() / c.clone()).sqrt().differentiate();
    let slope = match sign {
        Sign::Plus => slope,
        Sign::Minus => -slope,
    };
    slope - f.clone()
}

/// `a` implied by the log form: `±(√f)' − f`.
pub fn log_form_a<T: Real>(f: &Expr<T>, sign: Sign) -> Expr<T> {
    let slope = f.clone().sqrt().differentiate();
    let slope = match sign {
        Sign::Plus => slope,
        Sign::Minus => -slope,
    };
    slope - f.clone()
}

/// Particular solution fixed by the generating data: `±√(f/c)` for a
/// discriminant generator, `∫F + F₀` for an integrand generator.
pub fn particular_solution<T: Real>(spec: &GeneratingSpec<T>, c: &Fun<T>, dom: &Domain<T>, tol: T) -> Result<Fun<T>> {
    match &spec.generator {
        Generator::Discriminant(f) => Ok(func::scale(spec.sign.value(), func::sqrt(func::div(f.clone(), c.clone())))),
        Generator::Integrand { gen, f0 } => Ok(GeneratingIntegral::new(gen.clone(), *f0, dom, tol)?.s().clone()),
    }
}

//! Independent verification of assembled solutions: residual substitution
//! and comparison against an adaptive Dormand–Prince 5(4) integration.

use rayon::prelude::*;
use serde::Serialize;

use crate::calc::{Antiderivative, PoleSet};
use crate::conditions::{residual_grid, CoefficientSet};
use crate::error::{Error, EvalError, OdeError, Result};
use crate::expr::Domain;
use crate::func::{Fun, Function};
use crate::real::Real;
use crate::solutions::SolutionArtifact;

/// Slope magnitude beyond which integration stops with a blow-up.
pub const BLOW_UP_SLOPE: f64 = 1e8;
/// Distance kept from pole brackets, as a fraction of the domain width.
pub const POLE_GUARD: f64 = 1e-3;
/// Shortest pole-free segment used, as a fraction of the domain width.
pub const MIN_SEGMENT: f64 = 0.01;

// ---------------------------------------------------------------------------
// Dormand–Prince 5(4)

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];

const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions<T> {
    pub rtol: T,
    pub atol: T,
    pub max_steps: usize,
    pub blow_up: T,
}

impl<T: Real> OdeOptions<T> {
    /// Local tolerances five orders tighter than the comparison tolerance.
    pub fn for_tolerance(tol: T) -> Self {
        let t = (tol * T::lit(1e-5)).max(T::lit(1e-13));
        OdeOptions { rtol: t, atol: t, max_steps: 200_000, blow_up: T::lit(BLOW_UP_SLOPE) }
    }
}

#[derive(Debug, Clone)]
struct DenseStep<T, const N: usize> {
    x: T,
    h: T,
    cont: [[T; N]; 5],
}

/// Accepted steps with continuous extension.
#[derive(Debug, Clone)]
pub struct Trajectory<T, const N: usize> {
    start: T,
    end: T,
    steps: Vec<DenseStep<T, N>>,
    initial: [T; N],
    blow_up: Option<(T, T)>,
}

impl<T: Real, const N: usize> Trajectory<T, N> {
    pub fn start(&self) -> T {
        self.start
    }

    /// Last point reached; equals the requested end unless integration was
    /// truncated by a blow-up.
    pub fn end(&self) -> T {
        self.end
    }

    pub fn steps(&self) -> usize {
        self.steps.len()
    }

    /// Location and slope where the derivative cap was exceeded.
    pub fn blow_up(&self) -> Option<(T, T)> {
        self.blow_up
    }

    pub fn completed(&self) -> std::result::Result<(), OdeError> {
        match self.blow_up {
            Some((x, slope)) => Err(OdeError::BlowUp { x: x.as_f64(), slope: slope.as_f64() }),
            None => Ok(()),
        }
    }

    /// Dense-output state at `x` within the integrated range.
    pub fn at(&self, x: T) -> Option<[T; N]> {
        let forward = self.end >= self.start;
        let inside = if forward { x >= self.start && x <= self.end } else { x <= self.start && x >= self.end };
        if !inside {
            return None;
        }
        if self.steps.is_empty() {
            return Some(self.initial);
        }
        let idx = self
            .steps
            .partition_point(|s| if forward { s.x + s.h < x } else { s.x + s.h > x })
            .min(self.steps.len() - 1);
        let s = &self.steps[idx];
        let theta = (x - s.x) / s.h;
        let theta1 = T::one() - theta;
        let mut out = [T::zero(); N];
        for (i, o) in out.iter_mut().enumerate() {
            let c = &s.cont;
            *o = c[0][i] + theta * (c[1][i] + theta1 * (c[2][i] + theta * (c[3][i] + theta1 * c[4][i])));
        }
        Some(out)
    }
}

fn error_norm<T: Real, const N: usize>(err: &[T; N], y0: &[T; N], y1: &[T; N], o: &OdeOptions<T>) -> T {
    let mut sum = T::zero();
    for i in 0..N {
        let sk = o.atol + o.rtol * y0[i].abs().max(y1[i].abs());
        let r = err[i] / sk;
        sum = sum + r * r;
    }
    (sum / T::from_usize_lossy(N)).sqrt()
}

fn max_abs<T: Real, const N: usize>(v: &[T; N]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// Integrates `y' = rhs(x, y)` from `x0` to `x_end` (either direction).
pub fn integrate_system<T, const N: usize, F>(
    rhs: F,
    x0: T,
    y0: [T; N],
    x_end: T,
    opts: &OdeOptions<T>,
) -> std::result::Result<Trajectory<T, N>, OdeError>
where
    T: Real,
    F: Fn(T, &[T; N]) -> std::result::Result<[T; N], EvalError>,
{
    let f = |x: T, y: &[T; N]| rhs(x, y).map_err(OdeError::Rhs);
    let mut traj = Trajectory { start: x0, end: x0, steps: Vec::new(), initial: y0, blow_up: None };
    if x_end == x0 {
        return Ok(traj);
    }
    let dir = if x_end > x0 { T::one() } else { -T::one() };
    let span = (x_end - x0).abs();
    let cap = opts.blow_up;

    let mut x = x0;
    let mut y = y0;
    let mut k0 = f(x, &y)?;
    if max_abs(&k0) > cap {
        traj.blow_up = Some((x, max_abs(&k0)));
        return Ok(traj);
    }

    // starting step from the scale of y and y'
    let sc = |v: T| opts.atol + opts.rtol * v.abs();
    let d0 = (0..N).fold(T::zero(), |m, i| m.max(y[i].abs() / sc(y[i])));
    let d1 = (0..N).fold(T::zero(), |m, i| m.max(k0[i].abs() / sc(y[i])));
    let mut h = if d0 < T::lit(1e-5) || d1 < T::lit(1e-5) { T::lit(1e-6) * span } else { T::lit(0.01) * d0 / d1 };
    h = h.min(span / T::lit(10.0)).max(span * T::lit(1e-12)) * dir;

    let safe = T::lit(0.9);
    let beta = T::lit(0.04);
    let expo1 = T::lit(0.2) - beta * T::lit(0.75);
    let facc1 = T::lit(5.0);
    let facc2 = T::lit(0.1);
    let mut facold = T::lit(1e-4);
    let h_floor = span * T::lit(1e-14);

    let mut k = [[T::zero(); N]; 7];
    for _ in 0..opts.max_steps {
        let remaining = (x_end - x) * dir;
        if remaining <= T::zero() {
            traj.end = x_end;
            return Ok(traj);
        }
        let last = h * dir >= remaining * (T::one() - T::lit(1e-12));
        if last {
            h = remaining * dir;
        }
        if h.abs() < h_floor {
            return Err(OdeError::StepUnderflow { x: x.as_f64() });
        }
        k[0] = k0;
        let mut blown = None;
        for s in 1..7 {
            let mut ys = y;
            for i in 0..N {
                let mut acc = T::zero();
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc = acc + T::lit(A[s][j]) * kj[i];
                }
                ys[i] = y[i] + h * acc;
            }
            let xs = if s >= 5 { x + h } else { x + T::lit(C[s]) * h };
            k[s] = match f(xs, &ys) {
                Ok(v) => v,
                Err(OdeError::Rhs(_)) => {
                    // treat an undefined stage as a failed step
                    blown = Some(T::infinity());
                    break;
                }
                Err(e) => return Err(e),
            };
            let m = max_abs(&k[s]);
            if m.is_nan() || m > cap {
                blown = Some(m);
                break;
            }
        }
        let mut y1 = y;
        let mut err = [T::zero(); N];
        if blown.is_none() {
            for i in 0..N {
                let mut acc = T::zero();
                let mut e = T::zero();
                for s in 0..6 {
                    acc = acc + T::lit(A[6][s]) * k[s][i];
                }
                for s in 0..7 {
                    e = e + T::lit(E[s]) * k[s][i];
                }
                y1[i] = y[i] + h * acc;
                err[i] = h * e;
            }
        }
        let norm = match blown {
            Some(_) => T::infinity(),
            None => error_norm(&err, &y, &y1, opts),
        };
        if !norm.is_finite() {
            // shrink hard; if the step is already tiny the cap was truly hit
            if h.abs() <= span * T::lit(1e-10) {
                traj.blow_up = Some((x, blown.unwrap_or(T::infinity())));
                traj.end = x;
                return Ok(traj);
            }
            h = h * T::lit(0.1);
            continue;
        }
        let fac11 = norm.powf(expo1);
        if norm <= T::one() {
            let fac = (fac11 / facold.powf(beta)) / safe;
            let fac = facc2.max(facc1.min(fac));
            facold = norm.max(T::lit(1e-4));
            let ydiff: [T; N] = std::array::from_fn(|i| y1[i] - y[i]);
            let bspl: [T; N] = std::array::from_fn(|i| h * k[0][i] - ydiff[i]);
            let cont = [
                y,
                ydiff,
                bspl,
                std::array::from_fn(|i| ydiff[i] - h * k[6][i] - bspl[i]),
                std::array::from_fn(|i| h * (0..7).fold(T::zero(), |acc, s| acc + T::lit(D[s]) * k[s][i])),
            ];
            traj.steps.push(DenseStep { x, h, cont });
            x = if last { x_end } else { x + h };
            y = y1;
            k0 = k[6];
            traj.end = x;
            h = h / fac;
        } else {
            h = h / facc1.min(fac11 / safe);
        }
    }
    Err(OdeError::MaxSteps { x: x.as_f64() })
}

/// Integrates the Riccati equation of `cs` from `(x_start, y_start)`.
pub fn integrate_riccati<T: Real>(
    cs: &CoefficientSet<T>,
    x_start: T,
    y_start: T,
    x_end: T,
    tol: T,
) -> std::result::Result<Trajectory<T, 1>, OdeError> {
    integrate_system(|x, y: &[T; 1]| Ok([cs.rhs(x, y[0])?]), x_start, [y_start], x_end, &OdeOptions::for_tolerance(tol))
}

// ---------------------------------------------------------------------------
// Verification

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport<T> {
    pub max_residual: T,
    pub residual_grid: Vec<(T, T)>,
    /// Largest closed-form vs integrated difference; infinite when the
    /// oracle trajectory blew up inside a segment.
    pub oracle_max_error: T,
    pub segments: Vec<(T, T)>,
    pub poles: Vec<T>,
    pub pass: bool,
    pub tol: T,
}

impl<T: Real> VerificationReport<T> {
    fn finish(residual_grid: Vec<(T, T)>, oracle_max_error: T, segments: Vec<(T, T)>, poles: Vec<T>, tol: T) -> Self {
        let max_residual = residual_grid.iter().fold(T::zero(), |m, &(_, r)| m.max(r));
        VerificationReport {
            pass: max_residual <= tol && oracle_max_error <= tol,
            max_residual,
            residual_grid,
            oracle_max_error,
            segments,
            poles,
            tol,
        }
    }
}

fn pole_free_segments<T: Real>(poles: &PoleSet<T>, dom: &Domain<T>) -> Result<Vec<(T, T)>> {
    let w = dom.width();
    let min_len = T::lit(MIN_SEGMENT) * w;
    let segments = poles.segments(dom, T::lit(POLE_GUARD) * w, T::lit(1e-6) * w, min_len);
    if segments.is_empty() {
        return Err(Error::NoPoleFreeSegment { min_len: min_len.as_f64() });
    }
    Ok(segments)
}

fn in_segments<T: Real>(x: T, segments: &[(T, T)]) -> bool {
    segments.iter().any(|&(a, b)| x >= a && x <= b)
}

fn relative_difference<T: Real>(exact: T, approx: T) -> T {
    (exact - approx).abs() / T::one().max(exact.abs())
}

/// Residual and oracle checks of a function claimed to solve the equation
/// of `cs` away from `poles`.
pub fn verify_function<T: Real>(
    y: &dyn Function<T>,
    poles: &PoleSet<T>,
    cs: &CoefficientSet<T>,
    tol: T,
) -> Result<VerificationReport<T>> {
    let dom = cs.dom();
    let segments = pole_free_segments(poles, dom)?;
    let grid: Vec<T> = residual_grid(dom).into_iter().filter(|&x| in_segments(x, &segments)).collect();
    let residuals: std::result::Result<Vec<(T, T)>, EvalError> = grid
        .par_iter()
        .map(|&x| {
            let (v, d) = y.eval_d(x)?;
            let rhs = cs.rhs(x, v)?;
            let scale = T::one().max(d.abs()).max(cs.rhs_scale(x, v)?);
            Ok((x, (d - rhs).abs() / scale))
        })
        .collect();
    let residuals = residuals?;

    let mut oracle = T::zero();
    for &(a, b) in &segments {
        let traj = match integrate_riccati(cs, a, y.eval(a)?, b, tol) {
            Ok(t) => t,
            Err(OdeError::Rhs(e)) => return Err(e.into()),
            Err(_) => {
                oracle = T::infinity();
                continue;
            }
        };
        if traj.blow_up().is_some() {
            oracle = T::infinity();
            continue;
        }
        for &x in grid.iter().filter(|&&x| x >= a && x <= b).chain(std::iter::once(&b)) {
            let rk = traj.at(x).map(|s| s[0]).unwrap_or(T::infinity());
            oracle = oracle.max(relative_difference(y.eval(x)?, rk));
        }
    }
    Ok(VerificationReport::finish(residuals, oracle, segments, poles.roots(), tol))
}

pub fn verify<T: Real>(sol: &SolutionArtifact<T>, cs: &CoefficientSet<T>, tol: T) -> Result<VerificationReport<T>> {
    if sol.dom() != cs.dom() {
        return Err(Error::InvalidInput("solution and coefficients use different domains".into()));
    }
    verify_function(sol, sol.poles(), cs, tol)
}

// ---------------------------------------------------------------------------
// Schrödinger

/// `ψ = ψ₀ exp(−∫_{x0}^x u)` for a pole-free Riccati solution `u` of
/// `u' = E − V + u²`; then `ψ' = −uψ` and `ψ'' = (u² − u')ψ`.
#[derive(Clone)]
pub struct Wavefunction<T: Real> {
    u: Fun<T>,
    big_u: Fun<T>,
    psi0: T,
}

impl<T: Real> Wavefunction<T> {
    pub fn from_riccati(u: Fun<T>, psi0: T, dom: &Domain<T>, tol: T) -> Self {
        let big_u = Antiderivative::new(u.clone(), *dom, tol).into_fun();
        Wavefunction { u, big_u, psi0 }
    }

    pub fn riccati(&self) -> &Fun<T> {
        &self.u
    }

    /// `(ψ, ψ', ψ'')`.
    pub fn eval2(&self, x: T) -> std::result::Result<(T, T, T), EvalError> {
        let (u, du) = self.u.eval_d(x)?;
        let psi = self.psi0 * (-self.big_u.eval(x)?).exp();
        Ok((psi, -u * psi, (u * u - du) * psi))
    }
}

impl<T: Real> Function<T> for Wavefunction<T> {
    fn eval(&self, x: T) -> std::result::Result<T, EvalError> {
        Ok(self.psi0 * (-self.big_u.eval(x)?).exp())
    }

    fn eval_d(&self, x: T) -> std::result::Result<(T, T), EvalError> {
        let (psi, dpsi, _) = self.eval2(x)?;
        Ok((psi, dpsi))
    }
}

/// Residual `|ψ'' + (E − V)ψ| / max(1, |ψ|)` on the residual grid, and a
/// second-order oracle integration of `ψ'' = (V − E)ψ` from the left end.
pub fn verify_schrodinger<T: Real>(
    psi: &Wavefunction<T>,
    v: &Fun<T>,
    energy: T,
    dom: &Domain<T>,
    tol: T,
) -> Result<VerificationReport<T>> {
    let grid = residual_grid(dom);
    let residuals: std::result::Result<Vec<(T, T)>, EvalError> = grid
        .par_iter()
        .map(|&x| {
            let (p, _, p2) = psi.eval2(x)?;
            let r = p2 + (energy - v.eval(x)?) * p;
            Ok((x, r.abs() / T::one().max(p.abs())))
        })
        .collect();
    let residuals = residuals?;

    let (a, b) = (grid[0], grid[grid.len() - 1]);
    let (p0, dp0, _) = psi.eval2(a)?;
    let traj = integrate_system(
        |x, s: &[T; 2]| Ok([s[1], (v.eval(x)? - energy) * s[0]]),
        a,
        [p0, dp0],
        b,
        &OdeOptions::for_tolerance(tol),
    );
    let mut oracle = T::zero();
    match traj {
        Ok(t) if t.blow_up().is_none() => {
            for &x in &grid {
                let rk = t.at(x).map(|s| s[0]).unwrap_or(T::infinity());
                oracle = oracle.max(relative_difference(psi.eval(x)?, rk));
            }
        }
        Ok(_) => oracle = T::infinity(),
        Err(OdeError::Rhs(e)) => return Err(e.into()),
        Err(_) => oracle = T::infinity(),
    }
    Ok(VerificationReport::finish(residuals, oracle, vec![(a, b)], Vec::new(), tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::func;

    fn s(text: &str) -> Fun<f64> {
        func::symbolic(parse(text).unwrap())
    }

    fn cs(a: &str, c: &str, lo: f64, hi: f64) -> CoefficientSet<f64> {
        CoefficientSet::new(s(a), None, s(c), Domain::interval(lo, hi).unwrap()).unwrap()
    }

    #[test]
    fn tanh_trajectory() {
        let c = cs("-1", "1", 0.0, 2.0);
        let t = integrate_riccati(&c, 0.0, 0.0, 2.0, 1e-8).unwrap();
        assert!(t.blow_up().is_none());
        for i in 0..=40 {
            let x = 2.0 * i as f64 / 40.0;
            assert!((t.at(x).unwrap()[0] + x.tanh()).abs() < 1e-8, "x={x}");
        }
        assert!((t.at(1.0).unwrap()[0] + 0.761594156).abs() < 1e-9);
    }

    #[test]
    fn equilibrium_is_constant() {
        let c = cs("-1", "1", 0.0, 1.0);
        let t = integrate_riccati(&c, 0.0, -1.0, 1.0, 1e-8).unwrap();
        for x in [0.0, 0.37, 1.0] {
            assert_eq!(t.at(x).unwrap()[0], -1.0);
        }
    }

    #[test]
    fn blow_up_is_reported_before_the_pole() {
        let c = cs("0", "1", 0.0, 2.0);
        let t = integrate_riccati(&c, 0.0, 1.0, 2.0, 1e-8).unwrap();
        let (x, _) = t.blow_up().expect("blow-up");
        assert!(x < 1.0 && x > 0.99);
        assert!(t.completed().is_err());
        assert!(t.at(1.5).is_none());
        let near = t.end() * 0.999;
        assert!((t.at(near).unwrap()[0] - 1.0 / (1.0 - near)).abs() < 1e-6 / (1.0 - near));
    }

    #[test]
    fn backward_integration() {
        let c = cs("-1", "1", 0.0, 2.0);
        let t = integrate_riccati(&c, 1.0, -(1f64.tanh()), 0.0, 1e-8).unwrap();
        assert!(t.at(0.0).unwrap()[0].abs() < 1e-8);
    }

    #[test]
    fn harmonic_oscillator_system() {
        let t = integrate_system(
            |_, s: &[f64; 2]| Ok([s[1], -s[0]]),
            0.0,
            [0.0, 1.0],
            3.0,
            &OdeOptions::for_tolerance(1e-7),
        )
        .unwrap();
        for x in [0.5, 1.5, 3.0] {
            assert!((t.at(x).unwrap()[0] - f64::sin(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn constant_wavefunction() {
        let d = Domain::interval(0.0, 1.0).unwrap();
        let psi = Wavefunction::from_riccati(func::constant(0.0), 2.0, &d, 1e-10);
        let r = verify_schrodinger(&psi, &func::constant(3.0), 3.0, &d, 1e-10).unwrap();
        assert_eq!(r.max_residual, 0.0);
        assert_eq!(r.oracle_max_error, 0.0);
        assert!(r.pass);
    }
}

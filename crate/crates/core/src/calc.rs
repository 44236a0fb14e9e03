//! Cumulative adaptive quadrature and sign-change (pole) detection.
//!
//! [`Antiderivative`] realizes `A(x) = ∫_{x0}^{x} g(t) dt` over a [`Domain`].
//! The domain is cut into panels at uniform breakpoints plus `x0`; each panel
//! is fitted lazily by adaptive Chebyshev interpolation of `g` (first-kind
//! nodes, so panel endpoints are never sampled) and the fit is integrated
//! exactly. Panel fits and the cumulative integrals at breakpoints are
//! memoized with `OnceLock`, which keeps evaluation observationally pure.
//!
//! [`integrate`] is an independent adaptive Gauss–Kronrod (10/21) rule for
//! definite integrals.

use std::sync::{Arc, OnceLock};

use crate::error::{EvalError, QuadError};
use crate::expr::Domain;
use crate::func::{Fun, Function};
use crate::real::Real;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_SCAN_POINTS: usize = 2048;

const TOP_PANELS: usize = 8;
const MAX_PIECES_PER_PANEL: usize = 512;
const LOW_ORDER: usize = 16;
const HIGH_ORDER: usize = 32;

// ---------------------------------------------------------------------------
// Gauss–Kronrod

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077958109831074,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

/// One 21-point Kronrod estimate and its error against the embedded
/// 10-point Gauss rule.
fn gk21<T, F>(f: &F, a: T, b: T) -> Result<(T, T), EvalError>
where
    T: Real,
    F: Fn(T) -> Result<T, EvalError> + ?Sized,
{
    let center = (a + b) / T::lit(2.0);
    let half = (b - a) / T::lit(2.0);
    let fc = f(center)?;
    let mut kronrod = fc * T::lit(WGK[10]);
    let mut gauss = T::zero();
    for j in 0..10 {
        let dx = half * T::lit(XGK[j]);
        let pair = f(center - dx)? + f(center + dx)?;
        kronrod = kronrod + T::lit(WGK[j]) * pair;
        // odd Kronrod indices are the Gauss nodes
        if j % 2 == 1 {
            gauss = gauss + T::lit(WG[j / 2]) * pair;
        }
    }
    let k = kronrod * half;
    let g = gauss * half;
    Ok((k, (k - g).abs()))
}

/// Definite integral of `f` over `[a, b]` by globally adaptive
/// Gauss–Kronrod bisection. Returns `(value, estimated_abs_error)`.
pub fn integrate<T, F>(f: F, a: T, b: T, tol: T) -> Result<(T, T), EvalError>
where
    T: Real,
    F: Fn(T) -> Result<T, EvalError>,
{
    if a == b {
        return Ok((T::zero(), T::zero()));
    }
    if a > b {
        return integrate(f, b, a, tol).map(|(v, e)| (-v, e));
    }
    let cap = 2000;
    let (v, e) = gk21(&f, a, b)?;
    let mut parts = vec![(a, b, v, e)];
    loop {
        let total: T = parts.iter().fold(T::zero(), |s, p| s + p.2);
        let err: T = parts.iter().fold(T::zero(), |s, p| s + p.3);
        let target = tol * (T::one() + total.abs());
        if err <= target {
            return Ok((total, err));
        }
        if parts.len() >= cap {
            return Err(EvalError::Quadrature(QuadError::SubdivisionCap {
                lo: a.as_f64(),
                hi: b.as_f64(),
                tol: tol.as_f64(),
                cap,
            }));
        }
        let (idx, _) =
            parts.iter().enumerate().fold((0, -T::one()), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (lo, hi, _, _) = parts.swap_remove(idx);
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            // interval cannot be split further in this precision
            return Ok((total, err));
        }
        let (v1, e1) = gk21(&f, lo, mid)?;
        let (v2, e2) = gk21(&f, mid, hi)?;
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

// ---------------------------------------------------------------------------
// Chebyshev panels

#[derive(Debug, Clone)]
struct Piece<T> {
    a: T,
    b: T,
    /// Chebyshev coefficients of `∫_a^x g`, `c0/2` convention.
    coeffs: Vec<T>,
    total: T,
}

impl<T: Real> Piece<T> {
    fn eval(&self, x: T) -> T {
        if x == self.a {
            return T::zero();
        }
        if x == self.b {
            return self.total;
        }
        let half = (self.b - self.a) / T::lit(2.0);
        let t = (x - (self.a + half)) / half;
        clenshaw(&self.coeffs, t)
    }
}

#[derive(Debug, Clone)]
struct PanelFit<T> {
    pieces: Vec<Piece<T>>,
    /// `∫_{panel start}^{pieces[i].a} g`
    offsets: Vec<T>,
    total: T,
}

impl<T: Real> PanelFit<T> {
    fn eval(&self, x: T) -> T {
        let idx = match self.pieces.binary_search_by(|p| {
            if p.b < x {
                std::cmp::Ordering::Less
            } else if p.a > x {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        }) {
            Ok(i) => i,
            Err(i) => i.min(self.pieces.len() - 1),
        };
        self.offsets[idx] + self.pieces[idx].eval(x)
    }
}

fn clenshaw<T: Real>(c: &[T], t: T) -> T {
    let two_t = t + t;
    let (mut b1, mut b2) = (T::zero(), T::zero());
    for &ck in c.iter().skip(1).rev() {
        let b0 = two_t * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    t * b1 - b2 + c[0] / T::lit(2.0)
}

/// Samples `g` at `n` first-kind Chebyshev nodes of `[a, b]` and returns the
/// series coefficients (`c0/2` convention).
fn chebyshev_coefficients<T: Real>(g: &dyn Function<T>, a: T, b: T, n: usize) -> Result<Vec<T>, EvalError> {
    let pi = T::PI();
    let nt = T::from_usize_lossy(n);
    let half = (b - a) / T::lit(2.0);
    let mid = a + half;
    let mut values = Vec::with_capacity(n);
    for j in 0..n {
        let theta = pi * (T::from_usize_lossy(j) + T::lit(0.5)) / nt;
        values.push(g.eval(mid + half * theta.cos())?);
    }
    let scale = T::lit(2.0) / nt;
    let coeffs = (0..n)
        .map(|k| {
            let kt = T::from_usize_lossy(k);
            let s = values
                .iter()
                .enumerate()
                .fold(T::zero(), |s, (j, &v)| s + v * (pi * kt * (T::from_usize_lossy(j) + T::lit(0.5)) / nt).cos());
            s * scale
        })
        .collect();
    Ok(coeffs)
}

/// Coefficients of the antiderivative vanishing at `a`.
fn integrate_series<T: Real>(c: &[T], a: T, b: T) -> Vec<T> {
    let n = c.len();
    let con = (b - a) / T::lit(4.0);
    let mut out = vec![T::zero(); n + 1];
    let at = |k: usize| if k < n { c[k] } else { T::zero() };
    for (j, o) in out.iter_mut().enumerate().skip(1) {
        *o = con * (at(j - 1) - at(j + 1)) / T::from_usize_lossy(j);
    }
    let mut sum = T::zero();
    let mut fac = T::one();
    for v in out.iter().skip(1) {
        sum = sum + fac * *v;
        fac = -fac;
    }
    out[0] = sum + sum;
    out
}

fn fit_piece<T: Real>(g: &dyn Function<T>, a: T, b: T, tol: T, width: T) -> Result<Option<Piece<T>>, EvalError> {
    for n in [LOW_ORDER, HIGH_ORDER] {
        let c = chebyshev_coefficients(g, a, b, n)?;
        let tail = c[n - 3..].iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let cmax = c.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let coeffs = integrate_series(&c, a, b);
        let piece_total = clenshaw(&coeffs, T::one());
        let err = (b - a) * tail;
        let allowed = (tol * (b - a) / width).max(tol * piece_total.abs());
        let floor = T::lit(32.0) * T::epsilon() * (b - a) * cmax;
        if err <= allowed || err <= floor {
            return Ok(Some(Piece { a, b, coeffs, total: piece_total }));
        }
    }
    Ok(None)
}

fn fit_panel<T: Real>(g: &dyn Function<T>, a: T, b: T, tol: T, width: T) -> Result<PanelFit<T>, EvalError> {
    let mut done: Vec<Piece<T>> = Vec::new();
    let mut stack = vec![(a, b)];
    while let Some((lo, hi)) = stack.pop() {
        if done.len() + stack.len() >= MAX_PIECES_PER_PANEL {
            return Err(QuadError::SubdivisionCap {
                lo: a.as_f64(),
                hi: b.as_f64(),
                tol: tol.as_f64(),
                cap: MAX_PIECES_PER_PANEL,
            }
            .into());
        }
        match fit_piece(g, lo, hi, tol, width)? {
            Some(p) => done.push(p),
            None => {
                let mid = (lo + hi) / T::lit(2.0);
                if mid <= lo || mid >= hi {
                    return Err(QuadError::SubdivisionCap {
                        lo: a.as_f64(),
                        hi: b.as_f64(),
                        tol: tol.as_f64(),
                        cap: MAX_PIECES_PER_PANEL,
                    }
                    .into());
                }
                // right half first so the left half is processed next
                stack.push((mid, hi));
                stack.push((lo, mid));
            }
        }
    }
    let mut offsets = Vec::with_capacity(done.len());
    let mut acc = T::zero();
    for p in &done {
        offsets.push(acc);
        acc = acc + p.total;
    }
    Ok(PanelFit { pieces: done, offsets, total: acc })
}

/// `A(x) = ∫_{x0}^{x} g(t) dt` with memoized panel fits.
pub struct Antiderivative<T: Real> {
    integrand: Fun<T>,
    dom: Domain<T>,
    tol: T,
    breaks: Vec<T>,
    base_index: usize,
    fits: Vec<OnceLock<Result<PanelFit<T>, EvalError>>>,
    cumulative: Vec<OnceLock<Result<T, EvalError>>>,
}

impl<T: Real> std::fmt::Debug for Antiderivative<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Antiderivative")
            .field("dom", &self.dom)
            .field("tol", &self.tol)
            .field("panels", &(self.breaks.len() - 1))
            .finish()
    }
}

impl<T: Real> Antiderivative<T> {
    pub fn new(integrand: Fun<T>, dom: Domain<T>, tol: T) -> Self {
        let n = TOP_PANELS;
        let w = dom.width();
        let mut breaks: Vec<T> = (0..=n)
            .map(|i| if i == n { dom.hi() } else { dom.lo() + w * T::from_usize_lossy(i) / T::from_usize_lossy(n) })
            .collect();
        let x0 = dom.x0();
        let snap = w * T::lit(1e-6);
        match breaks.iter().position(|&b| (b - x0).abs() <= snap) {
            Some(i) => breaks[i] = x0,
            None => {
                let i = breaks.iter().position(|&b| b > x0).unwrap_or(breaks.len());
                breaks.insert(i, x0);
            }
        }
        let base_index = breaks.iter().position(|&b| b == x0).unwrap_or(0);
        let panels = breaks.len() - 1;
        Antiderivative {
            integrand,
            dom,
            tol,
            base_index,
            fits: (0..panels).map(|_| OnceLock::new()).collect(),
            cumulative: (0..breaks.len()).map(|_| OnceLock::new()).collect(),
            breaks,
        }
    }

    pub fn with_default_tolerance(integrand: Fun<T>, dom: Domain<T>) -> Self {
        Self::new(integrand, dom, T::lit(DEFAULT_TOLERANCE))
    }

    pub fn into_fun(self) -> Fun<T> {
        Arc::new(self)
    }

    pub fn integrand(&self) -> &Fun<T> {
        &self.integrand
    }

    pub fn domain(&self) -> &Domain<T> {
        &self.dom
    }

    pub fn tolerance(&self) -> T {
        self.tol
    }

    fn fit(&self, panel: usize) -> Result<&PanelFit<T>, EvalError> {
        self.fits[panel]
            .get_or_init(|| {
                fit_panel(
                    self.integrand.as_ref(),
                    self.breaks[panel],
                    self.breaks[panel + 1],
                    self.tol,
                    self.dom.width(),
                )
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn cumulative_at(&self, k: usize) -> Result<T, EvalError> {
        if let Some(v) = self.cumulative[k].get() {
            return v.clone();
        }
        // walk outward from the base point so every slot is filled in a
        // fixed order
        let base = self.base_index;
        let mut acc = T::zero();
        let _ = self.cumulative[base].set(Ok(T::zero()));
        if k > base {
            for j in base + 1..=k {
                acc = acc + self.fit(j - 1)?.total;
                let _ = self.cumulative[j].set(Ok(acc));
            }
        } else {
            for j in (k..base).rev() {
                acc = acc - self.fit(j)?.total;
                let _ = self.cumulative[j].set(Ok(acc));
            }
        }
        self.cumulative[k].get().cloned().unwrap_or(Ok(acc))
    }

    /// `A(x)`; exactly zero at the base point.
    pub fn value(&self, x: T) -> Result<T, EvalError> {
        let (lo, hi) = (self.dom.lo(), self.dom.hi());
        let slack = T::lit(4.0) * T::epsilon() * self.dom.width().max(hi.abs()).max(lo.abs());
        if x < lo - slack || x > hi + slack || !x.is_finite() {
            return Err(EvalError::OutsideInterval { x: x.as_f64(), lo: lo.as_f64(), hi: hi.as_f64() });
        }
        let x = x.max(lo).min(hi);
        if x == self.dom.x0() {
            return Ok(T::zero());
        }
        let panels = self.breaks.len() - 1;
        let panel = match self.breaks.iter().rposition(|&b| b <= x) {
            Some(i) => i.min(panels - 1),
            None => 0,
        };
        if x == self.breaks[panel] {
            return self.cumulative_at(panel);
        }
        let start = self.cumulative_at(panel)?;
        let fit = self.fit(panel)?;
        Ok(start + fit.eval(x))
    }
}

impl<T: Real> Function<T> for Antiderivative<T> {
    fn eval(&self, x: T) -> Result<T, EvalError> {
        self.value(x)
    }

    fn eval_d(&self, x: T) -> Result<(T, T), EvalError> {
        Ok((self.value(x)?, self.integrand.eval(x)?))
    }
}

/// Convenience constructor returning a shared handle.
pub fn antiderivative<T: Real>(g: Fun<T>, dom: Domain<T>, tol: T) -> Arc<Antiderivative<T>> {
    Arc::new(Antiderivative::new(g, dom, tol))
}

// ---------------------------------------------------------------------------
// Poles

/// A bracketed sign change of a scanned function.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Pole<T> {
    pub lo: T,
    pub hi: T,
    pub root: T,
}

/// Sorted, disjoint brackets of sign changes.
#[derive(Debug, Clone, PartialEq, Default, serde::Serialize)]
#[serde(transparent)]
pub struct PoleSet<T> {
    poles: Vec<Pole<T>>,
}

impl<T: Real> PoleSet<T> {
    pub fn empty() -> Self {
        PoleSet { poles: Vec::new() }
    }

    pub fn from_poles(mut poles: Vec<Pole<T>>) -> Self {
        poles.sort_by(|a, b| a.root.partial_cmp(&b.root).unwrap_or(std::cmp::Ordering::Equal));
        PoleSet { poles }
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Pole<T>> {
        self.poles.iter()
    }

    pub fn roots(&self) -> Vec<T> {
        self.poles.iter().map(|p| p.root).collect()
    }

    /// First pole whose bracket, widened by `guard`, contains `x`.
    pub fn near(&self, x: T, guard: T) -> Option<&Pole<T>> {
        self.poles.iter().find(|p| x >= p.lo - guard && x <= p.hi + guard)
    }

    /// Pole-free subintervals of `[lo + end_guard, hi - end_guard]` that stay
    /// `guard` away from every bracket and are at least `min_len` long.
    pub fn segments(&self, dom: &Domain<T>, guard: T, end_guard: T, min_len: T) -> Vec<(T, T)> {
        let mut out = Vec::new();
        let mut start = dom.lo() + end_guard;
        let end = dom.hi() - end_guard;
        for p in &self.poles {
            let stop = p.lo - guard;
            if stop - start >= min_len {
                out.push((start, stop.min(end)));
            }
            start = start.max(p.hi + guard);
        }
        if end - start >= min_len {
            out.push((start, end));
        }
        out
    }
}

fn refine<T: Real>(d: &dyn Function<T>, mut a: T, mut fa: T, mut b: T, width: T) -> Result<Pole<T>, EvalError> {
    while b - a > width {
        let m = (a + b) / T::lit(2.0);
        if m <= a || m >= b {
            break;
        }
        let fm = d.eval(m)?;
        if fm == T::zero() {
            return Ok(Pole { lo: m, hi: m, root: m });
        }
        if (fm > T::zero()) == (fa > T::zero()) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(Pole { lo: a, hi: b, root: (a + b) / T::lit(2.0) })
}

/// Brackets every sign change of `d` on a `grid_n`-point scan of the domain
/// and refines each by bisection to width `1e-10·(hi - lo)`.
pub fn find_poles<T: Real>(d: &dyn Function<T>, dom: &Domain<T>, grid_n: usize) -> Result<PoleSet<T>, EvalError> {
    let grid = dom.grid(grid_n.max(2), T::zero());
    let width = T::lit(1e-10) * dom.width();
    let mut poles = Vec::new();
    let mut last: Option<(T, T)> = None;
    for &x in &grid {
        let v = d.eval(x)?;
        if v == T::zero() {
            continue;
        }
        if let Some((xp, vp)) = last {
            if (vp > T::zero()) != (v > T::zero()) {
                poles.push(refine(d, xp, vp, x, width)?);
            }
        }
        last = Some((x, v));
    }
    Ok(PoleSet { poles })
}

//! Equations generated by `F` with reference general solutions.
//!
//! In each case the particular solution is `S = ∫F + F₀` with `F₀` taken
//! at `x = 0`; the solver's `S` is based at the domain's left end, so its
//! offset is `S(x0)`.

use super::*;
use crate::conditions::{theorem_coefficients, GeneratingIntegral};
use crate::oracle::verify;
use crate::solutions::solve_theorem_with;
use crate::specfun::hyp2f1;

/// Points of the reference `b` comparison and its tolerance.
const B_POINTS: usize = 50;
const B_TOL: f64 = 1e-10;

struct TheoremRun {
    sol: SolutionArtifact<f64>,
    b: Fun<f64>,
    branch: BranchRun,
}

fn theorem_run(
    p: &Params,
    dom: &Domain<f64>,
    opts: &CaseOptions,
    (a, c, gen): (&str, &str, &str),
    s_x0: f64,
    c0: f64,
) -> Result<TheoremRun> {
    let (a, c, gen) = (p.fun(a)?, p.fun(c)?, p.fun(gen)?);
    let gi = GeneratingIntegral::new(gen, s_x0, dom, opts.quad_tol / 100.0)?;
    let cs = theorem_coefficients(&a, &c, &gi, dom)?;
    let sol = solve_theorem_with(&gi, &a, &c, c0, dom, &opts.solve_options())?;
    let report = verify(&sol, &cs, opts.tol)?;
    let branch = BranchRun {
        branch: "theorem".to_string(),
        constant: c0,
        poles: report.poles.clone(),
        checks: vec![check("riccati", &report)],
    };
    Ok(TheoremRun { b: gi.b(&a, &c), sol, branch })
}

fn reference_b_check(run: &TheoremRun, dom: &Domain<f64>, reference: impl Fn(f64) -> f64) -> CrossCheck {
    compare_on_grid("reference-b", dom, B_POINTS, B_TOL, &|_| false, |x| Ok(run.b.eval(x)?), |x| Ok(reference(x)))
}

// x ≥ 0.1 keeps fractional powers real under overrides; C0 < 0 keeps the
// denominator negative, so the default solution has no poles.
pub(super) fn example1_info() -> CaseInfo {
    CaseInfo {
        id: "example1",
        description: "y' = k1 x^m - k2 x^n (F0 + k1 x^(m+1)/(m+1)) y + k2 x^n y^2",
        defaults: vec![("k1", 1.0), ("k2", 1.0), ("m", 2.0), ("n", 1.0), ("F0", 1.0), ("C0", -1.0)],
        domain: (0.1, 2.0),
    }
}

pub(super) fn run_example1(
    p: &Params,
    dom: &Domain<f64>,
    opts: &CaseOptions,
) -> Result<(Vec<BranchRun>, Vec<CrossCheck>)> {
    let (k1, k2, m, n, f0, c0) = (p.get("k1"), p.get("k2"), p.get("m"), p.get("n"), p.get("F0"), p.get("C0"));
    p.require(m != -1.0 && n != -1.0 && m + n + 2.0 != 0.0, "m, n must differ from -1 and m + n from -2")?;
    let x0 = dom.x0();
    let s = |x: f64| f0 + k1 * x.powf(m + 1.0) / (m + 1.0);
    let run = theorem_run(p, dom, opts, ("k1*x^m", "k2*x^n", "k1*x^m"), s(x0), c0)?;

    let b = reference_b_check(&run, dom, |x| -k2 * x.powf(n) * s(x));
    let num =
        |x: f64| (k2 * x.powf(n + 1.0) * (k1 * x.powf(m + 1.0) / ((m + 1.0) * (m + n + 2.0)) + f0 / (n + 1.0))).exp();
    let cp = c0 * num(x0);
    let y = compare_solution("reference-y", &run.sol, opts.tol, |x| {
        let integral = definite(|t| Ok(t.powf(n) * num(t)), x0, x)?;
        Ok(s(x) + num(x) / (cp - k2 * integral))
    });
    Ok((vec![run.branch], vec![b, y]))
}

// n x² + 2F0 > 0 keeps the reference power real.
pub(super) fn example2_info() -> CaseInfo {
    CaseInfo {
        id: "example2",
        description: "y' = k1 x + ((n - k1) x/(n x^2/2 + F0) - 1) y + y^2/(n x^2/2 + F0)",
        defaults: vec![("n", 2.0), ("k1", 1.0), ("F0", 1.0), ("C0", 5.0)],
        domain: (0.0, 1.0),
    }
}

pub(super) fn run_example2(
    p: &Params,
    dom: &Domain<f64>,
    opts: &CaseOptions,
) -> Result<(Vec<BranchRun>, Vec<CrossCheck>)> {
    let (n, k1, f0, c0) = (p.get("n"), p.get("k1"), p.get("F0"), p.get("C0"));
    p.require(n != 0.0, "n must be nonzero")?;
    let q = |x: f64| n * x * x + 2.0 * f0;
    require_positive(p, &|x| Ok(q(x)), dom, "n x^2 + 2 F0")?;
    let x0 = dom.x0();
    let run = theorem_run(p, dom, opts, ("k1*x", "1/(n*x^2/2 + F0)", "n*x"), q(x0) / 2.0, c0)?;

    let b = reference_b_check(&run, dom, |x| (n - k1) * x / (q(x) / 2.0) - 1.0);
    let num = |x: f64| x.exp() * q(x).powf(1.0 - k1 / n);
    let cp = c0 * num(x0);
    let y = compare_solution("reference-y", &run.sol, opts.tol, |x| {
        let integral = definite(|t| Ok(2.0 * t.exp() * q(t).powf(-k1 / n)), x0, x)?;
        Ok(num(x) / (cp - integral) + q(x) / 2.0)
    });
    Ok((vec![run.branch], vec![b, y]))
}

// m + n ≠ s keeps the 2F1 term of G active; on [0.1, 0.9] its argument
// −p x^{s+1}/((s+1)F0) stays in (−1, 0). C0 < 0 avoids poles.
pub(super) fn example3_info() -> CaseInfo {
    CaseInfo {
        id: "example3",
        description:
            "y' = k x^m + (2(p x^s - k x^m)/S - n/x) y + (n/x - (p x^s - k x^m)/S) y^2/S, S = p x^(s+1)/(s+1) + F0",
        defaults: vec![("k", 2.0), ("m", 1.0), ("n", 1.0), ("s", 1.0), ("p", 1.0), ("F0", 1.0), ("C0", -1.0)],
        domain: (0.1, 0.9),
    }
}

pub(super) fn run_example3(
    p: &Params,
    dom: &Domain<f64>,
    opts: &CaseOptions,
) -> Result<(Vec<BranchRun>, Vec<CrossCheck>)> {
    let (k, m, n, s, pp, f0, c0) =
        (p.get("k"), p.get("m"), p.get("n"), p.get("s"), p.get("p"), p.get("F0"), p.get("C0"));
    p.require(s != -1.0 && f0 != 0.0 && m + n + 1.0 != 0.0, "need s != -1, F0 != 0, m + n != -1")?;
    p.require(dom.lo() > 0.0, "the domain must exclude x <= 0")?;
    let x0 = dom.x0();
    let big_s = |x: f64| pp * x.powf(s + 1.0) / (s + 1.0) + f0;
    let coeffs = ("k*x^m", "(n/x - (p*x^s - k*x^m)/(p*x^(s+1)/(s+1) + F0))/(p*x^(s+1)/(s+1) + F0)", "p*x^s");
    let run = theorem_run(p, dom, opts, coeffs, big_s(x0), c0)?;

    let b = reference_b_check(&run, dom, |x| 2.0 * (pp * x.powf(s) - k * x.powf(m)) / big_s(x) - n / x);
    let g = |x: f64| -> Result<f64> {
        let z = -pp * x.powf(s + 1.0) / (s * f0 + f0);
        let h = hyp2f1(1.0, (m + n + 1.0) / (s + 1.0), (m + n + s + 2.0) / (s + 1.0), z)?.value;
        let first = f0 * (s + 1.0) * (k * x.powf(m + 1.0) + f0 + f0 * s) / (pp * x.powf(s + 1.0) + f0 + f0 * s);
        let second = k * (m + n - s) * x.powf(m + 1.0) * h / (m + n + 1.0);
        Ok(x.powf(n) / (f0 * f0 * (s + 1.0)) * (first - second))
    };
    let y = match g(x0) {
        Ok(g0) => {
            let cp = c0 * x0.powf(n) + g0;
            compare_solution("reference-y-hyp2f1", &run.sol, opts.tol, |x| Ok(big_s(x) + x.powf(n) / (cp - g(x)?)))
        }
        Err(e) => CrossCheck::skipped("reference-y-hyp2f1", opts.tol, &e.to_string()),
    };
    Ok((vec![run.branch], vec![b, y]))
}

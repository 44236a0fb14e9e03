//! Worked cases as named, parameterized fixtures.
//!
//! Every case assembles its equation through [`crate::conditions`] and
//! [`crate::solutions`], verifies each branch with [`crate::oracle`], and
//! compares against reference closed forms where those are available.
//!
//! Free integration constants (`C0`, `Cp`, `Cm`, ...) are the value of the
//! solver denominator at the base point, which is the left end of the
//! domain. Cross-checks translate them into the constant of each reference
//! formula.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::calc::integrate;
use crate::conditions::CoefficientSet;
use crate::error::{DomainKind, Error, EvalError, Result};
use crate::expr::{parse_with, Domain, Expr};
use crate::func::{self, Fun, Function};
use crate::oracle::{VerificationReport, POLE_GUARD};
use crate::real::Sign;
pub(crate) use crate::solutions::reduced_a;
use crate::solutions::{solve_reduced, SolutionArtifact, SolveOptions};

mod examples;
mod navier_stokes;
mod schrodinger;

pub const DEFAULT_CASE_TOL: f64 = 1e-6;
/// Points used by reference-form cross-checks.
pub const CROSS_CHECK_POINTS: usize = 100;

/// Registry entry.
#[derive(Debug, Clone, Serialize)]
pub struct CaseInfo {
    pub id: &'static str,
    pub description: &'static str,
    pub defaults: Vec<(&'static str, f64)>,
    pub domain: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseOptions {
    /// Verification and cross-check tolerance.
    pub tol: f64,
    /// Outer quadrature tolerance of the solver.
    pub quad_tol: f64,
    /// Domain override.
    pub dom: Option<(f64, f64)>,
    pub grid: usize,
}

impl CaseOptions {
    fn solve_options(&self) -> SolveOptions<f64> {
        SolveOptions { tol: self.quad_tol, grid: self.grid, ..SolveOptions::default() }
    }
}

impl Default for CaseOptions {
    fn default() -> Self {
        CaseOptions { tol: DEFAULT_CASE_TOL, quad_tol: 1e-10, dom: None, grid: crate::calc::DEFAULT_SCAN_POINTS }
    }
}

/// Summary of one verification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub equation: String,
    pub max_residual: f64,
    pub oracle_max_error: f64,
    pub segments: Vec<(f64, f64)>,
    pub pass: bool,
}

impl CheckSummary {
    fn new(equation: &str, r: &VerificationReport<f64>) -> Self {
        CheckSummary {
            equation: equation.to_string(),
            max_residual: r.max_residual,
            oracle_max_error: r.oracle_max_error,
            segments: r.segments.clone(),
            pass: r.pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchRun {
    pub branch: String,
    pub constant: f64,
    pub poles: Vec<f64>,
    pub checks: Vec<CheckSummary>,
}

impl BranchRun {
    fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Passed,
    Failed,
    Skipped,
}

/// Agreement between solver output and a reference closed form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossCheck {
    pub name: String,
    pub status: CheckStatus,
    pub max_error: Option<f64>,
    pub tol: f64,
    pub points: usize,
    pub skipped_points: usize,
    pub note: Option<String>,
}

impl CrossCheck {
    pub fn skipped(name: &str, tol: f64, note: &str) -> Self {
        CrossCheck {
            name: name.to_string(),
            status: CheckStatus::Skipped,
            max_error: None,
            tol,
            points: 0,
            skipped_points: 0,
            note: Some(note.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseRun {
    pub case: String,
    pub params: BTreeMap<String, f64>,
    pub tol: f64,
    pub domain: (f64, f64),
    pub max_residual: f64,
    pub oracle_max_error: f64,
    pub poles: Vec<f64>,
    pub pass: bool,
    pub branches: Vec<BranchRun>,
    pub cross_checks: Vec<CrossCheck>,
}

impl CaseRun {
    fn assemble(
        case: &str,
        params: &Params,
        opts: &CaseOptions,
        dom: &Domain<f64>,
        branches: Vec<BranchRun>,
        cross_checks: Vec<CrossCheck>,
    ) -> Self {
        let checks = branches.iter().flat_map(|b| b.checks.iter());
        let (max_residual, oracle_max_error) =
            checks.fold((0.0f64, 0.0f64), |(r, o), c| (r.max(c.max_residual), o.max(c.oracle_max_error)));
        let mut poles: Vec<f64> = branches.iter().flat_map(|b| b.poles.iter().copied()).collect();
        poles.sort_by(f64::total_cmp);
        let pass = branches.iter().all(BranchRun::pass) && cross_checks.iter().all(|c| c.status != CheckStatus::Failed);
        CaseRun {
            case: case.to_string(),
            params: params.values.clone(),
            tol: opts.tol,
            domain: (dom.lo(), dom.hi()),
            max_residual,
            oracle_max_error,
            poles,
            pass,
            branches,
            cross_checks,
        }
    }

    pub fn cross_check(&self, name: &str) -> Option<&CrossCheck> {
        self.cross_checks.iter().find(|c| c.name == name)
    }
}

/// Parameter table of one run: defaults overridden by user values.
#[derive(Debug, Clone)]
pub struct Params {
    case: &'static str,
    values: BTreeMap<String, f64>,
}

impl Params {
    fn new(info: &CaseInfo, overrides: &BTreeMap<String, f64>) -> Result<Self> {
        let mut values: BTreeMap<String, f64> = info.defaults.iter().map(|&(k, v)| (k.to_string(), v)).collect();
        for (k, &v) in overrides {
            if !values.contains_key(k) {
                return Err(Error::UnknownParameter { case: info.id.to_string(), name: k.clone() });
            }
            if !v.is_finite() {
                return Err(Error::ParameterRange(format!("{k} = {v} is not finite")));
            }
            values.insert(k.clone(), v);
        }
        Ok(Params { case: info.id, values })
    }

    pub fn get(&self, name: &str) -> f64 {
        self.values[name]
    }

    /// Expression in `x` with the parameters bound as constants.
    pub fn expr(&self, text: &str) -> Result<Expr<f64>> {
        Ok(parse_with(text, &self.values)?)
    }

    pub fn fun(&self, text: &str) -> Result<Fun<f64>> {
        Ok(func::symbolic(self.expr(text)?))
    }

    fn require(&self, ok: bool, what: &str) -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(Error::ParameterRange(format!("{}: {what}", self.case)))
        }
    }
}

type Runner = fn(&Params, &Domain<f64>, &CaseOptions) -> Result<(Vec<BranchRun>, Vec<CrossCheck>)>;

struct Case {
    info: fn() -> CaseInfo,
    run: Runner,
}

fn registry() -> [Case; 8] {
    [
        Case { info: examples::example1_info, run: examples::run_example1 },
        Case { info: examples::example2_info, run: examples::run_example2 },
        Case { info: examples::example3_info, run: examples::run_example3 },
        Case { info: schrodinger::powerlaw_info, run: schrodinger::run_powerlaw },
        Case { info: schrodinger::harmonic_info, run: schrodinger::run_harmonic },
        Case { info: schrodinger::shifted_info, run: schrodinger::run_shifted },
        Case { info: navier_stokes::strain_info, run: navier_stokes::run_strain },
        Case { info: navier_stokes::streamline_info, run: navier_stokes::run_streamline },
    ]
}

/// All cases in registry order.
pub fn list_cases() -> Vec<CaseInfo> {
    registry().iter().map(|c| (c.info)()).collect()
}

pub fn case_info(id: &str) -> Result<CaseInfo> {
    list_cases().into_iter().find(|c| c.id == id).ok_or_else(|| Error::UnknownCase(id.to_string()))
}

pub fn run_case(id: &str, overrides: &BTreeMap<String, f64>, opts: &CaseOptions) -> Result<CaseRun> {
    let reg = registry();
    let case = reg.iter().find(|c| (c.info)().id == id).ok_or_else(|| Error::UnknownCase(id.to_string()))?;
    let info = (case.info)();
    let params = Params::new(&info, overrides)?;
    let (lo, hi) = opts.dom.unwrap_or(info.domain);
    let dom = Domain::interval(lo, hi)?;
    let (branches, cross_checks) = (case.run)(&params, &dom, opts)?;
    Ok(CaseRun::assemble(info.id, &params, opts, &dom, branches, cross_checks))
}

/// Runs several cases concurrently; results keep the order of `ids`.
/// Each override applies only to the cases that declare the parameter.
pub fn run_cases(ids: &[String], overrides: &BTreeMap<String, f64>, opts: &CaseOptions) -> Vec<Result<CaseRun>> {
    ids.par_iter()
        .map(|id| {
            let info = case_info(id)?;
            let own: BTreeMap<String, f64> = overrides
                .iter()
                .filter(|(k, _)| info.defaults.iter().any(|(name, _)| name == k))
                .map(|(k, &v)| (k.clone(), v))
                .collect();
            run_case(id, &own, opts)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// shared helpers for the case files

/// Relative agreement `|s − p| / max(1, |p|)` on `n` interior grid points.
/// Points where `skip` holds are left out, as are points where either side
/// fails to evaluate (the first such failure is kept as the note).
fn compare_on_grid<S, P>(
    name: &str,
    dom: &Domain<f64>,
    n: usize,
    tol: f64,
    skip: &dyn Fn(f64) -> bool,
    solver: S,
    reference: P,
) -> CrossCheck
where
    S: Fn(f64) -> Result<f64>,
    P: Fn(f64) -> Result<f64>,
{
    let mut max_error = 0.0f64;
    let mut points = 0;
    let mut skipped = 0;
    let mut note: Option<String> = None;
    for x in dom.grid(n, 1e-6) {
        if skip(x) {
            skipped += 1;
            continue;
        }
        match reference(x).and_then(|p| Ok((solver(x)?, p))) {
            Ok((s, p)) => {
                max_error = max_error.max((s - p).abs() / 1f64.max(p.abs()));
                points += 1;
            }
            Err(e) => {
                skipped += 1;
                note.get_or_insert_with(|| format!("x = {x}: {e}"));
            }
        }
    }
    let status = if points == 0 {
        CheckStatus::Skipped
    } else if max_error <= tol {
        CheckStatus::Passed
    } else {
        CheckStatus::Failed
    };
    CrossCheck {
        name: name.to_string(),
        status,
        max_error: (points > 0).then_some(max_error),
        tol,
        points,
        skipped_points: skipped,
        note,
    }
}

/// [`compare_on_grid`] against the solution value, off-pole.
fn compare_solution<P>(name: &str, sol: &SolutionArtifact<f64>, tol: f64, reference: P) -> CrossCheck
where
    P: Fn(f64) -> Result<f64>,
{
    let guard = POLE_GUARD * sol.dom().width();
    compare_on_grid(
        name,
        sol.dom(),
        CROSS_CHECK_POINTS,
        tol,
        &|x| sol.in_pole(x, guard),
        |x| Ok(sol.eval(x)?),
        reference,
    )
}

/// Definite integral used by reference forms that leave an integral unevaluated.
fn definite(g: impl Fn(f64) -> Result<f64>, a: f64, b: f64) -> Result<f64> {
    let failure = std::cell::RefCell::new(None);
    let r = integrate(
        |t| {
            g(t).map_err(|e| {
                failure.borrow_mut().get_or_insert(e);
                EvalError::Domain { kind: DomainKind::NonFinite, x: t }
            })
        },
        a,
        b,
        1e-13,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(r?.0)
}

/// Reduced-equation branch `y' = a + c y²` with `a = ±(√(f/c))' − f`.
fn reduced_branch(
    f: &Expr<f64>,
    c: &Expr<f64>,
    sign: Sign,
    constant: f64,
    dom: &Domain<f64>,
    opts: &CaseOptions,
) -> Result<(SolutionArtifact<f64>, CoefficientSet<f64>)> {
    let a = reduced_a(f, c, sign);
    let cs = CoefficientSet::from_exprs(a.clone(), None, c.clone(), *dom)?;
    let sol = solve_reduced(
        &func::symbolic(a),
        &func::symbolic(c.clone()),
        &func::symbolic(f.clone()),
        sign,
        constant,
        dom,
        &opts.solve_options(),
    )?;
    Ok((sol, cs))
}

fn check(equation: &str, report: &VerificationReport<f64>) -> CheckSummary {
    CheckSummary::new(equation, report)
}

/// Fails unless `g > 0` on a fine grid of the domain.
fn require_positive(params: &Params, g: &dyn Fn(f64) -> Result<f64>, dom: &Domain<f64>, what: &str) -> Result<()> {
    for x in dom.grid(crate::conditions::RESIDUAL_GRID, 0.0) {
        let v = g(x)?;
        params.require(v > 0.0, &format!("{what} must be positive on the domain (x = {x}: {v})"))?;
    }
    Ok(())
}

use std::collections::BTreeMap;

use riccati_core::conditions::{
    check_condition_bbb, check_condition_full, check_condition_reduced, theorem_coefficients,
};
use riccati_core::corpus::{self, CaseOptions, CaseRun};
use riccati_core::expr::{parse_with, Constants};
use riccati_core::func::{self, Function};
use riccati_core::oracle::{verify, POLE_GUARD};
use riccati_core::solutions::{
    log_form_a, reduced_a, solve_amc, solve_reduced, solve_reduced_log_form, solve_theorem_with,
};
use riccati_core::{
    CoefficientSet, ConditionReport, Domain, Error, Expr, Fun, GeneratingIntegral, SolutionArtifact, SolveOptions,
};

use crate::args::*;
use crate::output::{self, Report, Sample, SolveDetails};

const CHECK_TOL: f64 = 1e-8;
const VERIFY_TOL: f64 = 1e-6;
/// Quadrature tolerance of `S = ∫F + F0` in `check bbb`.
const BBB_QUAD_TOL: f64 = 1e-12;

/// Error that maps to exit code 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl From<Error> for Usage {
    fn from(e: Error) -> Self {
        Usage(e.to_string())
    }
}

impl From<std::io::Error> for Usage {
    fn from(e: std::io::Error) -> Self {
        Usage(format!("cannot write output: {e}"))
    }
}

/// `Ok(pass)`.
pub type Outcome = Result<bool, Usage>;

pub fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Check { mode } => match mode {
            CheckMode::Full(a) => check_full(a),
            CheckMode::Bbb(a) => check_bbb(a),
            CheckMode::Reduced(a) => check_reduced(a),
        },
        Command::Solve { mode } => match mode {
            SolveMode::Amc(a) => solve_amc_cmd(a),
            SolveMode::Theorem(a) => solve_theorem_cmd(a),
            SolveMode::Reduced(a) => solve_reduced_cmd(a),
        },
        Command::Corpus { action } => match action {
            CorpusAction::List(a) => corpus_list(a),
            CorpusAction::Run(a) => corpus_run(a),
        },
        Command::Sample(a) => sample(a),
    }
}

// ---------------------------------------------------------------------------
// shared input handling

struct Setup {
    constants: Constants<f64>,
    dom: Domain,
}

impl Setup {
    fn new(common: &Common) -> Result<Self, Usage> {
        if common.grid < 2 {
            return Err(Usage(format!("--grid must be at least 2, got {}", common.grid)));
        }
        if let Some(tol) = common.tol {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(Usage(format!("--tol must be positive, got {tol}")));
            }
        }
        let (lo, hi) = (common.dom[0], common.dom[1]);
        let dom = Domain::new(lo, hi, common.x0.unwrap_or(lo))?;
        Ok(Setup { constants: common.set.iter().cloned().collect(), dom })
    }

    fn expr(&self, flag: &str, text: &str) -> Result<Expr, Usage> {
        parse_with(text, &self.constants).map_err(|e| Usage(format!("{flag}: {e}")))
    }

    fn fun(&self, flag: &str, text: &str) -> Result<Fun, Usage> {
        Ok(func::symbolic(self.expr(flag, text)?))
    }
}

fn reject_solve_flags(flags: &SolveFlags) -> Result<(), Usage> {
    if flags.constant != 0.0 || flags.force || flags.corrupt.is_some() {
        return Err(Usage("--C, --force and --corrupt apply to `solve` only".into()));
    }
    Ok(())
}

fn write_check(case: &str, setup: &Setup, common: &Common, report: ConditionReport) -> Outcome {
    let text = match common.format {
        Format::Json => output::json(&Report {
            case: case.to_string(),
            params: setup.constants.clone(),
            tol: report.tol,
            max_residual: report.max_residual,
            oracle_max_error: None,
            poles: Vec::new(),
            pass: report.holds,
            solve: None,
            error: None,
        }),
        Format::Csv => {
            let rows: Vec<_> = report.residual_grid.iter().map(|&(x, r)| (x, Some(r), None)).collect();
            output::expr_csv(&rows).replacen("x,y,dy", "x,residual,", 1)
        }
    };
    output::emit(&text, common.out.as_deref())?;
    Ok(report.holds)
}

// ---------------------------------------------------------------------------
// check

fn check_full(args: FullArgs) -> Outcome {
    reject_solve_flags(&args.solve)?;
    let setup = Setup::new(&args.common)?;
    let b = args.b.as_deref().map(|b| setup.expr("--b", b)).transpose()?;
    let cs = CoefficientSet::from_exprs(setup.expr("--a", &args.a)?, b, setup.expr("--c", &args.c)?, setup.dom)?;
    let f = setup.fun("--f", &args.f)?;
    let report = check_condition_full(&cs, &f, args.sign, args.common.tol.unwrap_or(CHECK_TOL))?;
    write_check("check-full", &setup, &args.common, report)
}

fn check_bbb(args: TheoremArgs) -> Outcome {
    reject_solve_flags(&args.solve)?;
    let setup = Setup::new(&args.common)?;
    let b = args.b.as_deref().ok_or_else(|| Usage("check bbb needs --b".into()))?;
    let cs = CoefficientSet::from_exprs(
        setup.expr("--a", &args.a)?,
        Some(setup.expr("--b", b)?),
        setup.expr("--c", &args.c)?,
        setup.dom,
    )?;
    let gen = setup.fun("--F", &args.gen)?;
    let tol = args.common.tol.unwrap_or(CHECK_TOL);
    let report = check_condition_bbb(&cs, &gen, args.f0, tol, BBB_QUAD_TOL)?;
    write_check("check-bbb", &setup, &args.common, report)
}

fn check_reduced(args: ReducedArgs) -> Outcome {
    reject_solve_flags(&args.solve)?;
    if args.log_form {
        return Err(Usage("--log-form applies to `solve reduced` only".into()));
    }
    let setup = Setup::new(&args.common)?;
    let a = args.a.as_deref().ok_or_else(|| Usage("check reduced needs --a".into()))?;
    let report = check_condition_reduced(
        &setup.fun("--a", a)?,
        &setup.fun("--c", &args.c)?,
        &setup.fun("--f", &args.f)?,
        args.sign,
        &setup.dom,
        args.common.tol.unwrap_or(CHECK_TOL),
    )?;
    write_check("check-reduced", &setup, &args.common, report)
}

// ---------------------------------------------------------------------------
// solve

struct SolveInput<'a> {
    case: &'static str,
    setup: &'a Setup,
    common: &'a Common,
    flags: &'a SolveFlags,
    cs: CoefficientSet,
    condition_holds: bool,
}

fn solve_options(force: bool) -> SolveOptions {
    SolveOptions { force, ..SolveOptions::default() }
}

/// Report for a solve that stopped before verification.
fn refused(input: &SolveInput, error: String) -> Outcome {
    let report = Report {
        case: input.case.to_string(),
        params: input.setup.constants.clone(),
        tol: input.common.tol.unwrap_or(VERIFY_TOL),
        max_residual: f64::NAN,
        oracle_max_error: None,
        poles: Vec::new(),
        pass: false,
        solve: None,
        error: Some(error),
    };
    if input.common.format == Format::Json {
        output::emit(&output::json(&report), input.common.out.as_deref())?;
    }
    eprintln!("{}: {}", input.case, report.error.as_deref().unwrap_or_default());
    Ok(false)
}

fn samples(sol: &SolutionArtifact, n: usize) -> Vec<Sample> {
    let dom = sol.dom();
    let guard = POLE_GUARD * dom.width();
    dom.grid(n, 0.0)
        .into_iter()
        .map(|x| {
            let in_pole = sol.in_pole(x, guard);
            let y = if in_pole { None } else { sol.eval(x).ok().filter(|v| v.is_finite()) };
            Sample { x, y, denominator: sol.denominator().eval(x).ok(), in_pole: in_pole || y.is_none() }
        })
        .collect()
}

fn finish_solve(input: SolveInput, assembled: riccati_core::Result<SolutionArtifact>) -> Outcome {
    let sol = match assembled {
        Ok(s) => s,
        Err(e @ Error::ConditionViolated { .. }) => return refused(&input, e.to_string()),
        Err(e) => return Err(e.into()),
    };
    let sol = match input.flags.corrupt {
        Some(k) => sol.with_scaled_integral(k, riccati_core::calc::DEFAULT_SCAN_POINTS)?,
        None => sol,
    };
    let tol = input.common.tol.unwrap_or(VERIFY_TOL);
    let (max_residual, oracle, segments, error, verified) = match verify(&sol, &input.cs, tol) {
        Ok(r) => (r.max_residual, Some(r.oracle_max_error), r.segments, None, r.pass),
        Err(e) => (f64::NAN, None, Vec::new(), Some(e.to_string()), false),
    };
    let pass = verified && input.condition_holds;
    let samples = samples(&sol, input.common.grid);
    let text = match input.common.format {
        Format::Json => output::json(&Report {
            case: input.case.to_string(),
            params: input.setup.constants.clone(),
            tol,
            max_residual,
            oracle_max_error: oracle,
            poles: sol.poles().roots(),
            pass,
            solve: Some(SolveDetails {
                kind: serde_json::to_value(sol.kind())
                    .ok()
                    .and_then(|v| v.as_str().map(String::from))
                    .unwrap_or_default(),
                sign: sol.sign().map(|s| s.to_string()),
                constant: sol.constant(),
                condition_holds: input.condition_holds,
                corrupt: input.flags.corrupt,
                segments,
                samples,
            }),
            error,
        }),
        Format::Csv => {
            eprintln!(
                "{}: pass={pass} max_residual={max_residual:e} oracle_max_error={}",
                input.case,
                oracle.map_or("n/a".to_string(), |o| format!("{o:e}"))
            );
            output::samples_csv(&samples)
        }
    };
    output::emit(&text, input.common.out.as_deref())?;
    Ok(pass)
}

fn solve_amc_cmd(args: FullArgs) -> Outcome {
    let setup = Setup::new(&args.common)?;
    let b = args.b.as_deref().map(|b| setup.expr("--b", b)).transpose()?;
    let cs = CoefficientSet::from_exprs(setup.expr("--a", &args.a)?, b, setup.expr("--c", &args.c)?, setup.dom)?;
    let f = setup.fun("--f", &args.f)?;
    let holds = check_condition_full(&cs, &f, args.sign, SolveOptions::default().condition_tol)?.holds;
    let opts = solve_options(args.solve.force);
    let sol = solve_amc(&cs, &f, args.sign, args.solve.constant, &opts);
    let input = SolveInput {
        case: "solve-amc",
        setup: &setup,
        common: &args.common,
        flags: &args.solve,
        cs,
        condition_holds: holds,
    };
    finish_solve(input, sol)
}

fn solve_theorem_cmd(args: TheoremArgs) -> Outcome {
    if args.b.is_some() {
        return Err(Usage("solve theorem derives b; drop --b".into()));
    }
    let setup = Setup::new(&args.common)?;
    let (a, c, gen) = (setup.fun("--a", &args.a)?, setup.fun("--c", &args.c)?, setup.fun("--F", &args.gen)?);
    let opts = solve_options(args.solve.force);
    let gi = GeneratingIntegral::new(gen, args.f0, &setup.dom, opts.tol / 100.0)?;
    let cs = theorem_coefficients(&a, &c, &gi, &setup.dom)?;
    let sol = solve_theorem_with(&gi, &a, &c, args.solve.constant, &setup.dom, &opts);
    let input = SolveInput {
        case: "solve-theorem",
        setup: &setup,
        common: &args.common,
        flags: &args.solve,
        cs,
        condition_holds: true,
    };
    finish_solve(input, sol)
}

fn solve_reduced_cmd(args: ReducedArgs) -> Outcome {
    let setup = Setup::new(&args.common)?;
    let f_expr = setup.expr("--f", &args.f)?;
    let c_expr = setup.expr("--c", &args.c)?;
    if args.log_form && c_expr.as_const() != Some(1.0) {
        return Err(Usage("--log-form requires c = 1".into()));
    }
    let a_expr = match args.a.as_deref() {
        Some(a) => setup.expr("--a", a)?,
        None if args.log_form => log_form_a(&f_expr, args.sign),
        None => reduced_a(&f_expr, &c_expr, args.sign),
    };
    let cs = CoefficientSet::from_exprs(a_expr.clone(), None, c_expr.clone(), setup.dom)?;
    let (a, c, f) = (func::symbolic(a_expr), func::symbolic(c_expr), func::symbolic(f_expr));
    let condition_tol = SolveOptions::default().condition_tol;
    let condition = check_condition_reduced(&a, &c, &f, args.sign, &setup.dom, condition_tol)?;
    let holds = condition.holds;
    let opts = solve_options(args.solve.force);
    let (case, sol) = if args.log_form {
        let sol = if holds || args.solve.force {
            solve_reduced_log_form(&f, args.sign, args.solve.constant, &setup.dom, &opts)
        } else {
            Err(Error::ConditionViolated { max_residual: condition.max_residual, tol: condition_tol })
        };
        ("solve-reduced-log-form", sol)
    } else {
        ("solve-reduced", solve_reduced(&a, &c, &f, args.sign, args.solve.constant, &setup.dom, &opts))
    };
    let input =
        SolveInput { case, setup: &setup, common: &args.common, flags: &args.solve, cs, condition_holds: holds };
    finish_solve(input, sol)
}

// ---------------------------------------------------------------------------
// corpus

fn corpus_list(args: ListArgs) -> Outcome {
    let cases = corpus::list_cases();
    let text = match args.format {
        Some(Format::Json) => output::json(&cases),
        Some(Format::Csv) => {
            let mut s = String::from("id,parameter,default\n");
            for c in &cases {
                for (k, v) in &c.defaults {
                    s.push_str(&format!("{},{k},{v}\n", c.id));
                }
            }
            s
        }
        None => {
            let mut s = String::new();
            for c in &cases {
                let params: Vec<String> = c.defaults.iter().map(|(k, v)| format!("{k}={v}")).collect();
                s.push_str(&format!(
                    "{:<30} [{}, {}]  {}\n    {}\n",
                    c.id,
                    c.domain.0,
                    c.domain.1,
                    params.join(" "),
                    c.description
                ));
            }
            s
        }
    };
    output::emit(&text, None)?;
    Ok(true)
}

fn corpus_run(args: CorpusRunArgs) -> Outcome {
    let ids: Vec<String> = if args.all {
        corpus::list_cases().iter().map(|c| c.id.to_string()).collect()
    } else if args.ids.is_empty() {
        return Err(Usage("name one or more cases or pass --all".into()));
    } else {
        args.ids.clone()
    };
    let infos = ids.iter().map(|id| corpus::case_info(id)).collect::<Result<Vec<_>, _>>()?;
    let overrides: BTreeMap<String, f64> = args.set.iter().cloned().collect();
    for name in overrides.keys() {
        if !infos.iter().any(|i| i.defaults.iter().any(|(k, _)| k == name)) {
            return Err(Usage(format!("no selected case has a parameter `{name}`")));
        }
    }
    if !(args.tol > 0.0 && args.tol.is_finite()) {
        return Err(Usage(format!("--tol must be positive, got {}", args.tol)));
    }
    let opts = CaseOptions { tol: args.tol, dom: args.dom.as_ref().map(|d| (d[0], d[1])), ..CaseOptions::default() };
    let runs = corpus::run_cases(&ids, &overrides, &opts).into_iter().collect::<Result<Vec<CaseRun>, _>>()?;
    let passed = runs.iter().filter(|r| r.pass).count();
    let pass = passed == runs.len();
    let text = match args.format {
        Format::Json => output::json(&output::CorpusReport { pass, passed, total: runs.len(), cases: &runs }),
        Format::Csv => output::corpus_csv(&runs),
    };
    output::emit(&text, args.out.as_deref())?;
    eprintln!("{passed}/{} cases pass", runs.len());
    Ok(pass)
}

// ---------------------------------------------------------------------------
// sample

fn sample(args: SampleArgs) -> Outcome {
    let setup = Setup::new(&args.common)?;
    let e = setup.expr("--expr", &args.expr)?;
    let d = e.differentiate();
    let rows: Vec<(f64, Option<f64>, Option<f64>)> =
        setup.dom.grid(args.common.grid, 0.0).into_iter().map(|x| (x, e.eval(x).ok(), d.eval(x).ok())).collect();
    let text = match args.common.format {
        Format::Csv => output::expr_csv(&rows),
        Format::Json => {
            #[derive(serde::Serialize)]
            struct Row {
                x: f64,
                y: Option<f64>,
                dy: Option<f64>,
            }
            let rows: Vec<Row> = rows.iter().map(|&(x, y, dy)| Row { x, y, dy }).collect();
            output::json(&rows)
        }
    };
    output::emit(&text, args.common.out.as_deref())?;
    Ok(rows.iter().all(|r| r.1.is_some()))
}

//! Riccati reductions of the Navier–Stokes equations.
//!
//! Strain rate: `γ' + γ² + p_zz = 0` with `p_zz = ∓(√f)' − f`. Writing
//! `y = −γ` gives `y' = p_zz + y²`, a reduced equation whose condition
//! holds with the opposite sign, so `γ± = −y∓` and `Γ± = −C`.
//!
//! Streamline: `u̇ − α u² + β = 0`, i.e. `a = −β`, `c = α = 1/(2ν)`, with
//! `β± = f ∓ (√(f/α))'` derived from the generating function.

use super::*;
use crate::oracle::{verify, verify_function};

fn quadratic(p: &Params) -> Result<Expr<f64>> {
    p.expr("f0 + f1*x + f2*x^2")
}

// f = 1 + t² by default. Γ > 0 makes the solver constant −Γ negative,
// which keeps both denominators away from zero.
pub(super) fn strain_info() -> CaseInfo {
    CaseInfo {
        id: "ns-strain",
        description: "gamma' + gamma^2 + p_zz = 0, p_zz = -+ (sqrt f)' - f, f = f0 + f1 t + f2 t^2",
        defaults: vec![("f0", 1.0), ("f1", 0.0), ("f2", 1.0), ("Gp", 1.0), ("Gm", 1.0)],
        domain: (0.0, 1.0),
    }
}

pub(super) fn run_strain(
    p: &Params,
    dom: &Domain<f64>,
    opts: &CaseOptions,
) -> Result<(Vec<BranchRun>, Vec<CrossCheck>)> {
    let f = quadratic(p)?;
    require_positive(p, &|x| Ok(f.eval(x)?), dom, "f")?;
    let one = Expr::lit(1.0);
    let mut runs = Vec::new();
    for (sign, gamma_constant) in [(Sign::Plus, p.get("Gp")), (Sign::Minus, p.get("Gm"))] {
        let (sol, cs) = reduced_branch(&f, &one, sign.flip(), -gamma_constant, dom, opts)?;
        let reduced = verify(&sol, &cs, opts.tol)?;
        // γ' = −p_zz − γ²
        let strain_cs = CoefficientSet::from_exprs(-reduced_a(&f, &one, sign.flip()), None, Expr::lit(-1.0), *dom)?;
        let gamma = func::neg(sol.clone().into_fun());
        let strain = verify_function(gamma.as_ref(), sol.poles(), &strain_cs, opts.tol)?;
        runs.push(BranchRun {
            branch: sign.to_string(),
            constant: gamma_constant,
            poles: sol.poles().roots(),
            checks: vec![check("reduced", &reduced), check("strain", &strain)],
        });
    }
    Ok((runs, Vec::new()))
}

// ν = 1/2 gives α = 1. Up < 0 and Um > α·width keep both denominators
// away from zero.
pub(super) fn streamline_info() -> CaseInfo {
    CaseInfo {
        id: "ns-streamline",
        description:
            "u' - alpha u^2 + beta = 0, alpha = 1/(2 nu), beta = f -+ (sqrt(f/alpha))', f = f0 + f1 s + f2 s^2",
        defaults: vec![("nu", 0.5), ("f0", 1.0), ("f1", 1.0), ("f2", 0.0), ("Up", -1.0), ("Um", 2.0)],
        domain: (0.0, 1.0),
    }
}

pub(super) fn run_streamline(
    p: &Params,
    dom: &Domain<f64>,
    opts: &CaseOptions,
) -> Result<(Vec<BranchRun>, Vec<CrossCheck>)> {
    let nu = p.get("nu");
    p.require(nu > 0.0, "need nu > 0")?;
    let f = quadratic(p)?;
    require_positive(p, &|x| Ok(f.eval(x)?), dom, "f")?;
    let alpha = Expr::constant(1.0 / (2.0 * nu));
    let mut runs = Vec::new();
    for (sign, constant) in [(Sign::Plus, p.get("Up")), (Sign::Minus, p.get("Um"))] {
        let (sol, cs) = reduced_branch(&f, &alpha, sign, constant, dom, opts)?;
        let report = verify(&sol, &cs, opts.tol)?;
        runs.push(BranchRun {
            branch: sign.to_string(),
            constant,
            poles: sol.poles().roots(),
            checks: vec![check("streamline", &report)],
        });
    }
    Ok((runs, Vec::new()))
}

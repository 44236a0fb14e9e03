//! Integrability conditions for Riccati equations `y' = a(x) + b(x) y + c(x) y²`,
//! closed-form-by-quadrature solution families, and numerical verification.
//!
//! The modules are generic over the scalar type ([`Real`], implemented for
//! `f32` and `f64`). The aliases at the crate root fix the scalar to `f64`.

pub mod calc;
pub mod conditions;
pub mod corpus;
pub mod error;
pub mod expr;
pub mod func;
pub mod oracle;
pub mod real;
pub mod solutions;
pub mod specfun;

pub use error::{Error, EvalError, ParseError, Result};
pub use real::{Real, Sign};

pub type Expr = expr::Expr<f64>;
pub type Domain = expr::Domain<f64>;
pub type Fun = func::Fun<f64>;
pub type Antiderivative = calc::Antiderivative<f64>;
pub type PoleSet = calc::PoleSet<f64>;
pub type CoefficientSet = conditions::CoefficientSet<f64>;
pub type GeneratingIntegral = conditions::GeneratingIntegral<f64>;
pub type ConditionReport = conditions::ConditionReport<f64>;
pub type SolutionArtifact = solutions::SolutionArtifact<f64>;
pub type SolveOptions = solutions::SolveOptions<f64>;
pub type VerificationReport = oracle::VerificationReport<f64>;
pub type Wavefunction = oracle::Wavefunction<f64>;

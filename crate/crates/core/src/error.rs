//! Error types.

use thiserror::Error;

/// Reason a pointwise evaluation has no finite real value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    LogOfNonPositive,
    SqrtOfNegative,
    DivisionByZero,
    ZeroToNegativePower,
    NegativeBaseFractionalPower,
    NonFinite,
}

impl std::fmt::Display for DomainKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DomainKind::LogOfNonPositive => "logarithm of a non-positive value",
            DomainKind::SqrtOfNegative => "square root of a negative value",
            DomainKind::DivisionByZero => "division by zero",
            DomainKind::ZeroToNegativePower => "zero raised to a negative power",
            DomainKind::NegativeBaseFractionalPower => "negative base raised to a fractional power",
            DomainKind::NonFinite => "non-finite result",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("tolerance {tol:e} unreachable on [{lo}, {hi}] within {cap} subdivisions")]
    SubdivisionCap { lo: f64, hi: f64, tol: f64, cap: usize },
}

/// Failure to evaluate a function at a point.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{kind} at x = {x}")]
    Domain { kind: DomainKind, x: f64 },
    #[error("x = {x} lies outside the working interval [{lo}, {hi}]")]
    OutsideInterval { x: f64, lo: f64, hi: f64 },
    #[error("x = {x} is at a movable singularity (pole near {pole})")]
    AtSingularity { x: f64, pole: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

impl EvalError {
    pub fn domain(kind: DomainKind, x: impl Into<f64>) -> Self {
        EvalError::Domain { kind, x: x.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedEnd,
    UnexpectedToken(String),
    UnknownIdentifier(String),
    Arity { name: String, expected: usize, found: usize },
    InvalidNumber(String),
    TrailingInput,
}

/// Syntax error with the byte offset at which it was detected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at offset {offset}: {kind}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

impl std::fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character `{c}`"),
            ParseErrorKind::UnexpectedEnd => write!(f, "unexpected end of input"),
            ParseErrorKind::UnexpectedToken(t) => write!(f, "unexpected token `{t}`"),
            ParseErrorKind::UnknownIdentifier(id) => write!(f, "unknown identifier `{id}`"),
            ParseErrorKind::Arity { name, expected, found } => {
                write!(f, "`{name}` takes {expected} argument(s), found {found}")
            }
            ParseErrorKind::InvalidNumber(s) => write!(f, "invalid number `{s}`"),
            ParseErrorKind::TrailingInput => write!(f, "unexpected trailing input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("solution blows up near x = {x} (|y'| = {slope:e} exceeds the cap)")]
    BlowUp { x: f64, slope: f64 },
    #[error("step size underflow at x = {x}")]
    StepUnderflow { x: f64 },
    #[error("step budget exhausted at x = {x}")]
    MaxSteps { x: f64 },
    #[error("right-hand side: {0}")]
    Rhs(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecialFunctionError {
    #[error("{function}: argument {arg} outside the supported region ({region})")]
    OutOfRange { function: &'static str, arg: f64, region: &'static str },
    #[error("hyp2f1: c = {c} is a non-positive integer")]
    NonPositiveIntegerC { c: f64 },
    #[error("{function}: no convergence after {iterations} iterations")]
    NoConvergence { function: &'static str, iterations: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    SpecialFunction(#[from] SpecialFunctionError),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("int F + F0 vanishes near x = {x}")]
    VanishingIntegral { x: f64 },
    #[error("integrability condition violated: max residual {max_residual:e} > tol {tol:e}")]
    ConditionViolated { max_residual: f64, tol: f64 },
    #[error("no pole-free segment of length >= {min_len} in the domain")]
    NoPoleFreeSegment { min_len: f64 },
    #[error("unknown corpus case `{0}`")]
    UnknownCase(String),
    #[error("case `{case}` has no parameter `{name}`")]
    UnknownParameter { case: String, name: String },
    #[error("parameter out of range: {0}")]
    ParameterRange(String),
}

impl From<QuadError> for Error {
    fn from(e: QuadError) -> Self {
        Error::Eval(EvalError::Quadrature(e))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

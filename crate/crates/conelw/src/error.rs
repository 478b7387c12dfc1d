//! Crate-wide error type.

use thiserror::Error;

/// What went wrong while evaluating a DSL expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainErrorKind {
    DivisionByZero,
    LogNonPositive,
    SqrtNegative,
    NonFinite,
}

impl core::fmt::Display for DomainErrorKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let s = match self {
            DomainErrorKind::DivisionByZero => "division by zero",
            DomainErrorKind::LogNonPositive => "log of a non-positive value",
            DomainErrorKind::SqrtNegative => "square root of a negative value",
            DomainErrorKind::NonFinite => "non-finite result",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: expected {expected}, found {found}")]
    Syntax {
        offset: usize,
        expected: String,
        found: String,
    },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("`{name}` takes {expected} argument(s), got {got} (at byte {offset})")]
    WrongArity {
        name: String,
        expected: usize,
        got: usize,
        offset: usize,
    },

    #[error("{kind} in `{subexpr}` at (t = {t}, y = {y})")]
    Domain {
        kind: DomainErrorKind,
        /// Pretty-printed offending subexpression.
        subexpr: String,
        t: f64,
        y: f64,
    },

    #[error("expression `{expr}` in field `{field}`: {source}")]
    InstanceExpr {
        field: String,
        expr: String,
        #[source]
        source: Box<Error>,
    },

    #[error("non-finite sample value at x = {point}")]
    NonFiniteSample { point: f64 },

    #[error("negative coefficient sample p({point}) = {value}; p must be nonnegative on [0,1]")]
    NegativeCoefficient { point: f64, value: f64 },

    #[error("inadmissible lambda = {lam}: must exceed exp of the integrated coefficient ({exp_p1})")]
    InadmissibleLambda { lam: f64, exp_p1: f64 },

    #[error(
        "inadmissible lambda: M = {m}, N = {n}, admissibility margin = {margin} (all must be positive)"
    )]
    InadmissibleLambdaMargin { m: f64, n: f64, margin: f64 },

    #[error("IVP blow-up at t = {t}: y = {value} left the safety box [0, {bound}]")]
    IvpBlowup { t: f64, value: f64, bound: f64 },

    #[error("invalid bracket [{lo}, {hi}]: residuals {r_lo} and {r_hi} do not have opposite signs")]
    InvalidBracket {
        lo: f64,
        hi: f64,
        r_lo: f64,
        r_hi: f64,
    },

    #[error("bracket [{lo}, {hi}] invalidated during refinement: {detail}")]
    BracketInvalidated { lo: f64, hi: f64, detail: String },

    #[error("iteration diverged at step {iteration}: sup-norm {norm} exceeded bound {bound}")]
    IterationDiverged {
        iteration: usize,
        norm: f64,
        bound: f64,
    },

    #[error("curve is not in the cone: {detail}")]
    NotInCone { detail: String },

    #[error("curves must share a grid: {left} vs {right} nodes")]
    GridMismatch { left: usize, right: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("schema error: {detail}")]
    Schema { detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

//! Numerical study of a first-order boundary value problem with a nonlinear,
//! nonlocal boundary condition. The library builds the problem's Green's
//! function, checks the growth hypotheses that guarantee at least three
//! positive solutions, locates solutions by shooting, and classifies them by
//! norm and by a concave functional on a cone of nonnegative functions.
//!
//! Everything numeric is generic over the scalar type through [`Real`]
//! (implemented for `f32` and `f64`); the `*64` aliases below fix the common
//! double-precision choice.

pub mod cone;
pub mod error;
pub mod exprs;
pub mod green;
pub mod hypotheses;
pub mod operator;
pub mod pool;
pub mod problem;
pub mod quadrature;
pub mod real;
pub mod report;
pub mod shooting;

pub use error::{DomainErrorKind, Error, Result};
pub use real::Real;

pub type CumulativeCoefficient64 = quadrature::CumulativeCoefficient<f64>;
pub type GreensKernel64 = green::GreensKernel<f64>;
pub type SolutionCurve64 = operator::SolutionCurve<f64>;
pub type MonotoneCubic64 = operator::MonotoneCubic<f64>;
pub type IntegralOperator64<'a> = operator::IntegralOperator<'a, f64>;
pub type ResidualProfile64 = shooting::ResidualProfile<f64>;
pub type LocatedSolution64 = shooting::LocatedSolution<f64>;
pub type SolveOutcome64 = shooting::SolveOutcome<f64>;

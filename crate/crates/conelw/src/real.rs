//! Scalar abstraction: every numeric routine in this crate is generic over a
//! floating-point type implementing [`Real`].

use core::fmt;
use core::iter::Sum;
use core::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by the solvers (`f32`, `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Widen to `f64` for diagnostics and reports.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + Sum
        + fmt::Debug
        + fmt::Display
        + fmt::LowerExp
        + Send
        + Sync
        + 'static
{
}

/// Shorthand for embedding an `f64` constant into the working scalar type.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 constant not representable in scalar type")
}

/// Embed a grid index or count.
#[inline]
pub fn real_of_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).unwrap_or_else(|| real(n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_embed_in_both_precisions() {
        let a: f64 = real(0.5);
        let b: f32 = real(0.5);
        assert_eq!(a, 0.5);
        assert_eq!(b, 0.5f32);
        assert_eq!(real_of_usize::<f64>(7), 7.0);
    }
}

//! Floating-point abstraction for the math core.

use num_traits::FromPrimitive;

/// Real scalar the element formulas are written against. Instantiated for
/// `f32` and `f64`; drivers use `f64` (see [`crate::Real`]).
///
/// `nalgebra::RealField` supplies field operations, comparisons, and the
/// transcendental functions; `FromPrimitive` supplies literal injection.
/// `num_traits::Float` is deliberately not a bound: its inherent methods
/// collide with `RealField`'s and force fully-qualified calls everywhere.
pub trait Scalar: nalgebra::RealField + FromPrimitive + Copy {
    /// Injects an `f64` literal. Panics on non-finite input, which in this
    /// crate can only be a programming error in a constant.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// Lossy view of the scalar as `f64`, used only for diagnostics.
    fn to_f64(self) -> f64;
}

impl Scalar for f32 {
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

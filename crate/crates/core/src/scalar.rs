//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point scalar the solvers are generic over.
///
/// Implemented for `f32` and `f64`. Tolerances inside the crate are expressed
/// through [`Real::tol`], which never drops below the type's own epsilon, so
/// thresholds written for double precision degrade gracefully in single
/// precision.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Converts a count or index.
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// A tolerance of `x`, floored at machine epsilon.
    fn tol(x: f64) -> Self {
        Self::lit(x).max(Self::epsilon())
    }

    fn two_pi() -> Self {
        Self::TAU()
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

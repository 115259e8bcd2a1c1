//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the physics and statistics are written against: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; constants in the crate are all representable.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    /// Tolerance used for physicality checks. Looser for `f32`.
    fn physical_tol() -> Self;
}

impl Scalar for f32 {
    fn physical_tol() -> Self {
        1e-6
    }
}

impl Scalar for f64 {
    fn physical_tol() -> Self {
        1e-12
    }
}

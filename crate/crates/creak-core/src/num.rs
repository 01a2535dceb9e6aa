//! Scalar abstraction for the numeric kernels.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::ScalarOperand;
use num_traits::{Float, FromPrimitive, NumAssign, Signed, ToPrimitive};

/// Floating-point scalar the DSP and ML code is generic over.
///
/// The bounds are the union of what `ndarray`, `rustfft` and the local
/// kernels need; `f32` and `f64` are the intended instantiations.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Signed
    + Sum
    + ScalarOperand
    + Send
    + Sync
    + Debug
    + Display
    + serde::Serialize
    + for<'de> serde::Deserialize<'de>
    + 'static
{
    fn from_f64_const(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to Real")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for `F::from_f64_const` at call sites full of literals.
pub fn real<F: Real>(v: f64) -> F {
    F::from_f64_const(v)
}

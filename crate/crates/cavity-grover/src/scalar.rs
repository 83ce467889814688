use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps, ToPrimitive};

/// Real scalar type underlying all amplitudes and physical rates.
///
/// Implemented for `f32` and `f64`. The crate-root aliases fix `f64`, which is
/// what the CLI and the acceptance tolerances assume; `f32` is available for
/// quick low-precision experiments.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal (tolerances, fixed reference constants) into `Self`.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("float literal converts into every Real type")
    }

    /// Converts a count (dimension, photon number) into `Self`.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count converts into every Real type")
    }

    /// Lossy view as `f64`, used only for error reporting.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

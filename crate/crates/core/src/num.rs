//! Scalar abstraction shared by the simulator, the learners and the oracle.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar the whole crate is generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` constant into this scalar.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant fits the scalar type")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits the scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Number of whole intervals in `seconds`, or `None` when `seconds` is not an
/// integer multiple of `interval_len`.
pub fn exact_intervals<T: Real>(seconds: T, interval_len: T) -> Option<usize> {
    let ratio = seconds / interval_len;
    let rounded = ratio.round();
    let tol = T::lit(1e-6) * T::one().max(ratio.abs());
    if (ratio - rounded).abs() <= tol && rounded >= T::zero() {
        rounded.to_usize()
    } else {
        None
    }
}

/// Smallest number of whole intervals covering `seconds`.
pub fn ceil_intervals<T: Real>(seconds: T, interval_len: T) -> usize {
    if seconds <= T::zero() {
        return 0;
    }
    let ratio = seconds / interval_len;
    // absorb representation error so that e.g. 0.1 / 0.05 stays 2
    (ratio - T::lit(1e-9) * T::one().max(ratio))
        .ceil()
        .to_usize()
        .unwrap_or(usize::MAX)
}

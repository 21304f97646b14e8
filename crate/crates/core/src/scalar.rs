//! Scalar abstraction shared by every numerical routine.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point type the toolkit is generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal. Infallible for the supported types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }

    /// Machine epsilon relative tolerance scaled for iterative solvers.
    fn solver_tol() -> Self;
}

impl Real for f32 {
    fn solver_tol() -> Self {
        1e-5
    }
}

impl Real for f64 {
    fn solver_tol() -> Self {
        1e-12
    }
}

/// `(1 - e^{-k t}) / k`, continuous through `k = 0` where it equals `t`.
pub fn one_minus_exp_over<T: Real>(k: T, t: T) -> T {
    let x = k * t;
    if x.abs() < T::lit(1e-8) {
        t * (T::one() - x / T::lit(2.0))
    } else {
        -(-x).exp_m1() / k
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn one_minus_exp_over_limit_and_bulk() {
        assert_relative_eq!(one_minus_exp_over(0.0_f64, 2.0), 2.0);
        assert_relative_eq!(one_minus_exp_over(1e-12_f64, 2.0), 2.0, max_relative = 1e-11);
        let direct = (1.0 - (-0.5_f64 * 3.0).exp()) / 0.5;
        assert_relative_eq!(one_minus_exp_over(0.5_f64, 3.0), direct, max_relative = 1e-14);
    }

    #[test]
    fn literals_round_trip() {
        assert_eq!(f32::lit(0.25), 0.25_f32);
        assert_eq!(f64::lit(0.1).as_f64(), 0.1);
    }
}

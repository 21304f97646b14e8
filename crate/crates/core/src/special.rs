//! Error functions.
//!
//! Evaluated in double precision through `libm` (a port of the FreeBSD msun
//! routines, accurate to a few ulp) and rounded to the working type.

use crate::scalar::Real;

pub fn erf<T: Real>(x: T) -> T {
    T::lit(libm::erf(x.as_f64()))
}

pub fn erfc<T: Real>(x: T) -> T {
    T::lit(libm::erfc(x.as_f64()))
}

/// Standard normal cumulative distribution.
pub fn normal_cdf<T: Real>(x: T) -> T {
    T::lit(0.5 * libm::erfc(-x.as_f64() / std::f64::consts::SQRT_2))
}

/// Standard normal density.
pub fn normal_pdf<T: Real>(x: T) -> T {
    let x = x.as_f64();
    T::lit((-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt())
}

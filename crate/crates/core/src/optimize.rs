//! Bounded scalar maximization.

use crate::scalar::Real;

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
///
/// Stops when the bracket is narrower than `tol`. Returns `(x, f(x))`.
pub fn golden_max<T: Real, F: Fn(T) -> T>(f: F, mut a: T, mut b: T, tol: T) -> (T, T) {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maximizes `f` over `(lo, hi]` on a logarithmic axis.
///
/// A log-spaced scan (plus an optional seed point) locates the best cell,
/// then golden-section search refines it until the bracket's relative width
/// drops below `rel_tol`.
pub fn maximize_log<T: Real, F: Fn(T) -> T>(f: F, lo: T, hi: T, seed: Option<T>, rel_tol: T) -> (T, T) {
    const SCAN: usize = 241;
    let (llo, lhi) = (lo.ln(), hi.ln());
    let step = (lhi - llo) / T::lit((SCAN - 1) as f64);
    let g = |u: T| {
        let v = f(u.exp());
        if v.is_nan() {
            T::neg_infinity()
        } else {
            v
        }
    };
    let mut best_u = llo;
    let mut best_v = T::neg_infinity();
    for i in 0..SCAN {
        let u = llo + step * T::lit(i as f64);
        let v = g(u);
        if v > best_v {
            best_v = v;
            best_u = u;
        }
    }
    if let Some(s) = seed {
        if s > lo && s < hi {
            let u = s.ln();
            let v = g(u);
            if v > best_v {
                best_v = v;
                best_u = u;
            }
        }
    }
    let a = (best_u - step).max(llo);
    let b = (best_u + step).min(lhi);
    let (u, v) = golden_max(g, a, b, (T::one() + rel_tol).ln());
    if v >= best_v {
        (u.exp(), v)
    } else {
        (best_u.exp(), best_v)
    }
}

//! Adaptive Gauss–Kronrod (7/15) quadrature.

use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = (b - a) / T::lit(2.0);
    let mid = (a + b) / T::lit(2.0);
    let fc = f(mid);
    let mut k = fc * T::lit(WGK[7]);
    let mut g = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let s = f(mid - dx) + f(mid + dx);
        k = k + s * T::lit(WGK[j]);
        if j % 2 == 1 {
            g = g + s * T::lit(WG[j / 2]);
        }
    }
    (k * half, ((k - g) * half).abs())
}

/// Integrates `f` over `[a, b]` to the requested relative tolerance.
///
/// Returns `(value, error_estimate)`.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, rel_tol: T) -> (T, T) {
    let (whole, err) = kronrod(&f, a, b);
    recurse(&f, a, b, whole, err, rel_tol, T::lit(1e-300).max(T::min_positive_value()), 0)
}

#[allow(clippy::too_many_arguments)]
fn recurse<T: Real, F: Fn(T) -> T>(
    f: &F,
    a: T,
    b: T,
    whole: T,
    err: T,
    rel_tol: T,
    abs_floor: T,
    depth: u32,
) -> (T, T) {
    if depth >= 50 || err <= (rel_tol * whole.abs()).max(abs_floor) {
        return (whole, err);
    }
    let m = (a + b) / T::lit(2.0);
    let (l, el) = kronrod(f, a, m);
    let (r, er) = kronrod(f, m, b);
    let (lv, le) = recurse(f, a, m, l, el, rel_tol, abs_floor, depth + 1);
    let (rv, re) = recurse(f, m, b, r, er, rel_tol, abs_floor, depth + 1);
    (lv + rv, le + re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_and_gaussian() {
        let (v, _) = integrate(|x: f64| x * x * x - x, 0.0, 2.0, 1e-12);
        assert_relative_eq!(v, 2.0, max_relative = 1e-13);
        let (v, _) = integrate(|x: f64| (-x * x).exp(), -8.0, 8.0, 1e-12);
        assert_relative_eq!(v, std::f64::consts::PI.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn gaussian_window_matches_erf() {
        let (v, _) = integrate(|x: f64| (-x * x).exp() * 2.0 / std::f64::consts::PI.sqrt(), 0.0, 0.83, 1e-13);
        assert_relative_eq!(v, libm::erf(0.83), max_relative = 1e-13);
    }
}

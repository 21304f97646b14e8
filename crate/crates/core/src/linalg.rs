//! Fixed-size 2×2 and 3×3 linear algebra for the resonator state.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2<T> {
    pub x: T,
    pub p: T,
}

impl<T: Real> Vec2<T> {
    pub fn new(x: T, p: T) -> Self {
        Vec2 { x, p }
    }

    pub fn zero() -> Self {
        Vec2::new(T::zero(), T::zero())
    }

    pub fn scale(self, s: T) -> Self {
        Vec2::new(self.x * s, self.p * s)
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.p * o.p
    }
}

impl<T: Real> Add for Vec2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Vec2::new(self.x + o.x, self.p + o.p)
    }
}

impl<T: Real> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Vec2::new(self.x - o.x, self.p - o.p)
    }
}

/// Row-major 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat2<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Real> Mat2<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn zero() -> Self {
        Self::diag(T::zero(), T::zero())
    }

    pub fn identity() -> Self {
        Self::diag(T::one(), T::one())
    }

    pub fn diag(a: T, d: T) -> Self {
        Mat2::new(a, T::zero(), T::zero(), d)
    }

    pub fn sym(p11: T, p12: T, p22: T) -> Self {
        Mat2::new(p11, p12, p12, p22)
    }

    pub fn transpose(self) -> Self {
        Mat2::new(self.a, self.c, self.b, self.d)
    }

    pub fn trace(self) -> T {
        self.a + self.d
    }

    pub fn det(self) -> T {
        self.a * self.d - self.b * self.c
    }

    pub fn scale(self, s: T) -> Self {
        Mat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn inverse(self) -> Option<Self> {
        let det = self.det();
        if det == T::zero() || !det.is_finite() {
            return None;
        }
        Some(Mat2::new(self.d, -self.b, -self.c, self.a).scale(det.recip()))
    }

    pub fn apply(self, v: Vec2<T>) -> Vec2<T> {
        Vec2::new(self.a * v.x + self.b * v.p, self.c * v.x + self.d * v.p)
    }

    /// Frobenius norm.
    pub fn norm(self) -> T {
        (self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d).sqrt()
    }

    /// Averages off-diagonals to remove rounding asymmetry.
    pub fn symmetrized(self) -> Self {
        let off = (self.b + self.c) / T::lit(2.0);
        Mat2::sym(self.a, off, self.d)
    }

    /// `self * m * selfᵀ`
    pub fn congruence(self, m: Self) -> Self {
        (self * m * self.transpose()).symmetrized()
    }

    pub fn is_finite(self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }

    /// Lower Cholesky factor of a symmetric PSD matrix (zero pivots allowed).
    pub fn cholesky(self) -> Self {
        let l11 = self.a.max(T::zero()).sqrt();
        let l21 = if l11 > T::zero() { self.c / l11 } else { T::zero() };
        let l22 = (self.d - l21 * l21).max(T::zero()).sqrt();
        Mat2::new(l11, T::zero(), l21, l22)
    }

    /// Eigenvalues of a matrix with real spectrum as `(re, im)` pairs.
    pub fn eigenvalues(self) -> [(T, T); 2] {
        let half_tr = self.trace() / T::lit(2.0);
        let disc = half_tr * half_tr - self.det();
        if disc >= T::zero() {
            let r = disc.sqrt();
            [(half_tr + r, T::zero()), (half_tr - r, T::zero())]
        } else {
            let r = (-disc).sqrt();
            [(half_tr, r), (half_tr, -r)]
        }
    }

    /// Matrix exponential by Cayley–Hamilton.
    ///
    /// Writing `A = s·I + B` with `B` traceless gives `B² = q·I`, `q = s² − det A`,
    /// so `e^A = e^s (f0(q) I + f1(q) B)` with hyperbolic or trigonometric
    /// `f0`, `f1` depending on the sign of `q`.
    pub fn expm(self) -> Self {
        let two = T::lit(2.0);
        let s = self.trace() / two;
        let bm = self - Mat2::identity().scale(s);
        let q = s * s - self.det();
        let (f0, f1) = if q.abs() < T::lit(1e-8) {
            // Series: cosh√q ≈ 1 + q/2 + q²/24, sinh√q/√q ≈ 1 + q/6 + q²/120.
            (
                T::one() + q / two + q * q / T::lit(24.0),
                T::one() + q / T::lit(6.0) + q * q / T::lit(120.0),
            )
        } else if q > T::zero() {
            let r = q.sqrt();
            (r.cosh(), r.sinh() / r)
        } else {
            let r = (-q).sqrt();
            (r.cos(), r.sin() / r)
        };
        (Mat2::identity().scale(f0) + bm.scale(f1)).scale(s.exp())
    }
}

impl<T: Real> Add for Mat2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Mat2::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }
}

impl<T: Real> Sub for Mat2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Mat2::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }
}

impl<T: Real> Neg for Mat2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

impl<T: Real> Mul for Mat2<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}

/// Solves `A x = b` for a 3×3 system by Gaussian elimination with partial pivoting.
pub fn solve3<T: Real>(mut a: [[T; 3]; 3], mut b: [T; 3]) -> Option<[T; 3]> {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col] == T::zero() || !a[pivot][col].is_finite() {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (dst, &src) in a[row].iter_mut().zip(pivot_row.iter()).skip(col) {
                *dst = *dst - f * src;
            }
            b[row] = b[row] - f * b[col];
        }
    }
    let mut x = [T::zero(); 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for k in row + 1..3 {
            acc = acc - a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Solves the continuous Lyapunov equation `A P + P Aᵀ + Q = 0` for symmetric `P`.
pub fn lyapunov<T: Real>(a: Mat2<T>, q: Mat2<T>) -> Option<Mat2<T>> {
    let two = T::lit(2.0);
    let m = [
        [two * a.a, two * a.b, T::zero()],
        [a.c, a.a + a.d, a.b],
        [T::zero(), two * a.c, two * a.d],
    ];
    let rhs = [-q.a, -(q.b + q.c) / two, -q.d];
    let [p11, p12, p22] = solve3(m, rhs)?;
    Some(Mat2::sym(p11, p12, p22))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn taylor_expm(m: Mat2<f64>) -> Mat2<f64> {
        let mut term = Mat2::identity();
        let mut acc = Mat2::identity();
        for k in 1..60 {
            term = (term * m).scale(1.0 / k as f64);
            acc = acc + term;
        }
        acc
    }

    #[test]
    fn expm_matches_taylor_in_all_branches() {
        for m in [
            Mat2::new(0.0, 1.3, -1.3, -0.1),  // oscillatory
            Mat2::new(0.2, 0.5, 0.7, -0.4),   // real spectrum
            Mat2::new(-0.3, 1.0, 0.0, -0.3),  // defective
            Mat2::new(0.0, 0.0, 0.0, 0.0),
        ] {
            let e = m.expm();
            let t = taylor_expm(m);
            assert!((e - t).norm() < 1e-13, "{m:?}");
        }
    }

    #[test]
    fn rotation_generator_gives_rotation() {
        let th = 0.7_f64;
        let r = Mat2::new(0.0, th, -th, 0.0).expm();
        assert_relative_eq!(r.a, th.cos(), epsilon = 1e-15);
        assert_relative_eq!(r.b, th.sin(), epsilon = 1e-15);
    }

    #[test]
    fn lyapunov_residual_vanishes() {
        let a = Mat2::new(-0.1, 2.0, -2.0, -0.5);
        let q = Mat2::sym(0.3, 0.1, 1.2);
        let p = lyapunov(a, q).unwrap();
        let res = a * p + p * a.transpose() + q;
        assert!(res.norm() < 1e-14);
    }

    #[test]
    fn solve3_handles_zero_leading_pivot() {
        let x = solve3([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 2.0]], [2.0, 3.0, 4.0]).unwrap();
        assert_eq!(x, [3.0, 2.0, 2.0]);
    }

    #[test]
    fn cholesky_reconstructs() {
        let m = Mat2::sym(4.0, 1.0, 3.0);
        let l = m.cholesky();
        assert!((l * l.transpose() - m).norm() < 1e-14);
    }
}

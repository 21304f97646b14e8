//! Proportion estimates with Wilson score intervals.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Two-sided normal quantile for 99% coverage.
pub const Z_99: f64 = 2.575_829_303_548_901;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion<T> {
    pub successes: u64,
    pub trials: u64,
    pub estimate: T,
    pub lower: T,
    pub upper: T,
}

impl<T: Real> Proportion<T> {
    /// Wilson score interval at normal quantile `z`.
    ///
    /// With fewer than two trials no spread can be estimated and the interval
    /// is the whole of [0, 1].
    pub fn wilson(successes: u64, trials: u64, z: f64) -> Self {
        if trials < 2 {
            let estimate = if trials == 0 { 0.5 } else { successes as f64 };
            return Proportion { successes, trials, estimate: T::lit(estimate), lower: T::zero(), upper: T::one() };
        }
        let n = trials as f64;
        let ph = successes as f64 / n;
        let z2 = z * z;
        let denom = 1.0 + z2 / n;
        let centre = (ph + z2 / (2.0 * n)) / denom;
        let half = z * (ph * (1.0 - ph) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        Proportion {
            successes,
            trials,
            estimate: T::lit(ph),
            lower: T::lit((centre - half).max(0.0)),
            upper: T::lit((centre + half).min(1.0)),
        }
    }

    pub fn contains(&self, v: T) -> bool {
        v >= self.lower && v <= self.upper
    }

    /// Binomial standard error of the point estimate.
    pub fn std_error(&self) -> T {
        if self.trials == 0 {
            return T::infinity();
        }
        let p = self.estimate;
        (p * (T::one() - p) / T::lit(self.trials as f64)).sqrt()
    }
}

/// Running mean and variance (Welford), mergeable across chunks.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(self, o: Moments) -> Moments {
        if self.n == 0 {
            return o;
        }
        if o.n == 0 {
            return self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * o.n as f64 / n as f64,
            m2: self.m2 + o.m2 + d * d * (self.n as f64) * (o.n as f64) / n as f64,
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            f64::NAN
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }

    /// Standard error of the sample variance for near-Gaussian data.
    pub fn variance_std_error(&self) -> f64 {
        self.variance() * (2.0 / (self.n as f64 - 1.0)).sqrt()
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        for x in iter {
            m.push(x);
        }
        m
    }
}

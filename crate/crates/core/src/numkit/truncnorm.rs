use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use super::special::{std_normal_cdf, std_normal_quantile, std_normal_sf};
use crate::error::{Error, Result};

/// Beyond this many standard deviations the inverse-CDF route loses
/// precision and the rejection samplers take over.
const TAIL_SWITCH: f64 = 6.0;

/// Open interval `(lower, upper)`; either side may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationInterval {
    pub lower: f64,
    pub upper: f64,
}

impl TruncationInterval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || !(lower < upper) {
            return Err(Error::EmptyInterval { lower, upper });
        }
        Ok(TruncationInterval { lower, upper })
    }

    pub fn unbounded() -> Self {
        TruncationInterval {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower < x && x < self.upper
    }
}

/// Exact draw from `N(mu, sd²)` restricted to the open interval.
pub fn sample_truncated_normal<R: Rng + ?Sized>(
    mu: f64,
    sd: f64,
    interval: TruncationInterval,
    rng: &mut R,
) -> Result<f64> {
    let TruncationInterval { lower, upper } = interval;
    if !(lower < upper) {
        return Err(Error::EmptyInterval { lower, upper });
    }
    if !(sd > 0.0) || !sd.is_finite() || !mu.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "truncated normal needs finite mu and sd > 0 (mu={mu}, sd={sd})"
        )));
    }
    let a = (lower - mu) / sd;
    let b = (upper - mu) / sd;
    for _ in 0..64 {
        let x = standard(a, b, rng);
        let v = mu + sd * x;
        if interval.contains(v) {
            return Ok(v);
        }
    }
    // Only reachable when the interval is a handful of ulps wide.
    let mid = lower + 0.5 * (upper - lower);
    if interval.contains(mid) {
        Ok(mid)
    } else {
        Err(Error::EmptyInterval { lower, upper })
    }
}

/// Standard normal truncated to `(a, b)`.
fn standard<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if a == f64::NEG_INFINITY && b == f64::INFINITY {
        return rng.sample(StandardNormal);
    }
    if a >= 0.0 {
        upper_side(a, b, rng)
    } else if b <= 0.0 {
        -upper_side(-b, -a, rng)
    } else {
        // straddles zero: both CDF values are well away from 0 and 1
        let fa = std_normal_cdf(a);
        let fb = std_normal_cdf(b);
        let u = fa + rng.random::<f64>() * (fb - fa);
        std_normal_quantile(u)
    }
}

/// Standard normal truncated to `(a, b)` with `0 <= a < b`.
fn upper_side<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if a < TAIL_SWITCH {
        // inverse CDF on survival probabilities keeps relative accuracy
        let sa = std_normal_sf(a);
        let sb = std_normal_sf(b);
        let u = sb + rng.random::<f64>() * (sa - sb);
        return -std_normal_quantile(u);
    }
    if b.is_finite() && 0.5 * (b * b - a * a) < 1.0 {
        // narrow far-tail window: uniform proposal, acceptance >= e^-1
        loop {
            let x = a + rng.random::<f64>() * (b - a);
            if rng.random::<f64>() < (-0.5 * (x * x - a * a)).exp() {
                return x;
            }
        }
    }
    // one-sided exponential proposal with the optimal rate
    let rate = 0.5 * (a + (a * a + 4.0).sqrt());
    let exp = Exp::new(rate).expect("positive rate");
    loop {
        let x = a + exp.sample(rng);
        if x >= b {
            continue;
        }
        let d = x - rate;
        if rng.random::<f64>() < (-0.5 * d * d).exp() {
            return x;
        }
    }
}

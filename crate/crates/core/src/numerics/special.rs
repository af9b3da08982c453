// Unused when std is linked (tests), where f64 has inherent methods.
use crate::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

/// Rising factorial `x (x+1) ... (x+l-1)`; the empty product is 1.
pub fn rising_factorial(x: f64, ell: u32) -> f64 {
    (0..ell).fold(1.0, |acc, k| acc * (x + k as f64))
}

/// `x^(rising l) / l!`, accumulated factor by factor so large `l` neither
/// overflows nor underflows the way the separate numerator and factorial do.
pub fn rising_factorial_over_factorial(x: f64, ell: u32) -> f64 {
    (0..ell).fold(1.0, |acc, k| acc * (x + k as f64) / (k as f64 + 1.0))
}

/// `2F1(mu, 1; 2; z)` through its elementary closed form
/// `(1 - (1 - z)^(1 - mu)) / ((1 - mu) z)`, valid for `z < 1`.
///
/// The numerator is evaluated as `-expm1((1 - mu) ln(1 - z))`, which keeps full
/// relative precision as `z -> 0`. Near `mu = 1` the limit `-ln(1 - z) / z` is
/// used, and for `|z| < 1e-8` the two-term series `1 + mu z / 2`.
pub fn hyp2f1_special(mu: f64, z: f64) -> Result<f64> {
    if !(z < 1.0) {
        return Err(Error::domain(
            "hyp2f1_special",
            alloc::format!("argument {z} must be below 1"),
        ));
    }
    if z.abs() < 1e-8 {
        return Ok(1.0 + 0.5 * mu * z);
    }
    let log1mz = (-z).ln_1p();
    if (mu - 1.0).abs() < 1e-8 {
        return Ok(-log1mz / z);
    }
    let a = 1.0 - mu;
    Ok(-(a * log1mz).exp_m1() / (a * z))
}

/// Upper tail `P(N(0,1) > x)` of the standard normal.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / core::f64::consts::SQRT_2)
}

/// Quantile `x` with `P(N(0,1) <= x) = p`, by bisection on [`normal_sf`].
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(
            "normal_quantile",
            alloc::format!("probability {p} must lie in (0, 1)"),
        ));
    }
    let target = 1.0 - p;
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_sf(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * mid.abs().max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

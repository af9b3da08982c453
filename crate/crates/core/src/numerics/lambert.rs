//! Principal branch of the Lambert W function and the tree function.

// Unused when std is linked (tests), where f64 has inherent methods.
use crate::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

/// `-1/e`, the branch point of `W`.
pub const NEG_INV_E: f64 = -0.367_879_441_171_442_33;

const MAX_ITER: usize = 64;

/// Principal real branch `W0(z)`: the solution `w >= -1` of `w e^w = z`.
///
/// The start value comes from the branch-point series for `z` close to `-1/e`
/// and from Winitzki's approximation elsewhere; Halley iteration then runs to
/// machine precision.
pub fn lambert_w0(z: f64) -> Result<f64> {
    if z.is_nan() {
        return Err(Error::domain("lambert_w0", "argument is NaN"));
    }
    if z < NEG_INV_E {
        return Err(Error::domain(
            "lambert_w0",
            alloc::format!("argument {z} is below -1/e"),
        ));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if z == NEG_INV_E {
        return Ok(-1.0);
    }
    if z.is_infinite() {
        return Ok(f64::INFINITY);
    }

    let mut w = initial_guess(z);
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - z;
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if denom == 0.0 || !denom.is_finite() {
            break;
        }
        let step = f / denom;
        let next = (w - step).max(-1.0);
        let done = (next - w).abs() <= 4.0 * f64::EPSILON * next.abs().max(1e-300);
        w = next;
        if done {
            break;
        }
    }
    Ok(w)
}

fn initial_guess(z: f64) -> f64 {
    if z < -0.32 {
        // Series in p = sqrt(2(ez + 1)) around the branch point.
        let p = (2.0 * (core::f64::consts::E * z + 1.0)).max(0.0).sqrt();
        -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0)))
    } else {
        let l = z.ln_1p();
        l * (1.0 - (l.ln_1p()) / (2.0 + l))
    }
}

/// Tree function `T(z) = -W0(-z)`, defined for `z <= 1/e`.
///
/// `T` is the exponential generating function of rooted labelled trees,
/// `T(z) = sum_{l >= 1} l^(l-1) z^l / l!`, and satisfies `T e^{-T} = z`.
pub fn tree_function(z: f64) -> Result<f64> {
    if z > -NEG_INV_E {
        return Err(Error::domain(
            "tree_function",
            alloc::format!("argument {z} is above 1/e"),
        ));
    }
    lambert_w0(-z).map(|w| -w)
}

//! Fixed-step classical RK4 integrators used as independent oracles.

// Unused when std is linked (tests), where f64 has inherent methods.
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::SquareMatrix;
use crate::{Error, Result};

/// Trajectory of an ODE integration on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution {
    pub grid: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub step_size_used: f64,
}

impl OdeSolution {
    pub fn final_value(&self) -> &[f64] {
        self.values
            .last()
            .expect("solution always holds the initial value")
    }
}

/// Integrates `y' = f(t, y)` from `t = 0` to `t_end` with classical RK4.
///
/// The step is the largest `t_end / n` not exceeding `max_step`, so the grid
/// ends exactly at `t_end`.
pub fn rk4<F>(mut f: F, y0: &[f64], t_end: f64, max_step: f64) -> OdeSolution
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    assert!(t_end >= 0.0 && max_step > 0.0);
    let n = y0.len();
    let steps = (t_end / max_step).ceil() as usize;
    if steps == 0 {
        return OdeSolution {
            grid: vec![0.0],
            values: vec![y0.to_vec()],
            step_size_used: 0.0,
        };
    }
    let h = t_end / steps as f64;
    let mut grid = Vec::with_capacity(steps + 1);
    let mut values = Vec::with_capacity(steps + 1);
    grid.push(0.0);
    values.push(y0.to_vec());

    let mut y = y0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    for s in 0..steps {
        let t = s as f64 * h;
        f(t, &y, &mut k1);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        f(t + 0.5 * h, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        f(t + 0.5 * h, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + h * k3[i];
        }
        f(t + h, &tmp, &mut k4);
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        grid.push(if s + 1 == steps {
            t_end
        } else {
            (s + 1) as f64 * h
        });
        values.push(y.clone());
    }
    OdeSolution {
        grid,
        values,
        step_size_used: h,
    }
}

/// Mass deficit above which [`ode_solve_kolmogorov`] attaches a warning.
pub const KOLMOGOROV_MASS_TOLERANCE: f64 = 1e-8;

/// The truncated probabilities carry less than `1 - KOLMOGOROV_MASS_TOLERANCE`
/// of the mass at the final time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationWarning {
    pub mass_deficit: f64,
}

/// Solution of the pure-birth forward equations truncated at `ell_max` events.
#[derive(Debug, Clone, PartialEq)]
pub struct KolmogorovSolution {
    /// Component `l` of each value is `P_{i, i + l delta}`, for `l <= ell_max`.
    pub solution: OdeSolution,
    /// Probability of more than `ell_max` events, per grid time. The absorbing
    /// overflow state keeps the truncated system a proper Markov chain, so
    /// `sum(values) + overflow` stays 1 up to rounding.
    pub overflow: Vec<f64>,
    pub warning: Option<TruncationWarning>,
}

impl KolmogorovSolution {
    pub fn final_probabilities(&self) -> &[f64] {
        self.solution.final_value()
    }

    /// `1 - sum_l P_{i, i + l delta}(t_end)` over the retained components.
    pub fn mass_deficit(&self) -> f64 {
        1.0 - self.final_probabilities().iter().sum::<f64>()
    }

    /// Retained mass plus the overflow state at `t_end`.
    pub fn total_mass(&self) -> f64 {
        self.final_probabilities().iter().sum::<f64>()
            + self.overflow.last().copied().unwrap_or(0.0)
    }
}

/// Integrates the forward equations of the total-size chain of a balanced
/// scheme: `P'_0 = -i P_0` and
/// `P'_l = (i + (l-1) delta) P_{l-1} - (i + l delta) P_l`, started from
/// `P_0(0) = 1`.
///
/// The step is bounded by `min(1e-3, 0.025 / (i + ell_max delta))`.
pub fn ode_solve_kolmogorov(
    i: f64,
    delta: f64,
    ell_max: usize,
    t_end: f64,
) -> Result<KolmogorovSolution> {
    if !(i > 0.0 && delta > 0.0 && t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!(
            "kolmogorov system needs i > 0, delta > 0, t_end >= 0 (got {i}, {delta}, {t_end})"
        )));
    }
    let n = ell_max + 1;
    let rate = |l: usize| i + l as f64 * delta;
    let max_rate = rate(ell_max);
    let max_step = 1e-3f64.min(0.025 / max_rate);

    let mut y0 = vec![0.0; n + 1];
    y0[0] = 1.0;
    let full = rk4(
        |_, p, dp| {
            dp[0] = -rate(0) * p[0];
            for l in 1..n {
                dp[l] = rate(l - 1) * p[l - 1] - rate(l) * p[l];
            }
            dp[n] = rate(ell_max) * p[ell_max];
        },
        &y0,
        t_end,
        max_step,
    );

    let mut overflow = Vec::with_capacity(full.values.len());
    let values = full
        .values
        .into_iter()
        .map(|mut v| {
            overflow.push(v.pop().expect("overflow component"));
            v
        })
        .collect();
    let mut out = KolmogorovSolution {
        solution: OdeSolution {
            grid: full.grid,
            values,
            step_size_used: full.step_size_used,
        },
        overflow,
        warning: None,
    };
    let deficit = out.mass_deficit();
    if deficit > KOLMOGOROV_MASS_TOLERANCE {
        out.warning = Some(TruncationWarning {
            mass_deficit: deficit,
        });
    }
    Ok(out)
}

/// Integrates the mean equations `d/dt m = E[A]^T m` from `init`.
pub fn ode_solve_mean(mean_matrix: &SquareMatrix, init: &[f64], t_end: f64) -> OdeSolution {
    let generator = mean_matrix.transpose();
    let norm = generator.norm_one();
    let max_step = if norm > 0.0 {
        1e-3f64.min(0.05 / norm)
    } else {
        1e-3
    };
    rk4(
        |_, m, dm| {
            for (j, out) in dm.iter_mut().enumerate() {
                *out = generator.row(j).iter().zip(m).map(|(a, b)| a * b).sum();
            }
        },
        init,
        t_end,
        max_step,
    )
}

/// Integrates the second-moment cascade of the balanced triangular scheme
/// for `(E[X^2], E[XY], E[Y^2])`, with `beta = delta - alpha`:
///
/// ```text
/// E[X^2]' = 2 alpha E[X^2] + alpha^2 E[X]
/// E[XY]'  = (alpha + delta) E[XY] + beta E[X^2] + alpha beta E[X]
/// E[Y^2]' = 2 delta E[Y^2] + 2 beta E[XY] + beta^2 E[X] + delta^2 E[Y]
/// ```
///
/// The first moments enter as the known forcing
/// `E[X] = x0 e^{alpha t}` and `E[Y] = (x0 + y0) e^{delta t} - x0 e^{alpha t}`.
pub fn ode_second_moments_triangular(
    alpha: f64,
    delta: f64,
    x0: f64,
    y0: f64,
    t_end: f64,
) -> Result<OdeSolution> {
    if !(alpha > 0.0 && alpha < delta) {
        return Err(Error::InvalidParameter(alloc::format!(
            "balanced triangular scheme needs 0 < alpha < delta (got {alpha}, {delta})"
        )));
    }
    let beta = delta - alpha;
    let max_step = 1e-3f64.min(0.05 / (2.0 * delta));
    Ok(rk4(
        |t, m, dm| {
            let ex = x0 * (alpha * t).exp();
            let ey = (x0 + y0) * (delta * t).exp() - ex;
            dm[0] = 2.0 * alpha * m[0] + alpha * alpha * ex;
            dm[1] = (alpha + delta) * m[1] + beta * m[0] + alpha * beta * ex;
            dm[2] = 2.0 * delta * m[2] + 2.0 * beta * m[1] + beta * beta * ex + delta * delta * ey;
        },
        &[x0 * x0, x0 * y0, y0 * y0],
        t_end,
        max_step,
    ))
}

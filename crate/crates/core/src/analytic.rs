//! Closed-form MGFs, moments, transition probabilities and limit laws.
//!
//! Every MGF refuses to evaluate where one of its power bases is not
//! positive instead of returning NaN. Differences of exponentials that
//! vanish at the origin are formed with `exp_m1` so small arguments keep
//! full relative precision.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

// Unused when std is linked (tests), where f64 has inherent methods.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::Error;
use crate::model::{InitialState, Scheme};
use crate::numerics::{matrix_exp, rising_factorial_over_factorial, tree_function, SquareMatrix};
use crate::Result;

/// First and second moments of the walk at one time.
///
/// `second_moments[i][j] = E[X_i X_j]` and `covariances[i][j] = Cov(X_i, X_j)`;
/// both are symmetric and the diagonal of `covariances` holds the variances.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    pub means: Vec<f64>,
    pub second_moments: Vec<Vec<f64>>,
    pub covariances: Vec<Vec<f64>>,
}

impl MomentSet {
    /// Builds the set from means and a covariance matrix.
    pub fn from_covariances(means: Vec<f64>, covariances: Vec<Vec<f64>>) -> Self {
        let second_moments = covariances
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, c)| c + means[i] * means[j])
                    .collect()
            })
            .collect();
        MomentSet {
            means,
            second_moments,
            covariances,
        }
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn variance(&self, i: usize) -> f64 {
        self.covariances[i][i]
    }

    pub fn variances(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.variance(i)).collect()
    }

    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        self.covariances[i][j]
    }

    pub fn second_moment(&self, i: usize, j: usize) -> f64 {
        self.second_moments[i][j]
    }
}

fn positive_power(function: &'static str, base: f64, exponent: f64) -> Result<f64> {
    if base > 0.0 && base.is_finite() {
        Ok(base.powf(exponent))
    } else {
        Err(Error::domain(
            function,
            format!("power base {base} is not positive"),
        ))
    }
}

fn require(cond: bool, what: impl FnOnce() -> alloc::string::String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(what()))
    }
}

/// `E[X(t)] = exp(M^T t) X(0)` where `M` is the row-mean matrix.
pub fn mean_vector(mean_matrix: &SquareMatrix, init: &[f64], t: f64) -> Vec<f64> {
    matrix_exp(&mean_matrix.transpose(), t).mul_vec(init)
}

/// MGF of one coordinate with constant self-increment `alpha`:
/// `(1 - e^{alpha t}(1 - e^{-alpha u}))^{-x0/alpha}`.
pub fn mgf_diag_constant(alpha: f64, x0: f64, t: f64, u: f64) -> Result<f64> {
    require(alpha > 0.0, || {
        format!("alpha must be positive, got {alpha}")
    })?;
    let base = 1.0 + (alpha * t).exp() * (-alpha * u).exp_m1();
    positive_power("mgf_diag_constant", base, -x0 / alpha)
}

pub fn moments_diag_constant(alpha: f64, x0: f64, t: f64) -> MomentSet {
    let g = (alpha * t).exp();
    MomentSet::from_covariances(vec![x0 * g], vec![vec![alpha * x0 * g * (g - 1.0)]])
}

/// MGF of one coordinate whose self-increment is exponential with rate 1:
/// `exp(x0 T(u e^{t-u}))` with `T` the tree function.
///
/// Defined for `u < 1` with `u e^{t-u} <= 1/e`; beyond that the MGF is
/// infinite at time `t`.
pub fn mgf_diag_exponential(x0: f64, t: f64, u: f64) -> Result<f64> {
    if !(u < 1.0) {
        return Err(Error::domain(
            "mgf_diag_exponential",
            format!("u = {u} must be below 1"),
        ));
    }
    let z = u * (t - u).exp();
    let tz = tree_function(z).map_err(|_| {
        Error::domain(
            "mgf_diag_exponential",
            format!("u e^(t-u) = {z} exceeds 1/e"),
        )
    })?;
    Ok((x0 * tz).exp())
}

pub fn moments_diag_exponential(x0: f64, t: f64) -> MomentSet {
    let g = t.exp();
    MomentSet::from_covariances(vec![x0 * g], vec![vec![2.0 * x0 * g * (g - 1.0)]])
}

/// MGF `E[e^{u X(t)}]` of the first Ehrenfest coordinate.
pub fn mgf_ehrenfest(gamma: f64, x0: f64, y0: f64, t: f64, u: f64) -> Result<f64> {
    require(gamma > 0.0, || {
        format!("gamma must be positive, got {gamma}")
    })?;
    let lambda = x0 + y0;
    let a = (gamma * u).exp();
    let am1 = (gamma * u).exp_m1();
    let b = (-2.0 * gamma * t).exp();
    let num = (1.0 + a) + b * am1;
    let den = (1.0 + a) - b * am1;
    if !(num > 0.0 && den > 0.0) {
        return Err(Error::domain(
            "mgf_ehrenfest",
            format!("nonpositive base at u = {u}"),
        ));
    }
    Ok(positive_power("mgf_ehrenfest", num / den, x0 / gamma)?
        * positive_power("mgf_ehrenfest", den / 2.0, lambda / gamma)?)
}

/// Joint MGF `E[e^{u X + v Y}]`; the conserved total makes it
/// `e^{v lambda}` times the marginal at `u - v`.
pub fn mgf_ehrenfest_joint(gamma: f64, x0: f64, y0: f64, t: f64, u: f64, v: f64) -> Result<f64> {
    Ok((v * (x0 + y0)).exp() * mgf_ehrenfest(gamma, x0, y0, t, u - v)?)
}

pub fn moments_ehrenfest(gamma: f64, x0: f64, y0: f64, t: f64) -> MomentSet {
    let lambda = x0 + y0;
    let mx = 0.5 * lambda + (x0 - 0.5 * lambda) * (-2.0 * gamma * t).exp();
    let var = -0.25 * gamma * lambda * (-4.0 * gamma * t).exp_m1();
    MomentSet::from_covariances(
        vec![mx, lambda - mx],
        vec![vec![var, -var], vec![-var, var]],
    )
}

/// MGF `E[e^{u X(t)}]` of the lower coordinate of the hill walk.
pub fn mgf_hill(gamma: f64, x0: f64, y0: f64, t: f64, u: f64) -> Result<f64> {
    require(gamma > 0.0, || {
        format!("gamma must be positive, got {gamma}")
    })?;
    require(y0 > x0, || {
        format!("hill walk needs y0 > x0, got ({x0}, {y0})")
    })?;
    let c = gamma * t * (gamma * u).exp_m1();
    let outer = 1.0 - c;
    if !(outer > 0.0) {
        return Err(Error::domain(
            "mgf_hill",
            format!("u = {u} at or beyond the singularity gamma t (e^(gamma u) - 1) = 1"),
        ));
    }
    let inner = (gamma * u).exp() - c;
    Ok(positive_power("mgf_hill", inner, x0 / gamma)?
        / positive_power("mgf_hill", outer, y0 / gamma)?)
}

/// Joint MGF; `Y = X + (y0 - x0)` on every path.
pub fn mgf_hill_joint(gamma: f64, x0: f64, y0: f64, t: f64, u: f64, v: f64) -> Result<f64> {
    Ok((v * (y0 - x0)).exp() * mgf_hill(gamma, x0, y0, t, u + v)?)
}

pub fn moments_hill(gamma: f64, x0: f64, y0: f64, t: f64) -> MomentSet {
    let lambda = y0 - x0;
    let drift = lambda * gamma * t;
    let var = lambda * gamma.powi(3) * t * t + (2.0 * x0 + lambda) * gamma * gamma * t;
    MomentSet::from_covariances(
        vec![x0 + drift, y0 + drift],
        vec![vec![var, var], vec![var, var]],
    )
}

fn check_triangular(alpha: f64, delta: f64) -> Result<()> {
    require(alpha > 0.0 && alpha < delta, || {
        format!("balanced triangular scheme needs 0 < alpha < delta, got ({alpha}, {delta})")
    })
}

/// The two invariants of the characteristic flow,
/// `x_c = e^{alpha t}(e^{-alpha u} - e^{-alpha v})` and
/// `y_c = e^{delta t}(e^{-delta v} - 1)`.
pub fn characteristic_curves(alpha: f64, delta: f64, t: f64, u: f64, v: f64) -> (f64, f64) {
    let xc = (alpha * t).exp() * ((-alpha * u).exp_m1() - (-alpha * v).exp_m1());
    let yc = (delta * t).exp() * (-delta * v).exp_m1();
    (xc, yc)
}

/// Joint MGF of the balanced triangular walk with rows `(alpha, delta - alpha)`
/// and `(0, delta)`.
///
/// Evaluated as `(x_c + (1 + y_c)^{alpha/delta})^{-x0/alpha} (1 + y_c)^{-y0/delta}`,
/// which is the product of the two `e^{-X(0)t}` and `e^{-Y(0)t}` factors with
/// their bracketed powers folded together; it is exactly 1 at the origin.
pub fn mgf_triangular(
    alpha: f64,
    delta: f64,
    x0: f64,
    y0: f64,
    t: f64,
    u: f64,
    v: f64,
) -> Result<f64> {
    check_triangular(alpha, delta)?;
    let (xc, yc) = characteristic_curves(alpha, delta, t, u, v);
    // 1 + y_c = e^{delta t}(e^{-delta v} - 1 + e^{-delta t})
    let inner = 1.0 + yc;
    let inner_pow = positive_power("mgf_triangular", inner, alpha / delta)?;
    let outer = xc + inner_pow;
    Ok(positive_power("mgf_triangular", outer, -x0 / alpha)?
        * positive_power("mgf_triangular", inner, -y0 / delta)?)
}

/// Exact means, second moments and covariances of the balanced triangular
/// walk.
pub fn moments_triangular(alpha: f64, delta: f64, x0: f64, y0: f64, t: f64) -> Result<MomentSet> {
    check_triangular(alpha, delta)?;
    let i = x0 + y0;
    let ea = (alpha * t).exp();
    let ed = (delta * t).exp();
    let e2a = (2.0 * alpha * t).exp();
    let e2d = (2.0 * delta * t).exp();
    let ead = ((alpha + delta) * t).exp();

    let mx = x0 * ea;
    let my = i * ed - x0 * ea;
    let exx = x0 * (alpha + x0) * e2a - alpha * x0 * ea;
    let exy = x0 * (alpha + i) * ead - x0 * (alpha + x0) * e2a;
    // The e^{delta t} term enters with a minus sign; the plus sign would
    // give E[Y(0)^2] = y0^2 + 2 delta (x0 + y0).
    let eyy = i * (delta + i) * e2d - 2.0 * x0 * (alpha + i) * ead - delta * i * ed
        + x0 * (alpha + x0) * e2a
        + alpha * x0 * ea;

    let vx = alpha * x0 * (e2a - ea);
    let cxy = alpha * x0 * (ead - e2a);
    let vy = delta * i * e2d - 2.0 * alpha * x0 * ead - delta * i * ed
        + alpha * x0 * e2a
        + alpha * x0 * ea;

    Ok(MomentSet {
        means: vec![mx, my],
        second_moments: vec![vec![exx, exy], vec![exy, eyy]],
        covariances: vec![vec![vx, cxy], vec![cxy, vy]],
    })
}

/// MGF of the total size `X(t) + Y(t)` of a balanced scheme with row sum
/// `delta`: `(1 - e^{delta t} + e^{delta (t - v)})^{-(x0 + y0)/delta}`.
pub fn mgf_total_balanced(delta: f64, x0: f64, y0: f64, t: f64, v: f64) -> Result<f64> {
    require(delta > 0.0, || {
        format!("delta must be positive, got {delta}")
    })?;
    let base = 1.0 + (delta * t).exp() * (-delta * v).exp_m1();
    positive_power("mgf_total_balanced", base, -(x0 + y0) / delta)
}

/// Probability that a balanced scheme started with total `i` has made
/// exactly `ell` transitions by time `t`:
/// `((i/delta)^(rising ell) / ell!) e^{-i t} (1 - e^{-delta t})^ell`.
pub fn kolmogorov_prob(i: f64, delta: f64, ell: u32, t: f64) -> f64 {
    let q = -(-delta * t).exp_m1();
    let tail = if ell == 0 { 1.0 } else { q.powi(ell as i32) };
    rising_factorial_over_factorial(i / delta, ell) * (-i * t).exp() * tail
}

fn check_dim(scheme: &Scheme, x: &[f64], n: usize) -> Result<()> {
    if x.len() == n {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "scheme {} has dimension {n}, initial state has {}",
            scheme.name(),
            x.len()
        )))
    }
}

/// Joint MGF `E[exp(<u, X(t)>)]` for any named scheme. Diagonal schemes
/// have independent coordinates, so their joint MGF is a product.
pub fn scheme_mgf(scheme: &Scheme, init: &InitialState, t: f64, u: &[f64]) -> Result<f64> {
    let x = init.coords();
    check_dim(scheme, x, u.len())?;
    match scheme {
        Scheme::DiagonalConstant { alphas } => {
            check_dim(scheme, x, alphas.len())?;
            alphas
                .iter()
                .zip(x)
                .zip(u)
                .try_fold(1.0, |acc, ((&a, &x0), &ui)| {
                    Ok(acc * mgf_diag_constant(a, x0, t, ui)?)
                })
        }
        Scheme::DiagonalExponential { rates } => {
            check_dim(scheme, x, rates.len())?;
            if let Some(r) = rates.iter().find(|&&r| r != 1.0) {
                return Err(Error::Unsupported(format!(
                    "closed-form MGF needs rate 1, got {r}"
                )));
            }
            x.iter().zip(u).try_fold(1.0, |acc, (&x0, &ui)| {
                Ok(acc * mgf_diag_exponential(x0, t, ui)?)
            })
        }
        Scheme::Ehrenfest { gamma } => {
            check_dim(scheme, x, 2)?;
            mgf_ehrenfest_joint(*gamma, x[0], x[1], t, u[0], u[1])
        }
        Scheme::Hill { gamma } => {
            check_dim(scheme, x, 2)?;
            mgf_hill_joint(*gamma, x[0], x[1], t, u[0], u[1])
        }
        Scheme::BalancedTriangular { alpha, delta } => {
            check_dim(scheme, x, 2)?;
            mgf_triangular(*alpha, *delta, x[0], x[1], t, u[0], u[1])
        }
        Scheme::General => Err(Error::Unsupported(
            "no closed-form MGF for a general scheme".into(),
        )),
    }
}

/// Exact first and second moments for any named scheme.
pub fn scheme_moments(scheme: &Scheme, init: &InitialState, t: f64) -> Result<MomentSet> {
    let x = init.coords();
    let diagonal = |per: Vec<MomentSet>| {
        let n = per.len();
        let means = per.iter().map(|m| m.means[0]).collect();
        let mut cov = vec![vec![0.0; n]; n];
        for (i, m) in per.iter().enumerate() {
            cov[i][i] = m.variance(0);
        }
        MomentSet::from_covariances(means, cov)
    };
    match scheme {
        Scheme::DiagonalConstant { alphas } => {
            check_dim(scheme, x, alphas.len())?;
            Ok(diagonal(
                alphas
                    .iter()
                    .zip(x)
                    .map(|(&a, &x0)| moments_diag_constant(a, x0, t))
                    .collect(),
            ))
        }
        Scheme::DiagonalExponential { rates } => {
            check_dim(scheme, x, rates.len())?;
            if let Some(r) = rates.iter().find(|&&r| r != 1.0) {
                return Err(Error::Unsupported(format!(
                    "closed-form moments need rate 1, got {r}"
                )));
            }
            Ok(diagonal(
                x.iter()
                    .map(|&x0| moments_diag_exponential(x0, t))
                    .collect(),
            ))
        }
        Scheme::Ehrenfest { gamma } => {
            check_dim(scheme, x, 2)?;
            Ok(moments_ehrenfest(*gamma, x[0], x[1], t))
        }
        Scheme::Hill { gamma } => {
            check_dim(scheme, x, 2)?;
            Ok(moments_hill(*gamma, x[0], x[1], t))
        }
        Scheme::BalancedTriangular { alpha, delta } => {
            check_dim(scheme, x, 2)?;
            moments_triangular(*alpha, *delta, x[0], x[1], t)
        }
        Scheme::General => Err(Error::Unsupported(
            "no closed-form moments for a general scheme".into(),
        )),
    }
}

/// Normalisation applied to a coordinate before comparing it with its
/// limit law at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scaling {
    /// `x e^{-rate t}`
    ExpDecay(f64),
    /// `x / t`
    InverseTime,
    /// No rescaling; the law is reached by the unscaled coordinate.
    Identity,
}

impl Scaling {
    pub fn apply(&self, x: f64, t: f64) -> f64 {
        match *self {
            Scaling::ExpDecay(rate) => x * (-rate * t).exp(),
            Scaling::InverseTime => x / t,
            Scaling::Identity => x,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitLaw {
    Gamma {
        shape: f64,
        scale: f64,
    },
    /// `spacing` times a Binomial(trials, p) count.
    Binomial {
        trials: u64,
        p: f64,
        spacing: f64,
    },
    /// Sum of `copies` independent Lambert variables, MGF `(T(s)/s)^copies`.
    LambertStar {
        copies: f64,
    },
}

impl LimitLaw {
    pub fn mean(&self) -> f64 {
        match *self {
            LimitLaw::Gamma { shape, scale } => shape * scale,
            LimitLaw::Binomial { trials, p, spacing } => spacing * trials as f64 * p,
            LimitLaw::LambertStar { copies } => copies,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            LimitLaw::Gamma { shape, scale } => shape * scale * scale,
            LimitLaw::Binomial { trials, p, spacing } => {
                spacing * spacing * trials as f64 * p * (1.0 - p)
            }
            LimitLaw::LambertStar { copies } => 2.0 * copies,
        }
    }

    pub fn mgf(&self, s: f64) -> Result<f64> {
        match *self {
            LimitLaw::Gamma { shape, scale } => {
                positive_power("gamma mgf", 1.0 - scale * s, -shape)
            }
            LimitLaw::Binomial { trials, p, spacing } => {
                Ok((1.0 + p * (spacing * s).exp_m1()).powi(trials as i32))
            }
            LimitLaw::LambertStar { copies } => {
                if s == 0.0 {
                    return Ok(1.0);
                }
                // e^{T(s)} = T(s)/s
                Ok((copies * tree_function(s)?).exp())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitSpec {
    pub scaling: Scaling,
    pub law: LimitLaw,
}

/// Per-coordinate limit laws for the schemes that have one.
pub fn limit_spec(scheme: &Scheme, init: &InitialState) -> Result<Vec<LimitSpec>> {
    let x = init.coords();
    let dim_ok = |n: usize| check_dim(scheme, x, n);
    match scheme {
        Scheme::DiagonalConstant { alphas } => {
            dim_ok(alphas.len())?;
            alphas
                .iter()
                .zip(x)
                .map(|(&a, &x0)| {
                    if a > 0.0 {
                        Ok(LimitSpec {
                            scaling: Scaling::ExpDecay(a),
                            law: LimitLaw::Gamma {
                                shape: x0 / a,
                                scale: a,
                            },
                        })
                    } else {
                        Err(Error::Unsupported(format!(
                            "no limit law for diagonal entry {a}"
                        )))
                    }
                })
                .collect()
        }
        Scheme::DiagonalExponential { rates } => {
            dim_ok(rates.len())?;
            rates
                .iter()
                .zip(x)
                .map(|(&r, &x0)| {
                    if r == 1.0 {
                        Ok(LimitSpec {
                            scaling: Scaling::ExpDecay(1.0),
                            law: LimitLaw::LambertStar { copies: x0 },
                        })
                    } else {
                        Err(Error::Unsupported(format!(
                            "Lambert limit is only known for exponential entries of rate 1, got {r}"
                        )))
                    }
                })
                .collect()
        }
        Scheme::Ehrenfest { gamma } => {
            dim_ok(2)?;
            let trials = ((x[0] + x[1]) / gamma).round() as u64;
            let spec = LimitSpec {
                scaling: Scaling::Identity,
                law: LimitLaw::Binomial {
                    trials,
                    p: 0.5,
                    spacing: *gamma,
                },
            };
            Ok(vec![spec, spec])
        }
        Scheme::Hill { gamma } => {
            dim_ok(2)?;
            let spec = LimitSpec {
                scaling: Scaling::InverseTime,
                law: LimitLaw::Gamma {
                    shape: (x[1] - x[0]) / gamma,
                    scale: gamma * gamma,
                },
            };
            Ok(vec![spec, spec])
        }
        Scheme::BalancedTriangular { .. } | Scheme::General => Err(Error::Unsupported(format!(
            "no limit law is provided for scheme {}",
            scheme.name()
        ))),
    }
}

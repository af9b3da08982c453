// Unused when std is linked (tests), where f64 has inherent methods.
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::Result;

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Residual of `d phi/dt + sum_i (1 - psi_i(u)) d phi/du_i` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeResidual {
    pub residual: f64,
    /// Largest magnitude among `d phi/dt` and the individual
    /// `(1 - psi_i) d phi/du_i` terms.
    pub dominant: f64,
}

impl PdeResidual {
    /// `|residual| / dominant`, or `|residual|` when every term vanishes.
    pub fn relative(&self) -> f64 {
        if self.dominant > 0.0 {
            self.residual.abs() / self.dominant
        } else {
            self.residual.abs()
        }
    }
}

/// Finite-difference residual of the MGF transport equation at `(t, u)`.
///
/// All partial derivatives are second-order central differences with step
/// `h`, so the stencil has `2c + 2` points; any stencil point outside the
/// domain of `phi` or `psi` surfaces as that function's error.
pub fn pde_residual<Phi, Psi>(phi: Phi, psi: Psi, t: f64, u: &[f64], h: f64) -> Result<PdeResidual>
where
    Phi: Fn(f64, &[f64]) -> Result<f64>,
    Psi: Fn(usize, &[f64]) -> Result<f64>,
{
    let dphi_dt = (phi(t + h, u)? - phi(t - h, u)?) / (2.0 * h);
    let mut residual = dphi_dt;
    let mut dominant = dphi_dt.abs();
    let mut shifted: Vec<f64> = u.to_vec();
    for i in 0..u.len() {
        shifted[i] = u[i] + h;
        let plus = phi(t, &shifted)?;
        shifted[i] = u[i] - h;
        let minus = phi(t, &shifted)?;
        shifted[i] = u[i];
        let term = (1.0 - psi(i, u)?) * (plus - minus) / (2.0 * h);
        residual += term;
        dominant = dominant.max(term.abs());
    }
    Ok(PdeResidual { residual, dominant })
}

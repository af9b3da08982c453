//! Numerical kernels used by the closed forms and by the oracles that check
//! them.

mod lambert;
mod matrix;
mod ode;
mod pde;
mod special;

pub use lambert::{lambert_w0, tree_function, NEG_INV_E};
pub use matrix::{matrix_exp, SquareMatrix};
pub use ode::{
    ode_second_moments_triangular, ode_solve_kolmogorov, ode_solve_mean, rk4, KolmogorovSolution,
    OdeSolution, TruncationWarning, KOLMOGOROV_MASS_TOLERANCE,
};
pub use pde::{pde_residual, PdeResidual, DEFAULT_FD_STEP};
pub use special::{
    hyp2f1_special, normal_quantile, normal_sf, rising_factorial, rising_factorial_over_factorial,
};

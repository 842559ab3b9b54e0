//! Dense real linear-algebra kernels: matrix exponential, continuous
//! Lyapunov solver, spectral queries, and weighted norms.
//!
//! All functions are pure and safe for concurrent use.

mod expm;
mod lyapunov;
mod spectral;

pub use expm::mat_exp;
pub use lyapunov::{lyapunov_solve, LYAPUNOV_RESIDUAL_TOL};
pub use spectral::{
    pencil_eig_extremes, solve_linear, spectral_report, sym_eig_extremes, weighted_norm,
    SpectralReport, COND_LIMIT, HURWITZ_TOL,
};

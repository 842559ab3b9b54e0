//! Contraction data of a single mode's flow in its Lyapunov norm.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::ModeSpec;
use crate::linalg::sym_eig_extremes;

/// Norm-equivalence constant `sqrt(lmax(P)/lmin(P))`.
///
/// With `P` solving the mode's Lyapunov equation the flow is
/// non-expansive in the `P`-norm, so two trajectories never separate by
/// more than this factor in the Euclidean norm.
pub fn contraction_factor(_mode: &ModeSpec, p: &DMatrix<f64>) -> Result<f64> {
    if p.clone().cholesky().is_none() {
        return Err(Error::Domain(
            "contraction_factor: P is not positive definite".into(),
        ));
    }
    let (lo, hi) = sym_eig_extremes(p)?;
    Ok((hi / lo).sqrt())
}

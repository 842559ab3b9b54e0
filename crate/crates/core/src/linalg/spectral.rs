//! Spectral queries, weighted norms, and linear solves shared by the model
//! builders and the certificate synthesis.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spectral abscissa below which a matrix is accepted as Hurwitz.
/// Values in `[-HURWITZ_TOL, 0)` are stable in exact arithmetic but are
/// flagged as marginal so near-zero modes surface instead of being
/// silently accepted.
pub const HURWITZ_TOL: f64 = 1e-9;

/// Condition-number threshold past which a solve is refused.
pub const COND_LIMIT: f64 = 1e12;

/// Eigenvalue summary of a (generally nonsymmetric) real matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralReport {
    /// Eigenvalues as (re, im) pairs.
    pub eigenvalues: Vec<(f64, f64)>,
    /// Largest real part over the spectrum.
    pub spectral_abscissa: f64,
    /// True iff `spectral_abscissa < -1e-9`.
    pub is_hurwitz: bool,
    /// True when the abscissa falls in `[-1e-9, 0)`: stable but too close
    /// to the axis to certify.
    pub marginally_hurwitz: bool,
}

/// Eigenvalues, spectral abscissa, and the Hurwitz flag of a square matrix.
pub fn spectral_report(a: &DMatrix<f64>) -> Result<SpectralReport> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "spectral_report needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let eig: Vec<Complex<f64>> = a.clone().complex_eigenvalues().iter().copied().collect();
    let abscissa = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(SpectralReport {
        eigenvalues: eig.iter().map(|z| (z.re, z.im)).collect(),
        spectral_abscissa: abscissa,
        is_hurwitz: abscissa < -HURWITZ_TOL,
        marginally_hurwitz: (-HURWITZ_TOL..0.0).contains(&abscissa),
    })
}

fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Extreme eigenvalues `(min, max)` of a symmetric matrix.
///
/// Asymmetry beyond `1e-12` relative to the largest entry is a domain error.
pub fn sym_eig_extremes(p: &DMatrix<f64>) -> Result<(f64, f64)> {
    if !p.is_square() {
        return Err(Error::Dimension(format!(
            "sym_eig_extremes needs a square matrix, got {}x{}",
            p.nrows(),
            p.ncols()
        )));
    }
    let scale = max_abs(p).max(1.0);
    let asym = (p - p.transpose()).iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if asym > 1e-12 * scale {
        return Err(Error::Domain(format!(
            "sym_eig_extremes: matrix asymmetric (max |P - P^T| = {asym:.3e})"
        )));
    }
    let sym = (p + p.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in eig.eigenvalues.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

/// Weighted norm `(v^T P v)^{1/2}` for SPD `P`.
pub fn weighted_norm(p: &DMatrix<f64>, v: &DVector<f64>) -> Result<f64> {
    if p.nrows() != v.len() || p.ncols() != v.len() {
        return Err(Error::Dimension(format!(
            "weighted_norm: P is {}x{} but v has length {}",
            p.nrows(),
            p.ncols(),
            v.len()
        )));
    }
    let q = (v.transpose() * p * v)[(0, 0)];
    // Rounding can push a tiny positive form below zero.
    Ok(q.max(0.0).sqrt())
}

/// Solves `A x = b` for square well-conditioned `A`.
///
/// The condition number is estimated from the singular values; estimates
/// above 1e12 are refused as singular.
pub fn solve_linear(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "solve_linear needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.nrows() != b.len() {
        return Err(Error::Dimension(format!(
            "solve_linear: A is {}x{} but b has length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let sv = a.clone().singular_values();
    let smax = sv.iter().fold(0.0f64, |m, x| m.max(*x));
    let smin = sv.iter().fold(f64::INFINITY, |m, x| m.min(*x));
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if cond > COND_LIMIT {
        return Err(Error::Singular { cond });
    }
    let lu = a.clone().lu();
    let mut x = lu
        .solve(b)
        .ok_or(Error::Singular { cond: f64::INFINITY })?;
    // One round of iterative refinement tightens the residual on
    // moderately conditioned systems.
    let r = b - a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    Ok(x)
}

/// Extreme generalized eigenvalues `(min, max)` of the symmetric pencil
/// `(A, B)` with `B` SPD, computed by Cholesky whitening
/// `L^{-1} A L^{-T}` where `B = L L^T`.
pub fn pencil_eig_extremes(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(f64, f64)> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() || !a.is_square() {
        return Err(Error::Dimension(
            "pencil_eig_extremes: A and B must be square with equal sizes".into(),
        ));
    }
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Domain("pencil_eig_extremes: B is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Domain("pencil_eig_extremes: Cholesky factor not invertible".into()))?;
    let w = &linv * a * linv.transpose();
    sym_eig_extremes(&((&w + w.transpose()) * 0.5))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example1_a1() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[-0.6, 2.98, -2.98, -0.6])
    }

    #[test]
    fn report_for_rotation_block() {
        let r = spectral_report(&example1_a1()).unwrap();
        assert!(r.is_hurwitz);
        assert!(!r.marginally_hurwitz);
        assert!((r.spectral_abscissa + 0.6).abs() < 1e-10);
        let mut ims: Vec<f64> = r.eigenvalues.iter().map(|e| e.1).collect();
        ims.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ims[0] + 2.98).abs() < 1e-10);
        assert!((ims[1] - 2.98).abs() < 1e-10);
        for (re, _) in &r.eigenvalues {
            assert!((re + 0.6).abs() < 1e-10);
        }
    }

    #[test]
    fn identity_is_not_hurwitz() {
        let r = spectral_report(&DMatrix::identity(2, 2)).unwrap();
        assert!(!r.is_hurwitz);
        assert!((r.spectral_abscissa - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigen_extremes_of_diagonal() {
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 5.0]);
        let (lo, hi) = sym_eig_extremes(&p).unwrap();
        assert!((lo - 1.0).abs() < 1e-12);
        assert!((hi - 5.0).abs() < 1e-12);
        let (lo, hi) = sym_eig_extremes(&DMatrix::identity(3, 3)).unwrap();
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_asymmetric() {
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(sym_eig_extremes(&p), Err(Error::Domain(_))));
    }

    #[test]
    fn euclidean_weighted_norm() {
        let v = DVector::from_vec(vec![3.0, 4.0]);
        let n = weighted_norm(&DMatrix::identity(2, 2), &v).unwrap();
        assert!((n - 5.0).abs() < 1e-12);
        let p = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0]);
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        assert!((weighted_norm(&p, &e1).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_norm_dimension_mismatch() {
        let v = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert!(weighted_norm(&DMatrix::identity(2, 2), &v).is_err());
    }

    #[test]
    fn solve_recovers_example_equilibria() {
        let b1 = DVector::from_vec(vec![-2.98, 0.6]);
        let x = solve_linear(&example1_a1(), &(-&b1)).unwrap();
        assert!((x[0] - 0.0).abs() < 1e-12);
        assert!((x[1] - 1.0).abs() < 1e-12);

        let a2 = DMatrix::from_row_slice(2, 2, &[-0.4, 3.24, -3.24, -0.4]);
        let b2 = DVector::from_vec(vec![-6.48, 0.8]);
        let x = solve_linear(&a2, &(-&b2)).unwrap();
        assert!((x[0] - 0.0).abs() < 1e-12);
        assert!((x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn solve_identity_returns_rhs() {
        let b = DVector::from_vec(vec![1.5, -2.5, 0.25]);
        let x = solve_linear(&DMatrix::identity(3, 3), &b).unwrap();
        assert!((&x - &b).amax() < 1e-15);
    }

    #[test]
    fn solve_rejects_singular() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let b = DVector::from_vec(vec![1.0, 1.0]);
        assert!(matches!(solve_linear(&a, &b), Err(Error::Singular { .. })));
    }

    #[test]
    fn pencil_of_identity_pair() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        let b = DMatrix::identity(2, 2);
        let (lo, hi) = pencil_eig_extremes(&a, &b).unwrap();
        assert!((lo - 2.0).abs() < 1e-12);
        assert!((hi - 3.0).abs() < 1e-12);
    }
}
